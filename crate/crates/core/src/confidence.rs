//! Segment-level confidence scores for a diarization hypothesis.
//!
//! Every method works from embeddings mapped onto hypothesis segments by
//! window midpoint, and speaker centroids built from those embeddings:
//!
//! * [`Method::Cosine`]: mean cosine similarity of a segment's embeddings to
//!   its speaker's centroid.
//! * [`Method::Local`]: the same after iteratively pruning outlying cluster
//!   members (cosine distance above mean + 2 std) and re-estimating centroids.
//! * [`Method::Silhouette`]: mean of `(b - a) / max(a, b)` with `a` the cosine
//!   distance to the own centroid and `b` to the closest other centroid;
//!   falls back to the cosine score when fewer than two centroids exist.
//! * [`Method::Spectral`]: the cosine score computed on spectral-basis rows
//!   instead of raw embeddings. Needs the clustering state of a spectral run.
//!
//! Segments without any embedding get [`ConfidenceConfig::uncovered_score`]
//! and are flagged.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cosine, mean_vector, norm, Scalar};
use crate::spectral::{ClusterAssignment, SpectralDecomposition};
use crate::types::{Diarization, EmbeddingTrack, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cosine,
    Local,
    Silhouette,
    Spectral,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Cosine, Method::Local, Method::Silhouette, Method::Spectral];

    /// Methods that only need embeddings and a hypothesis.
    pub const BLACK_BOX: [Method; 3] = [Method::Cosine, Method::Local, Method::Silhouette];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Cosine => "cosine",
            Method::Local => "local",
            Method::Silhouette => "silhouette",
            Method::Spectral => "spectral",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cosine" => Ok(Method::Cosine),
            "local" => Ok(Method::Local),
            "silhouette" => Ok(Method::Silhouette),
            "spectral" => Ok(Method::Spectral),
            other => Err(Error::InvalidArgument(format!("unknown confidence method '{other}'"))),
        }
    }
}

/// A confidence score attached to one hypothesis segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceAnnotation {
    pub segment: Segment,
    pub method: Method,
    pub score: f64,
    /// No embedding supported this segment; `score` is the configured floor.
    pub uncovered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceConfig {
    pub uncovered_score: f64,
    /// Local method: stop once the centroid moves less than this (cosine distance).
    pub local_eps: f64,
    pub local_max_iters: usize,
}

impl Default for ConfidenceConfig {
    fn default() -> Self {
        Self { uncovered_score: -1.0, local_eps: 1e-4, local_max_iters: 20 }
    }
}

/// Embedding indices per hypothesis segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentEmbeddingMap {
    /// Parallel to the diarization's segments.
    pub per_segment: Vec<Vec<usize>>,
    pub unassigned: Vec<usize>,
}

impl SegmentEmbeddingMap {
    pub fn is_uncovered(&self, segment: usize) -> bool {
        self.per_segment[segment].is_empty()
    }
}

/// Assign every embedding whose window midpoint lies in a segment to that
/// segment (the first one in diarization order if hypothesis segments overlap).
pub fn map_embeddings_to_segments<T: Scalar>(d: &Diarization, track: &EmbeddingTrack<T>) -> SegmentEmbeddingMap {
    let segs = d.segments();
    let mut per_segment = vec![Vec::new(); segs.len()];
    let mut unassigned = Vec::new();
    for (e_idx, e) in track.embeddings().iter().enumerate() {
        let m = e.interval.midpoint();
        let upper = segs.partition_point(|s| s.start() <= m);
        match segs[..upper].iter().position(|s| s.interval.contains(m)) {
            Some(s_idx) => per_segment[s_idx].push(e_idx),
            None => unassigned.push(e_idx),
        }
    }
    SegmentEmbeddingMap { per_segment, unassigned }
}

/// Mean embedding of one speaker; `vector` is `None` when the speaker has no
/// embeddings (or they cancel to zero).
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerCentroid<T> {
    pub speaker: String,
    pub vector: Option<Vec<T>>,
}

impl<T: Scalar> SpeakerCentroid<T> {
    pub fn is_defined(&self) -> bool {
        self.vector.is_some()
    }
}

/// Embedding indices of every speaker, speakers in sorted order.
fn members_by_speaker(d: &Diarization, map: &SegmentEmbeddingMap) -> BTreeMap<String, Vec<usize>> {
    let mut out: BTreeMap<String, Vec<usize>> = d.speakers().into_iter().map(|s| (s, Vec::new())).collect();
    for (seg, idx) in d.segments().iter().zip(&map.per_segment) {
        out.get_mut(&seg.speaker).expect("speaker listed").extend_from_slice(idx);
    }
    out
}

fn centroid_of<T: Scalar>(vectors: &[&[T]], members: &[usize]) -> Option<Vec<T>> {
    let c = mean_vector(members.iter().map(|&i| vectors[i]))?;
    c.iter().any(|x| *x != T::zero()).then_some(c)
}

fn centroids_from<T: Scalar>(d: &Diarization, map: &SegmentEmbeddingMap, vectors: &[&[T]]) -> Vec<SpeakerCentroid<T>> {
    members_by_speaker(d, map)
        .into_iter()
        .map(|(speaker, members)| SpeakerCentroid { vector: centroid_of(vectors, &members), speaker })
        .collect()
}

/// Embeddings scaled to unit length, so a centroid weighs every embedding
/// by direction only.
fn unit_vectors<T: Scalar>(track: &EmbeddingTrack<T>) -> Vec<Vec<T>> {
    track
        .vectors()
        .map(|v| {
            let n = norm(v);
            v.iter().map(|&x| x / n).collect()
        })
        .collect()
}

fn slices<T>(owned: &[Vec<T>]) -> Vec<&[T]> {
    owned.iter().map(Vec::as_slice).collect()
}

/// Per-speaker mean of the unit-normalized embeddings mapped onto that
/// speaker's segments.
pub fn compute_centroids<T: Scalar>(
    d: &Diarization,
    map: &SegmentEmbeddingMap,
    track: &EmbeddingTrack<T>,
) -> Vec<SpeakerCentroid<T>> {
    centroids_from(d, map, &slices(&unit_vectors(track)))
}

/// Score each segment as the mean of `per_embedding` over its embeddings.
/// `per_embedding` returns `None` when the score is undefined, which marks
/// the segment uncovered.
fn aggregate<F>(d: &Diarization, map: &SegmentEmbeddingMap, method: Method, cfg: &ConfidenceConfig, per_embedding: F) -> Vec<ConfidenceAnnotation>
where
    F: Fn(&Segment, usize) -> Option<f64>,
{
    d.segments()
        .iter()
        .zip(&map.per_segment)
        .map(|(seg, idx)| {
            let scores: Option<Vec<f64>> = idx.iter().map(|&e| per_embedding(seg, e)).collect();
            let (score, uncovered) = match scores {
                Some(s) if !s.is_empty() => (s.iter().sum::<f64>() / s.len() as f64, false),
                _ => (cfg.uncovered_score, true),
            };
            ConfidenceAnnotation { segment: seg.clone(), method, score, uncovered }
        })
        .collect()
}

fn centroid_lookup<T: Scalar>(centroids: &[SpeakerCentroid<T>]) -> BTreeMap<&str, &[T]> {
    centroids
        .iter()
        .filter_map(|c| c.vector.as_deref().map(|v| (c.speaker.as_str(), v)))
        .collect()
}

fn cosine_scores_on<T: Scalar>(
    d: &Diarization,
    map: &SegmentEmbeddingMap,
    vectors: &[&[T]],
    centroids: &[SpeakerCentroid<T>],
    method: Method,
    cfg: &ConfidenceConfig,
) -> Vec<ConfidenceAnnotation> {
    let lookup = centroid_lookup(centroids);
    aggregate(d, map, method, cfg, |seg, e| {
        let c = lookup.get(seg.speaker.as_str())?;
        cosine(vectors[e], c).map(Scalar::to_f64_lossy)
    })
}

/// Mean cosine similarity of each segment's embeddings to its speaker centroid.
pub fn cosine_similarity_score<T: Scalar>(
    d: &Diarization,
    map: &SegmentEmbeddingMap,
    track: &EmbeddingTrack<T>,
    cfg: &ConfidenceConfig,
) -> Vec<ConfidenceAnnotation> {
    let units = unit_vectors(track);
    let vectors = slices(&units);
    let centroids = centroids_from(d, map, &vectors);
    cosine_scores_on(d, map, &vectors, &centroids, Method::Cosine, cfg)
}

/// Iteratively pruned centroid of one cluster.
///
/// Each round drops members whose cosine distance to the current centroid
/// exceeds mean + 2 std of the members' distances and recomputes the centroid
/// from the survivors. A round whose centroid moves by less than `eps` (cosine
/// distance) is not applied and ends the loop. Returns the centroid and the
/// number of applied rounds.
pub fn pruned_centroid<T: Scalar>(vectors: &[&[T]], members: &[usize], eps: f64, max_iters: usize) -> Option<(Vec<T>, usize)> {
    let mut centroid = centroid_of(vectors, members)?;
    let mut current: Vec<usize> = members.to_vec();
    let mut applied = 0;
    for _ in 0..max_iters {
        let dists: Vec<f64> = current
            .iter()
            .map(|&i| cosine(vectors[i], &centroid).map_or(2.0, |c| 1.0 - c.to_f64_lossy()))
            .collect();
        let n = dists.len() as f64;
        let mu = dists.iter().sum::<f64>() / n;
        let sigma = (dists.iter().map(|d| (d - mu) * (d - mu)).sum::<f64>() / n).sqrt();
        let cut = mu + 2.0 * sigma;
        let survivors: Vec<usize> = current.iter().zip(&dists).filter(|(_, &d)| d <= cut).map(|(&i, _)| i).collect();
        let Some(next) = centroid_of(vectors, &survivors) else { break };
        let moved = cosine(&centroid, &next).map_or(2.0, |c| 1.0 - c.to_f64_lossy());
        if moved < eps {
            break;
        }
        centroid = next;
        current = survivors;
        applied += 1;
    }
    Some((centroid, applied))
}

/// Cosine score against outlier-pruned centroids. Every segment, including
/// those whose embeddings were pruned, is scored against the final centroid.
pub fn local_confidence_score<T: Scalar>(
    d: &Diarization,
    map: &SegmentEmbeddingMap,
    track: &EmbeddingTrack<T>,
    cfg: &ConfidenceConfig,
) -> Vec<ConfidenceAnnotation> {
    let units = unit_vectors(track);
    let vectors = slices(&units);
    let centroids: Vec<SpeakerCentroid<T>> = members_by_speaker(d, map)
        .into_iter()
        .map(|(speaker, members)| SpeakerCentroid {
            vector: pruned_centroid(&vectors, &members, cfg.local_eps, cfg.local_max_iters).map(|(c, _)| c),
            speaker,
        })
        .collect();
    cosine_scores_on(d, map, &vectors, &centroids, Method::Local, cfg)
}

/// `(b - a) / max(a, b)`, zero when both distances are zero.
pub fn silhouette_value(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m <= 0.0 {
        0.0
    } else {
        (b - a) / m
    }
}

/// Centroid-based silhouette score averaged over each segment's embeddings.
pub fn silhouette_score<T: Scalar>(
    d: &Diarization,
    map: &SegmentEmbeddingMap,
    track: &EmbeddingTrack<T>,
    cfg: &ConfidenceConfig,
) -> Vec<ConfidenceAnnotation> {
    let units = unit_vectors(track);
    let vectors = slices(&units);
    let centroids = centroids_from(d, map, &vectors);
    let lookup = centroid_lookup(&centroids);
    if lookup.len() < 2 {
        return cosine_scores_on(d, map, &vectors, &centroids, Method::Silhouette, cfg);
    }
    let distance = |x: &[T], c: &[T]| cosine(x, c).map(|s| 1.0 - s.to_f64_lossy());
    aggregate(d, map, Method::Silhouette, cfg, |seg, e| {
        let x = vectors[e];
        let a = distance(x, lookup.get(seg.speaker.as_str())?)?;
        let b = lookup
            .iter()
            .filter(|(spk, _)| **spk != seg.speaker.as_str())
            .filter_map(|(_, c)| distance(x, c))
            .fold(f64::INFINITY, f64::min);
        b.is_finite().then(|| silhouette_value(a, b))
    })
}

/// White-box clustering state saved from a spectral run: per-embedding basis
/// rows and cluster labels, aligned with the embedding track.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis<T> {
    pub conversation_id: String,
    pub num_speakers: usize,
    pub labels: Vec<usize>,
    /// One `num_speakers`-dim row per embedding.
    pub rows: Vec<Vec<T>>,
}

impl<T: Scalar> SpectralBasis<T> {
    pub fn from_decomposition(
        conversation_id: impl Into<String>,
        decomposition: &SpectralDecomposition<T>,
        assignment: &ClusterAssignment,
    ) -> Self {
        Self {
            conversation_id: conversation_id.into(),
            num_speakers: decomposition.num_speakers(),
            labels: assignment.labels.clone(),
            rows: (0..decomposition.len()).map(|i| decomposition.basis_row(i).to_vec()).collect(),
        }
    }
}

/// Cosine score in the spectral basis: speaker centroids are means of the
/// basis rows mapped onto each speaker's segments.
pub fn spectral_clustering_score<T: Scalar>(
    basis: Option<&SpectralBasis<T>>,
    d: &Diarization,
    map: &SegmentEmbeddingMap,
    track_len: usize,
    cfg: &ConfidenceConfig,
) -> Result<Vec<ConfidenceAnnotation>> {
    let unavailable = || Error::BasisUnavailable(d.conversation_id().to_owned());
    let basis = basis.ok_or_else(unavailable)?;
    if basis.conversation_id != d.conversation_id() || basis.rows.len() != track_len {
        return Err(unavailable());
    }
    let vectors: Vec<&[T]> = basis.rows.iter().map(Vec::as_slice).collect();
    let centroids = centroids_from(d, map, &vectors);
    Ok(cosine_scores_on(d, map, &vectors, &centroids, Method::Spectral, cfg))
}

/// Run one method end to end for a conversation.
pub fn score<T: Scalar>(
    method: Method,
    d: &Diarization,
    track: &EmbeddingTrack<T>,
    basis: Option<&SpectralBasis<T>>,
    cfg: &ConfidenceConfig,
) -> Result<Vec<ConfidenceAnnotation>> {
    let map = map_embeddings_to_segments(d, track);
    Ok(match method {
        Method::Cosine => cosine_similarity_score(d, &map, track, cfg),
        Method::Local => local_confidence_score(d, &map, track, cfg),
        Method::Silhouette => silhouette_score(d, &map, track, cfg),
        Method::Spectral => spectral_clustering_score(basis, d, &map, track.len(), cfg)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::TimeInterval;
    use crate::types::Embedding;

    fn iv(s: f64, e: f64) -> TimeInterval {
        TimeInterval::new(s, e).unwrap()
    }

    fn seg(s: f64, e: f64, spk: &str) -> Segment {
        Segment::new("c", iv(s, e), spk).unwrap()
    }

    /// One embedding per second: window `[i, i + 1)`, midpoint `i + 0.5`.
    fn unit_track(vectors: &[Vec<f64>]) -> EmbeddingTrack<f64> {
        let e = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| Embedding::new(v.clone(), iv(i as f64, i as f64 + 1.0)).unwrap())
            .collect();
        EmbeddingTrack::new("c", e).unwrap()
    }

    fn unit(deg: f64) -> Vec<f64> {
        let r = deg.to_radians();
        vec![r.cos(), r.sin()]
    }

    #[test]
    fn midpoint_mapping() {
        let track = EmbeddingTrack::new("c", vec![Embedding::new(vec![1.0, 0.0], iv(0.0, 1.5)).unwrap()]).unwrap();
        let d = Diarization::new("c", vec![seg(0.5, 2.0, "a")]).unwrap();
        assert_eq!(map_embeddings_to_segments(&d, &track).per_segment, vec![vec![0]]);

        // midpoint 0.75 sits exactly on the boundary between the two segments
        let d = Diarization::new("c", vec![seg(0.0, 0.75, "a"), seg(0.75, 2.0, "b")]).unwrap();
        assert_eq!(map_embeddings_to_segments(&d, &track).per_segment, vec![vec![], vec![0]]);

        let m = map_embeddings_to_segments(&Diarization::empty("c"), &track);
        assert!(m.per_segment.is_empty());
        assert_eq!(m.unassigned, vec![0]);
    }

    #[test]
    fn centroid_examples() {
        let track = unit_track(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![3.0, 3.0]]);
        let d = Diarization::new("c", vec![seg(0.0, 2.0, "a"), seg(2.0, 3.0, "b"), seg(5.0, 6.0, "z")]).unwrap();
        let map = map_embeddings_to_segments(&d, &track);
        let c = compute_centroids(&d, &map, &track);
        assert_eq!(c[0], SpeakerCentroid { speaker: "a".into(), vector: Some(vec![0.5, 0.5]) });
        // embeddings enter the mean at unit length
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(c[1], SpeakerCentroid { speaker: "b".into(), vector: Some(vec![h, h]) });
        assert_eq!(c[2], SpeakerCentroid { speaker: "z".into(), vector: None });
    }

    #[test]
    fn cosine_examples() {
        // centroid of +-x degrees around 0 points along 0 degrees
        let a = 0.8f64.acos().to_degrees();
        let b = 0.6f64.acos().to_degrees();
        let track = unit_track(&[unit(0.0), unit(a), unit(-a), unit(b), unit(-b)]);
        let d = Diarization::new("c", vec![seg(0.0, 1.0, "s"), seg(1.0, 2.0, "s"), seg(2.0, 3.0, "s"), seg(3.0, 5.0, "s"), seg(9.0, 10.0, "s")])
            .unwrap();
        let map = map_embeddings_to_segments(&d, &track);
        let out = cosine_similarity_score(&d, &map, &track, &ConfidenceConfig::default());
        assert!((out[0].score - 1.0).abs() < 1e-12);
        assert!((out[1].score - 0.8).abs() < 1e-12);
        assert!((out[3].score - 0.6).abs() < 1e-12);
        assert_eq!((out[4].score, out[4].uncovered), (-1.0, true));
        assert!(out.iter().all(|a| a.method == Method::Cosine));

        // one segment covering the 0.8 and 0.6 embeddings
        let track = unit_track(&[unit(0.0), unit(a), unit(-b), unit(-a), unit(b), unit(0.0)]);
        let d = Diarization::new("c", vec![seg(0.0, 1.0, "s"), seg(1.0, 3.0, "s"), seg(3.0, 6.0, "s")]).unwrap();
        let map = map_embeddings_to_segments(&d, &track);
        let c = compute_centroids(&d, &map, &track)[0].vector.clone().unwrap();
        assert!(c[1].abs() < 1e-12);
        let out = cosine_similarity_score(&d, &map, &track, &ConfidenceConfig::default());
        assert!((out[1].score - 0.7).abs() < 1e-12);
    }

    #[test]
    fn silhouette_formula() {
        assert!((silhouette_value(0.2, 0.5) - 0.6).abs() < 1e-12);
        assert_eq!(silhouette_value(0.3, 0.3), 0.0);
        assert_eq!(silhouette_value(0.0, 0.0), 0.0);
        assert_eq!(silhouette_value(0.0, 0.4), 1.0);
        assert!((silhouette_value(0.5, 0.2) + 0.6).abs() < 1e-12);
    }

    #[test]
    fn silhouette_single_speaker_falls_back_to_cosine() {
        let track = unit_track(&[unit(0.0), unit(20.0), unit(-35.0), unit(5.0)]);
        let d = Diarization::new("c", vec![seg(0.0, 2.0, "only"), seg(2.0, 4.0, "only")]).unwrap();
        let map = map_embeddings_to_segments(&d, &track);
        let cfg = ConfidenceConfig::default();
        let cos = cosine_similarity_score(&d, &map, &track, &cfg);
        let sil = silhouette_score(&d, &map, &track, &cfg);
        for (c, s) in cos.iter().zip(&sil) {
            assert_eq!(c.score, s.score);
            assert_eq!(s.method, Method::Silhouette);
        }
    }

    #[test]
    fn silhouette_two_speakers_positive_when_closer_to_own() {
        let track = unit_track(&[unit(0.0), unit(10.0), unit(90.0), unit(100.0)]);
        let d = Diarization::new("c", vec![seg(0.0, 2.0, "a"), seg(2.0, 4.0, "b")]).unwrap();
        let map = map_embeddings_to_segments(&d, &track);
        let out = silhouette_score(&d, &map, &track, &ConfidenceConfig::default());
        assert!(out.iter().all(|a| a.score > 0.0 && a.score <= 1.0));
    }

    #[test]
    fn local_identical_vectors() {
        let v = vec![0.3, 0.7];
        let vectors: Vec<&[f64]> = vec![&v, &v, &v];
        let (c, applied) = pruned_centroid(&vectors, &[0, 1, 2], 1e-4, 20).unwrap();
        assert_eq!(applied, 0);
        assert!((cosine(&c, &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn local_drops_far_outlier() {
        // ten vectors within +-4.5 degrees of 0 plus one at 90 degrees
        let mut vs: Vec<Vec<f64>> = (0..10).map(|i| unit(-4.5 + i as f64)).collect();
        vs.push(unit(90.0));
        let track = unit_track(&vs);
        let segs: Vec<Segment> = (0..11).map(|i| seg(i as f64, i as f64 + 1.0, "s")).collect();
        let d = Diarization::new("c", segs).unwrap();
        let map = map_embeddings_to_segments(&d, &track);
        let cfg = ConfidenceConfig::default();
        let units = unit_vectors(&track);
        let vectors = slices(&units);
        let (centroid, applied) = pruned_centroid(&vectors, &(0..11).collect::<Vec<_>>(), cfg.local_eps, cfg.local_max_iters).unwrap();
        assert_eq!(applied, 1);
        // mean of the ten tight vectors lies along 0 degrees
        assert!(centroid[1].abs() / centroid[0] < 1e-12);

        let local = local_confidence_score(&d, &map, &track, &cfg);
        let plain = cosine_similarity_score(&d, &map, &track, &cfg);
        let lowest = local.iter().enumerate().min_by(|a, b| a.1.score.total_cmp(&b.1.score)).unwrap().0;
        assert_eq!(lowest, 10);
        assert!(local[10].score <= plain[10].score);
        let mean = |v: &[ConfidenceAnnotation]| v.iter().map(|a| a.score).sum::<f64>() / v.len() as f64;
        assert!(mean(&local[..10]) > mean(&plain[..10]));
        // frozen from the closed form: cos(90 deg) against a centroid along 0 degrees
        assert!(local[10].score.abs() < 1e-12);
    }

    #[test]
    fn infinite_eps_matches_cosine() {
        let mut vs: Vec<Vec<f64>> = (0..10).map(|i| unit(-4.5 + i as f64)).collect();
        vs.push(unit(90.0));
        let track = unit_track(&vs);
        let d = Diarization::new("c", (0..11).map(|i| seg(i as f64, i as f64 + 1.0, "s")).collect()).unwrap();
        let map = map_embeddings_to_segments(&d, &track);
        let cfg = ConfidenceConfig { local_eps: f64::INFINITY, ..Default::default() };
        let local = local_confidence_score(&d, &map, &track, &cfg);
        let plain = cosine_similarity_score(&d, &map, &track, &cfg);
        for (l, p) in local.iter().zip(&plain) {
            assert_eq!(l.score, p.score);
        }
    }

    #[test]
    fn spectral_requires_basis() {
        let track = unit_track(&[unit(0.0), unit(5.0)]);
        let d = Diarization::new("c", vec![seg(0.0, 2.0, "spk0")]).unwrap();
        let err = score(Method::Spectral, &d, &track, None, &ConfidenceConfig::default()).unwrap_err();
        assert!(matches!(err, Error::BasisUnavailable(_)));
    }

    #[test]
    fn spectral_examples() {
        let track = unit_track(&[unit(0.0), unit(5.0), unit(10.0)]);
        let d = Diarization::new("c", vec![seg(0.0, 2.0, "spk0"), seg(2.0, 3.0, "spk1")]).unwrap();
        let basis = SpectralBasis {
            conversation_id: "c".into(),
            num_speakers: 2,
            labels: vec![0, 0, 1],
            rows: vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        };
        let out = score(Method::Spectral, &d, &track, Some(&basis), &ConfidenceConfig::default()).unwrap();
        assert_eq!(out.iter().map(|a| a.score).collect::<Vec<_>>(), vec![1.0, 1.0]);

        let basis1 = SpectralBasis { conversation_id: "c".into(), num_speakers: 1, labels: vec![0; 3], rows: vec![vec![0.4], vec![0.6], vec![0.5]] };
        let d1 = Diarization::new("c", vec![seg(0.0, 1.0, "spk0"), seg(1.0, 3.0, "spk0")]).unwrap();
        let out = score(Method::Spectral, &d1, &track, Some(&basis1), &ConfidenceConfig::default()).unwrap();
        assert!(out.iter().all(|a| (a.score - 1.0).abs() < 1e-12));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }
}
