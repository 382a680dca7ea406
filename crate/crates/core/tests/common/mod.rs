//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the metric code under test.
#![allow(dead_code)]

use diarconf::{Diarization, Embedding, EmbeddingTrack, Segment, SynthConversation, SynthSpec, TimeInterval};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FRAME: f64 = 0.01;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OracleDer {
    pub miss: f64,
    pub false_alarm: f64,
    pub speaker_error: f64,
    pub scored: f64,
}

/// Boundaries of each speaker's merged speech, the points collars surround.
fn speaker_boundaries(d: &Diarization) -> Vec<f64> {
    d.speakers()
        .iter()
        .flat_map(|s| d.speaker_timeline(s).intervals().iter().flat_map(|iv| [iv.start(), iv.end()]).collect::<Vec<_>>())
        .collect()
}

fn active(d: &Diarization, speakers: &[String], t: f64) -> Vec<usize> {
    speakers
        .iter()
        .enumerate()
        .filter(|(_, s)| d.segments().iter().any(|seg| &seg.speaker == *s && seg.start() <= t && t < seg.end()))
        .map(|(i, _)| i)
        .collect()
}

/// Best total of `weights[h][assign[h]]` over injective partial assignments
/// of rows to columns, by exhaustive search. Returns value and assignment.
pub fn brute_force_assignment(weights: &[Vec<f64>]) -> (f64, Vec<Option<usize>>) {
    fn go(h: usize, w: &[Vec<f64>], used: &mut Vec<bool>, cur: &mut Vec<Option<usize>>, best: &mut (f64, Vec<Option<usize>>), acc: f64) {
        if h == w.len() {
            if acc > best.0 {
                *best = (acc, cur.clone());
            }
            return;
        }
        // leaving a row free only helps when columns run out
        let free_cols = used.iter().filter(|u| !**u).count();
        let rows_left = w.len() - h;
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                cur.push(Some(c));
                go(h + 1, w, used, cur, best, acc + w[h][c]);
                cur.pop();
                used[c] = false;
            }
        }
        if free_cols < rows_left || free_cols == 0 {
            cur.push(None);
            go(h + 1, w, used, cur, best, acc);
            cur.pop();
        }
    }
    let cols = weights.first().map_or(0, Vec::len);
    let mut best = (f64::NEG_INFINITY, vec![]);
    go(0, weights, &mut vec![false; cols], &mut Vec::new(), &mut best, 0.0);
    best
}

/// Frame-sampled DER: every 10 ms frame center is classified on its own and
/// the speaker mapping is found by exhaustive search.
pub fn frame_der(reference: &Diarization, hypothesis: &Diarization, collar: f64, exclude_overlap: bool, exclude: &[(f64, f64)]) -> OracleDer {
    let end = reference
        .segments()
        .iter()
        .chain(hypothesis.segments())
        .map(|s| s.end())
        .fold(0.0, f64::max);
    let bounds = speaker_boundaries(reference);
    let rs = reference.speakers();
    let hs = hypothesis.speakers();
    let frames = (end / FRAME).ceil() as usize;
    let mut scored_frames: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for k in 0..frames {
        let t = (k as f64 + 0.5) * FRAME;
        if bounds.iter().any(|b| (t - b).abs() < collar) || exclude.iter().any(|&(s, e)| s <= t && t < e) {
            continue;
        }
        let r = active(reference, &rs, t);
        if exclude_overlap && r.len() > 1 {
            continue;
        }
        scored_frames.push((r, active(hypothesis, &hs, t)));
    }
    let mut overlap = vec![vec![0.0; rs.len()]; hs.len()];
    for (r, h) in &scored_frames {
        for &hi in h {
            for &ri in r {
                overlap[hi][ri] += 1.0;
            }
        }
    }
    let (correct, _) = if hs.is_empty() || rs.is_empty() { (0.0, vec![]) } else { brute_force_assignment(&overlap) };
    let mut out = OracleDer::default();
    for (r, h) in &scored_frames {
        let (nr, nh) = (r.len() as f64, h.len() as f64);
        out.scored += nr * FRAME;
        out.miss += (nr - nh).max(0.0) * FRAME;
        out.false_alarm += (nh - nr).max(0.0) * FRAME;
        out.speaker_error += nr.min(nh) * FRAME;
    }
    out.speaker_error -= correct * FRAME;
    out
}

/// Grid time `k * 10 ms`.
pub fn grid(k: i64) -> f64 {
    k as f64 / 100.0
}

fn random_speaker_segments(rng: &mut ChaCha8Rng, conv: &str, speaker: &str, len_frames: i64) -> Vec<Segment> {
    let n = rng.gen_range(1..=5);
    let mut spans: Vec<(i64, i64)> = (0..n)
        .map(|_| {
            let s = rng.gen_range(0..len_frames - 10);
            let e = (s + rng.gen_range(10..=len_frames / 2 + 10)).min(len_frames);
            (s, e)
        })
        .collect();
    spans.sort();
    let mut merged: Vec<(i64, i64)> = Vec::new();
    for (s, e) in spans {
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    merged
        .into_iter()
        .map(|(s, e)| Segment::new(conv, TimeInterval::new(grid(s), grid(e)).unwrap(), speaker).unwrap())
        .collect()
}

/// Random reference and hypothesis on a 10 ms grid: at most 6 speakers each,
/// at most 60 s. Half the hypotheses are perturbed copies of the reference.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (Diarization, Diarization) {
    let len_frames = rng.gen_range(500..=6000);
    let n_ref = rng.gen_range(1..=6);
    let reference: Vec<Segment> =
        (0..n_ref).flat_map(|s| random_speaker_segments(rng, "x", &format!("r{s}"), len_frames)).collect();
    let reference = Diarization::new("x", reference).unwrap();
    let hypothesis = if rng.gen_bool(0.5) {
        let n_hyp = rng.gen_range(1..=6);
        (0..n_hyp).flat_map(|s| random_speaker_segments(rng, "x", &format!("h{s}"), len_frames)).collect()
    } else {
        // shift boundaries and relabel some segments of the reference
        let mut segs = Vec::new();
        for seg in reference.segments() {
            let s = (seg.start() * 100.0).round() as i64 + rng.gen_range(-30..=30);
            let e = (seg.end() * 100.0).round() as i64 + rng.gen_range(-30..=30);
            let (s, e) = (s.max(0), e.min(len_frames));
            if e <= s {
                continue;
            }
            let spk = if rng.gen_bool(0.2) { format!("h{}", rng.gen_range(0..6)) } else { format!("h{}", &seg.speaker[1..]) };
            segs.push((spk, s, e));
        }
        // resolve same-speaker overlaps by merging
        segs.sort();
        let mut out: Vec<(String, i64, i64)> = Vec::new();
        for (spk, s, e) in segs {
            match out.last_mut() {
                Some(last) if last.0 == spk && s <= last.2 => last.2 = last.2.max(e),
                _ => out.push((spk, s, e)),
            }
        }
        out.into_iter()
            .map(|(spk, s, e)| Segment::new("x", TimeInterval::new(grid(s), grid(e)).unwrap(), spk).unwrap())
            .collect()
    };
    (reference, Diarization::new("x", hypothesis).unwrap())
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let (u1, u2): (f64, f64) = (rng.gen(), rng.gen());
            (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Planted clusters on the sphere: centroid cosines within +-0.2, every
/// member within cosine 0.9 of its centroid. Members are shuffled in time.
pub fn planted_track(rng: &mut ChaCha8Rng, sizes: &[usize], dim: usize) -> (EmbeddingTrack<f64>, Vec<usize>) {
    let mut centroids: Vec<Vec<f64>> = Vec::new();
    while centroids.len() < sizes.len() {
        let c = unit(gaussian(rng, dim));
        if centroids.iter().all(|o| dot(o, &c).abs() <= 0.2) {
            centroids.push(c);
        }
    }
    let mut truth: Vec<usize> = sizes.iter().enumerate().flat_map(|(k, &n)| std::iter::repeat_n(k, n)).collect();
    for i in (1..truth.len()).rev() {
        let j = rng.gen_range(0..=i);
        truth.swap(i, j);
    }
    let embeddings = truth
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let v = loop {
                let noise = gaussian(rng, dim);
                let v = unit(centroids[k].iter().zip(&noise).map(|(c, n)| c + 0.08 * n).collect());
                if dot(&v, &centroids[k]) >= 0.9 {
                    break v;
                }
            };
            Embedding::new(v, TimeInterval::new(i as f64 * 0.25, i as f64 * 0.25 + 1.5).unwrap()).unwrap()
        })
        .collect();
    (EmbeddingTrack::new("planted", embeddings).unwrap(), truth)
}

/// True when two labelings induce the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    use std::collections::HashMap;
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

/// The standard battery: 20 seeds, 4 speakers, D = 64, 15% distance-correlated errors.
pub fn battery_spec(seed: u64) -> SynthSpec {
    SynthSpec { seed, ..SynthSpec::default() }
}

pub fn battery() -> Vec<SynthConversation> {
    (0..20).map(|seed| diarconf::generate(&battery_spec(seed), &format!("b{seed:02}"), 0).unwrap()).collect()
}
