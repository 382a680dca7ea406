//! Diarization error rate, confidence-based coverage partitions and covered
//! DER (cDER).
//!
//! Scoring follows the usual NIST conventions: a collar of `collar` seconds
//! on each side of every reference speaker-turn boundary is not scored, and
//! (optionally) regions where two or more reference speakers overlap are not
//! scored either. Hypothesis speakers are mapped one-to-one onto reference
//! speakers so that the correctly attributed time is maximal.
//!
//! cDER additionally removes the time of low-confidence hypothesis segments
//! from the scoring region, so their reference speech is counted neither as
//! missed nor in the denominator.

mod hungarian;
mod partition;

use std::collections::BTreeMap;

pub use hungarian::max_weight_assignment;
pub use partition::{partition_by_confidence, partition_by_threshold, CoveragePartition, COVERAGE_EPS};

use crate::error::{Error, Result};
use crate::time::{TimeInterval, Timeline, TIME_EPS};
use crate::types::Diarization;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringConfig {
    pub collar: f64,
    pub exclude_overlap: bool,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self { collar: 0.25, exclude_overlap: true }
    }
}

impl ScoringConfig {
    pub fn new(collar: f64, exclude_overlap: bool) -> Result<Self> {
        if !(collar >= 0.0 && collar.is_finite()) {
            return Err(Error::InvalidArgument(format!("collar must be a non-negative number, got {collar}")));
        }
        Ok(Self { collar, exclude_overlap })
    }
}

/// Error durations in seconds over the scored region.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DerBreakdown {
    pub miss: f64,
    pub false_alarm: f64,
    pub speaker_error: f64,
    pub scored_speech: f64,
}

impl DerBreakdown {
    pub fn total_error(&self) -> f64 {
        self.miss + self.false_alarm + self.speaker_error
    }

    /// `(miss + false alarm + speaker error) / scored speech`, `None` when
    /// nothing was scored.
    pub fn der(&self) -> Option<f64> {
        (self.scored_speech > TIME_EPS).then(|| self.total_error() / self.scored_speech)
    }
}

/// Time-weighted corpus total: component-wise sums.
pub fn corpus_aggregate<'a, I: IntoIterator<Item = &'a DerBreakdown>>(parts: I) -> DerBreakdown {
    parts.into_iter().fold(DerBreakdown::default(), |acc, b| DerBreakdown {
        miss: acc.miss + b.miss,
        false_alarm: acc.false_alarm + b.false_alarm,
        speaker_error: acc.speaker_error + b.speaker_error,
        scored_speech: acc.scored_speech + b.scored_speech,
    })
}

/// Per-speaker timelines in sorted label order.
fn speaker_timelines(d: &Diarization) -> Vec<(String, Timeline)> {
    d.speakers().into_iter().map(|s| {
        let t = d.speaker_timeline(&s);
        (s, t)
    }).collect()
}

/// Time covered by at least two of the given timelines.
fn multi_coverage(timelines: &[Timeline]) -> Timeline {
    let mut events: Vec<(f64, i32)> = Vec::new();
    for t in timelines {
        for iv in t.intervals() {
            events.push((iv.start(), 1));
            events.push((iv.end(), -1));
        }
    }
    // ends before starts at equal times: closed-open intervals do not overlap at a shared endpoint
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut depth = 0;
    let mut open_at = None;
    let mut out = Vec::new();
    for (t, delta) in events {
        depth += delta;
        match (depth >= 2, open_at) {
            (true, None) => open_at = Some(t),
            (false, Some(s)) => {
                if t > s {
                    out.push((s, t));
                }
                open_at = None;
            }
            _ => {}
        }
    }
    Timeline::from_pairs(out)
}

/// The time region over which errors are counted.
pub fn scoring_region(reference: &Diarization, hypothesis: &Diarization, cfg: &ScoringConfig, exclude: &Timeline) -> Timeline {
    let ref_tl = speaker_timelines(reference);
    let end = reference
        .segments()
        .iter()
        .chain(hypothesis.segments())
        .map(|s| s.end())
        .fold(0.0, f64::max);
    let Ok(full) = TimeInterval::new(0.0, end) else { return Timeline::empty() };
    let mut region = Timeline::from_intervals([full]);
    if cfg.collar > 0.0 {
        let c = cfg.collar;
        let collars = Timeline::from_pairs(
            ref_tl
                .iter()
                .flat_map(|(_, t)| t.intervals().iter())
                .flat_map(|iv| [(iv.start() - c, iv.start() + c), (iv.end() - c, iv.end() + c)]),
        );
        region = region.subtract(&collars);
    }
    if cfg.exclude_overlap {
        let tls: Vec<Timeline> = ref_tl.iter().map(|(_, t)| t.clone()).collect();
        region = region.subtract(&multi_coverage(&tls));
    }
    region.subtract(exclude)
}

/// Elementary stretch of the scoring region with constant speaker activity.
struct Piece {
    duration: f64,
    refs: Vec<usize>,
    hyps: Vec<usize>,
}

struct Scored {
    ref_speakers: Vec<String>,
    hyp_speakers: Vec<String>,
    pieces: Vec<Piece>,
}

impl Scored {
    fn new(reference: &Diarization, hypothesis: &Diarization, cfg: &ScoringConfig, exclude: &Timeline) -> Self {
        let region = scoring_region(reference, hypothesis, cfg, exclude);
        let refs = speaker_timelines(reference);
        let hyps = speaker_timelines(hypothesis);
        let mut bounds: Vec<f64> = region
            .intervals()
            .iter()
            .chain(refs.iter().chain(&hyps).flat_map(|(_, t)| t.intervals()))
            .flat_map(|iv| [iv.start(), iv.end()])
            .collect();
        bounds.sort_by(f64::total_cmp);
        bounds.dedup();
        let mut pieces = Vec::new();
        for w in bounds.windows(2) {
            let (s, e) = (w[0], w[1]);
            let mid = 0.5 * (s + e);
            if e <= s || !region.contains(mid) {
                continue;
            }
            let active = |tls: &[(String, Timeline)]| -> Vec<usize> {
                tls.iter().enumerate().filter(|(_, (_, t))| t.contains(mid)).map(|(i, _)| i).collect()
            };
            pieces.push(Piece { duration: e - s, refs: active(&refs), hyps: active(&hyps) });
        }
        Self {
            ref_speakers: refs.into_iter().map(|(s, _)| s).collect(),
            hyp_speakers: hyps.into_iter().map(|(s, _)| s).collect(),
            pieces,
        }
    }

    /// `overlap[h][r]`: scored time where hyp speaker `h` and ref speaker `r` both talk.
    fn overlap_matrix(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.ref_speakers.len()]; self.hyp_speakers.len()];
        for p in &self.pieces {
            for &h in &p.hyps {
                for &r in &p.refs {
                    m[h][r] += p.duration;
                }
            }
        }
        m
    }

    fn mapping(&self) -> Vec<Option<usize>> {
        let overlap = self.overlap_matrix();
        max_weight_assignment(&overlap)
            .into_iter()
            .enumerate()
            .map(|(h, r)| r.filter(|&r| overlap[h][r] > 0.0))
            .collect()
    }

    fn breakdown(&self) -> DerBreakdown {
        let map = self.mapping();
        let mut out = DerBreakdown::default();
        for p in &self.pieces {
            let n_ref = p.refs.len() as f64;
            let n_hyp = p.hyps.len() as f64;
            let correct = p.hyps.iter().filter(|&&h| map[h].is_some_and(|r| p.refs.contains(&r))).count() as f64;
            out.scored_speech += n_ref * p.duration;
            out.miss += (n_ref - n_hyp).max(0.0) * p.duration;
            out.false_alarm += (n_hyp - n_ref).max(0.0) * p.duration;
            out.speaker_error += (n_ref.min(n_hyp) - correct) * p.duration;
        }
        out
    }
}

/// One-to-one hypothesis-to-reference speaker mapping maximizing the scored
/// time both agree on. Hypothesis speakers with no useful partner are absent.
pub fn optimal_speaker_mapping(reference: &Diarization, hypothesis: &Diarization, cfg: &ScoringConfig) -> BTreeMap<String, String> {
    let scored = Scored::new(reference, hypothesis, cfg, &Timeline::empty());
    scored
        .mapping()
        .into_iter()
        .enumerate()
        .filter_map(|(h, r)| r.map(|r| (scored.hyp_speakers[h].clone(), scored.ref_speakers[r].clone())))
        .collect()
}

/// DER components with `exclude` removed from the scoring region. Never fails;
/// `scored_speech` may be zero.
pub fn der_breakdown(reference: &Diarization, hypothesis: &Diarization, cfg: &ScoringConfig, exclude: &Timeline) -> DerBreakdown {
    Scored::new(reference, hypothesis, cfg, exclude).breakdown()
}

fn require_scorable(reference: &Diarization, b: DerBreakdown) -> Result<DerBreakdown> {
    if b.der().is_none() {
        return Err(Error::Unscorable(reference.conversation_id().to_owned()));
    }
    Ok(b)
}

/// Diarization error rate of `hypothesis` against `reference`.
pub fn compute_der(reference: &Diarization, hypothesis: &Diarization, cfg: &ScoringConfig) -> Result<DerBreakdown> {
    require_scorable(reference, der_breakdown(reference, hypothesis, cfg, &Timeline::empty()))
}

/// Covered DER: DER over the scoring region minus the low-confidence
/// segments of `partition`.
pub fn compute_cder(
    reference: &Diarization,
    hypothesis: &Diarization,
    partition: &CoveragePartition,
    cfg: &ScoringConfig,
) -> Result<DerBreakdown> {
    require_scorable(reference, cder_breakdown(reference, hypothesis, partition, cfg))
}

/// Like [`compute_cder`] but returns an all-zero-denominator breakdown instead
/// of failing, for aggregation.
pub fn cder_breakdown(
    reference: &Diarization,
    hypothesis: &Diarization,
    partition: &CoveragePartition,
    cfg: &ScoringConfig,
) -> DerBreakdown {
    der_breakdown(reference, hypothesis, cfg, &partition.low_timeline())
}
