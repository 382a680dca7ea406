//! Coverage sweeps, global score thresholds and score histograms.
//!
//! Fixed-coverage evaluation is rank based and, by default, applied per
//! conversation. Global thresholding instead picks one raw score on a
//! validation corpus and applies it unchanged to unseen conversations.

use serde::{Deserialize, Serialize};

use crate::confidence::{ConfidenceAnnotation, Method};
use crate::error::{Error, Result};
use crate::metrics::{
    cder_breakdown, corpus_aggregate, partition_by_confidence, partition_by_threshold, CoveragePartition, DerBreakdown,
    ScoringConfig, COVERAGE_EPS,
};
use crate::types::Diarization;

/// Reference, hypothesis and one method's annotations for a conversation.
#[derive(Debug, Clone)]
pub struct ScoredConversation {
    pub reference: Diarization,
    pub hypothesis: Diarization,
    pub annotations: Vec<ConfidenceAnnotation>,
}

impl ScoredConversation {
    fn duration(&self) -> f64 {
        self.annotations.iter().map(|a| a.segment.duration()).sum()
    }
}

/// Where the rank-order partition is applied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PartitionMode {
    #[default]
    PerConversation,
    /// Rank all segments of the corpus together.
    Pooled,
}

/// Corpus-level result of one partitioning of every conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusPoint {
    pub achieved_coverage: f64,
    pub breakdown: DerBreakdown,
    pub per_conversation: Vec<(CoveragePartition, DerBreakdown)>,
}

impl CorpusPoint {
    pub fn cder(&self) -> Option<f64> {
        self.breakdown.der()
    }

    fn from_partitions(corpus: &[ScoredConversation], partitions: Vec<CoveragePartition>, cfg: &ScoringConfig) -> Self {
        let per_conversation: Vec<(CoveragePartition, DerBreakdown)> = corpus
            .iter()
            .zip(partitions)
            .map(|(c, p)| {
                let b = cder_breakdown(&c.reference, &c.hypothesis, &p, cfg);
                (p, b)
            })
            .collect();
        let total: f64 = corpus.iter().map(ScoredConversation::duration).sum();
        let high: f64 = per_conversation.iter().map(|(p, _)| p.high.iter().map(|a| a.segment.duration()).sum::<f64>()).sum();
        let achieved_coverage = if total > 0.0 { high / total } else { 1.0 };
        let breakdown = corpus_aggregate(per_conversation.iter().map(|(_, b)| b));
        Self { achieved_coverage, breakdown, per_conversation }
    }
}

/// cDER of the corpus when every conversation keeps `target` of its duration.
pub fn evaluate_at_coverage(corpus: &[ScoredConversation], target: f64, cfg: &ScoringConfig, mode: PartitionMode) -> CorpusPoint {
    let partitions = match mode {
        PartitionMode::PerConversation => corpus.iter().map(|c| partition_by_confidence(&c.annotations, target)).collect(),
        PartitionMode::Pooled => {
            let all: Vec<ConfidenceAnnotation> = corpus.iter().flat_map(|c| c.annotations.iter().cloned()).collect();
            let pooled = partition_by_confidence(&all, target);
            corpus
                .iter()
                .map(|c| pooled.for_conversation(c.hypothesis.conversation_id()))
                .collect()
        }
    };
    CorpusPoint::from_partitions(corpus, partitions, cfg)
}

/// Corpus result when segments scoring at least `threshold` are kept.
pub fn evaluate_at_threshold(corpus: &[ScoredConversation], threshold: f64, cfg: &ScoringConfig) -> CorpusPoint {
    let partitions = apply_threshold(corpus.iter().map(|c| c.annotations.as_slice()), threshold);
    CorpusPoint::from_partitions(corpus, partitions, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub coverage_target: f64,
    pub achieved_coverage: f64,
    pub breakdown: DerBreakdown,
}

impl SweepPoint {
    pub fn cder(&self) -> Option<f64> {
        self.breakdown.der()
    }
}

/// cDER as a function of target coverage, targets strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub method: Method,
    pub points: Vec<SweepPoint>,
}

/// 0.30, 0.35, ..., 1.00.
pub fn default_grid() -> Vec<f64> {
    (6..=20).map(|k| k as f64 * 5.0 / 100.0).collect()
}

/// Sort, de-duplicate and check that all targets lie in `(0, 1]`.
pub fn normalize_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = grid.iter().find(|&&g| !(g > 0.0 && g <= 1.0)) {
        return Err(Error::InvalidArgument(format!("coverage target {bad} outside (0, 1]")));
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

pub fn sweep(
    corpus: &[ScoredConversation],
    method: Method,
    grid: &[f64],
    cfg: &ScoringConfig,
    mode: PartitionMode,
) -> Result<SweepCurve> {
    let points = normalize_grid(grid)?
        .into_iter()
        .map(|target| {
            let p = evaluate_at_coverage(corpus, target, cfg, mode);
            SweepPoint { coverage_target: target, achieved_coverage: p.achieved_coverage, breakdown: p.breakdown }
        })
        .collect();
    Ok(SweepCurve { method, points })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Minimize cDER / coverage.
    Ratio,
    /// Minimize cDER among thresholds keeping at least this coverage.
    CderAtMinCoverage(f64),
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    /// `ratio` or `min-coverage:<fraction>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "ratio" => Ok(Criterion::Ratio),
            Some(("min-coverage" | "cder_at_min_coverage", v)) => v
                .parse::<f64>()
                .ok()
                .filter(|f| (0.0..=1.0).contains(f))
                .map(Criterion::CderAtMinCoverage)
                .ok_or_else(|| Error::InvalidArgument(format!("bad coverage floor '{v}'"))),
            _ => Err(Error::InvalidArgument(format!("unknown criterion '{s}'"))),
        }
    }
}

/// One candidate operating point of a raw-score threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPoint {
    pub threshold: f64,
    pub coverage: f64,
    pub cder: f64,
}

/// Operating points for every distinct observed score, ascending threshold.
/// Thresholds that leave no scored speech are omitted.
pub fn threshold_curve(corpus: &[ScoredConversation], cfg: &ScoringConfig) -> Vec<ThresholdPoint> {
    let mut scores: Vec<f64> = corpus.iter().flat_map(|c| c.annotations.iter().map(|a| a.score)).collect();
    scores.sort_by(f64::total_cmp);
    scores.dedup();
    scores
        .into_iter()
        .filter_map(|t| {
            let p = evaluate_at_threshold(corpus, t, cfg);
            p.cder().map(|cder| ThresholdPoint { threshold: t, coverage: p.achieved_coverage, cder })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalThreshold {
    pub method: Method,
    pub threshold: f64,
    pub validation_coverage: f64,
    pub validation_cder: f64,
}

/// Choose a raw-score threshold on validation data. Candidates are the
/// observed scores; ties go to the larger coverage.
pub fn select_global_threshold(
    validation: &[ScoredConversation],
    method: Method,
    criterion: Criterion,
    cfg: &ScoringConfig,
) -> Result<GlobalThreshold> {
    if validation.iter().all(|c| c.annotations.is_empty()) {
        return Err(Error::EmptyCorpus("validation corpus has no annotated segments"));
    }
    let curve = threshold_curve(validation, cfg);
    let objective = |p: &ThresholdPoint| match criterion {
        Criterion::Ratio => (p.coverage > 0.0).then(|| p.cder / p.coverage),
        Criterion::CderAtMinCoverage(floor) => (p.coverage + COVERAGE_EPS >= floor).then_some(p.cder),
    };
    let mut best: Option<(f64, ThresholdPoint)> = None;
    for p in curve {
        let Some(v) = objective(&p) else { continue };
        let better = match best {
            None => true,
            Some((bv, bp)) => v < bv - 1e-12 || ((v - bv).abs() <= 1e-12 && p.coverage > bp.coverage),
        };
        if better {
            best = Some((v, p));
        }
    }
    let (_, p) = best.ok_or(Error::EmptyCorpus("no threshold satisfies the criterion"))?;
    Ok(GlobalThreshold { method, threshold: p.threshold, validation_coverage: p.coverage, validation_cder: p.cder })
}

/// Split every conversation's annotations at a raw score threshold.
pub fn apply_threshold<'a, I>(conversations: I, threshold: f64) -> Vec<CoveragePartition>
where
    I: IntoIterator<Item = &'a [ConfidenceAnnotation]>,
{
    conversations.into_iter().map(|a| partition_by_threshold(a, threshold)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub duration: f64,
    pub count: usize,
}

/// Equal-width bins over `[min score, max score]`, weighted both by segment
/// duration and by count. When every score is equal a single bin is returned.
pub fn histogram(annotations: &[ConfidenceAnnotation], bin_count: usize) -> Result<Vec<HistogramBin>> {
    if bin_count == 0 {
        return Err(Error::InvalidArgument("bin count must be at least 1".into()));
    }
    let Some(min) = annotations.iter().map(|a| a.score).reduce(f64::min) else { return Ok(Vec::new()) };
    let max = annotations.iter().map(|a| a.score).fold(min, f64::max);
    let bins = if max > min { bin_count } else { 1 };
    let width = (max - min) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|k| HistogramBin {
            low: min + width * k as f64,
            high: if k + 1 == bins { max } else { min + width * (k + 1) as f64 },
            duration: 0.0,
            count: 0,
        })
        .collect();
    for a in annotations {
        let k = if width > 0.0 { (((a.score - min) / width) as usize).min(bins - 1) } else { 0 };
        out[k].duration += a.segment.duration();
        out[k].count += 1;
    }
    Ok(out)
}
