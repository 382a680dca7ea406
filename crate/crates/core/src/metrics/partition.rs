use std::cmp::Ordering;

use crate::confidence::ConfidenceAnnotation;
use crate::time::Timeline;

/// Slack when comparing coverage ratios.
pub const COVERAGE_EPS: f64 = 1e-9;

/// High/low-confidence split of a set of annotated segments.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveragePartition {
    pub high: Vec<ConfidenceAnnotation>,
    pub low: Vec<ConfidenceAnnotation>,
    /// Duration of `high` over duration of all segments.
    pub achieved_coverage: f64,
}

impl CoveragePartition {
    fn from_split(high: Vec<ConfidenceAnnotation>, low: Vec<ConfidenceAnnotation>) -> Self {
        let dur = |v: &[ConfidenceAnnotation]| v.iter().map(|a| a.segment.duration()).sum::<f64>();
        let (h, l) = (dur(&high), dur(&low));
        let achieved_coverage = if h + l > 0.0 { h / (h + l) } else { 1.0 };
        Self { high, low, achieved_coverage }
    }

    pub fn low_timeline(&self) -> Timeline {
        self.low.iter().map(|a| a.segment.interval).collect()
    }

    /// Restrict to one conversation. `achieved_coverage` is recomputed.
    pub fn for_conversation(&self, conversation_id: &str) -> CoveragePartition {
        let pick = |v: &[ConfidenceAnnotation]| {
            v.iter().filter(|a| a.segment.conversation_id == conversation_id).cloned().collect::<Vec<_>>()
        };
        Self::from_split(pick(&self.high), pick(&self.low))
    }
}

/// Highest score first; equal scores by earlier start (then end, conversation,
/// speaker) so the order is total.
fn rank_order(a: &ConfidenceAnnotation, b: &ConfidenceAnnotation) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.segment.start().total_cmp(&b.segment.start()))
        .then(a.segment.end().total_cmp(&b.segment.end()))
        .then_with(|| a.segment.conversation_id.cmp(&b.segment.conversation_id))
        .then_with(|| a.segment.speaker.cmp(&b.segment.speaker))
}

/// Rank-order split: walk segments from the highest score down and keep them
/// as high-confidence while the kept duration stays within `target_coverage`
/// of the total; the first segment that would overshoot ends the walk.
///
/// The achieved coverage never exceeds the target. An empty input gives an
/// empty partition with coverage 1.
pub fn partition_by_confidence(annotations: &[ConfidenceAnnotation], target_coverage: f64) -> CoveragePartition {
    let target = target_coverage.clamp(0.0, 1.0);
    let mut sorted: Vec<ConfidenceAnnotation> = annotations.to_vec();
    sorted.sort_by(rank_order);
    let total: f64 = sorted.iter().map(|a| a.segment.duration()).sum();
    let mut kept = 0.0;
    let mut split = sorted.len();
    for (i, a) in sorted.iter().enumerate() {
        let next = kept + a.segment.duration();
        if next / total > target + COVERAGE_EPS {
            split = i;
            break;
        }
        kept = next;
    }
    let low = sorted.split_off(split);
    CoveragePartition::from_split(sorted, low)
}

/// Raw-score split: segments scoring at least `threshold` are high-confidence.
pub fn partition_by_threshold(annotations: &[ConfidenceAnnotation], threshold: f64) -> CoveragePartition {
    let mut sorted: Vec<ConfidenceAnnotation> = annotations.to_vec();
    sorted.sort_by(rank_order);
    let (high, low) = sorted.into_iter().partition(|a| a.score >= threshold);
    CoveragePartition::from_split(high, low)
}
