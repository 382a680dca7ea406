//! Closed-open time intervals and sets of disjoint intervals.

use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance for comparing times and durations, in seconds.
pub const TIME_EPS: f64 = 1e-6;

/// A half-open interval `[start, end)` in seconds with `end > start >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TimeInterval {
    start: f64,
    end: f64,
}

impl TimeInterval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || start < 0.0 || end <= start {
            return Err(Error::InvalidInterval { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }

    pub fn overlap(&self, other: &TimeInterval) -> f64 {
        (self.end.min(other.end) - self.start.max(other.start)).max(0.0)
    }

    /// Shift by `offset` seconds. Fails if the result would start before zero.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Self::new(self.start + offset, self.end + offset)
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.3}, {:.3})", self.start, self.end)
    }
}

/// A set of time points stored as sorted, disjoint, non-touching intervals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timeline {
    intervals: Vec<TimeInterval>,
}

impl Timeline {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Build from arbitrary (possibly overlapping, unsorted) intervals.
    pub fn from_intervals<I: IntoIterator<Item = TimeInterval>>(iter: I) -> Self {
        let mut v: Vec<TimeInterval> = iter.into_iter().collect();
        v.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
        let mut merged: Vec<TimeInterval> = Vec::with_capacity(v.len());
        for iv in v {
            match merged.last_mut() {
                Some(last) if iv.start <= last.end => {
                    if iv.end > last.end {
                        last.end = iv.end;
                    }
                }
                _ => merged.push(iv),
            }
        }
        Self { intervals: merged }
    }

    /// Like [`Timeline::from_intervals`] for raw `(start, end)` pairs; pairs with
    /// `end <= start` are dropped and negative starts are clamped to zero.
    pub fn from_pairs<I: IntoIterator<Item = (f64, f64)>>(iter: I) -> Self {
        Self::from_intervals(iter.into_iter().filter_map(|(s, e)| TimeInterval::new(s.max(0.0), e).ok()))
    }

    pub fn intervals(&self) -> &[TimeInterval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.intervals.iter().map(TimeInterval::duration).sum()
    }

    pub fn contains(&self, t: f64) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.end <= t);
        self.intervals.get(idx).is_some_and(|iv| iv.contains(t))
    }

    pub fn union(&self, other: &Timeline) -> Timeline {
        Self::from_intervals(self.intervals.iter().chain(&other.intervals).copied())
    }

    pub fn intersect(&self, other: &Timeline) -> Timeline {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let s = a[i].start.max(b[j].start);
            let e = a[i].end.min(b[j].end);
            if e > s {
                out.push(TimeInterval { start: s, end: e });
            }
            if a[i].end < b[j].end {
                i += 1;
            } else {
                j += 1;
            }
        }
        Timeline { intervals: out }
    }

    pub fn subtract(&self, other: &Timeline) -> Timeline {
        let b = &other.intervals;
        let mut out = Vec::new();
        let mut j = 0;
        for iv in &self.intervals {
            let mut cur = iv.start;
            while j < b.len() && b[j].end <= cur {
                j += 1;
            }
            let mut k = j;
            while k < b.len() && b[k].start < iv.end {
                if b[k].start > cur {
                    out.push(TimeInterval { start: cur, end: b[k].start });
                }
                cur = cur.max(b[k].end);
                if cur >= iv.end {
                    break;
                }
                k += 1;
            }
            if cur < iv.end {
                out.push(TimeInterval { start: cur, end: iv.end });
            }
        }
        Timeline { intervals: out }
    }

    /// Smallest and largest covered time, if any.
    pub fn extent(&self) -> Option<(f64, f64)> {
        Some((self.intervals.first()?.start, self.intervals.last()?.end))
    }
}

impl FromIterator<TimeInterval> for Timeline {
    fn from_iter<I: IntoIterator<Item = TimeInterval>>(iter: I) -> Self {
        Self::from_intervals(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tl(pairs: &[(f64, f64)]) -> Timeline {
        Timeline::from_pairs(pairs.iter().copied())
    }

    fn pairs(t: &Timeline) -> Vec<(f64, f64)> {
        t.intervals().iter().map(|iv| (iv.start(), iv.end())).collect()
    }

    #[test]
    fn rejects_empty_and_reversed_intervals() {
        assert!(TimeInterval::new(1.0, 1.0).is_err());
        assert!(TimeInterval::new(2.0, 1.0).is_err());
        assert!(TimeInterval::new(-0.5, 1.0).is_err());
        assert!(TimeInterval::new(0.0, f64::NAN).is_err());
        assert_eq!(TimeInterval::new(0.5, 2.5).unwrap().duration(), 2.0);
    }

    #[test]
    fn union_examples() {
        assert_eq!(pairs(&tl(&[(0.0, 1.0), (2.0, 3.0)]).union(&tl(&[(1.0, 2.0)]))), vec![(0.0, 3.0)]);
        let x = tl(&[(0.0, 1.0), (4.0, 5.5)]);
        assert_eq!(x.union(&Timeline::empty()), x);
        assert_eq!(pairs(&tl(&[(0.0, 2.0)]).union(&tl(&[(1.0, 3.0)]))), vec![(0.0, 3.0)]);
    }

    #[test]
    fn intersect_examples() {
        assert_eq!(pairs(&tl(&[(0.0, 2.0)]).intersect(&tl(&[(1.0, 3.0)]))), vec![(1.0, 2.0)]);
        let x = tl(&[(0.0, 1.0), (4.0, 5.5)]);
        assert_eq!(x.intersect(&x), x);
        assert!(tl(&[(0.0, 1.0)]).intersect(&tl(&[(2.0, 3.0)])).is_empty());
    }

    #[test]
    fn subtract_examples() {
        assert_eq!(
            pairs(&tl(&[(0.0, 3.0)]).subtract(&tl(&[(1.0, 2.0)]))),
            vec![(0.0, 1.0), (2.0, 3.0)]
        );
        let x = tl(&[(0.0, 1.0), (4.0, 5.5)]);
        assert_eq!(x.subtract(&Timeline::empty()), x);
        assert!(x.subtract(&x).is_empty());
    }

    #[test]
    fn subtract_many_holes() {
        let a = tl(&[(0.0, 10.0), (12.0, 14.0)]);
        let b = tl(&[(1.0, 2.0), (3.0, 4.0), (9.0, 12.5), (13.0, 20.0)]);
        assert_eq!(pairs(&a.subtract(&b)), vec![(0.0, 1.0), (2.0, 3.0), (4.0, 9.0), (12.5, 13.0)]);
    }

    #[test]
    fn contains_is_closed_open() {
        let x = tl(&[(0.0, 1.0), (2.0, 3.0)]);
        assert!(x.contains(0.0));
        assert!(!x.contains(1.0));
        assert!(x.contains(2.5));
        assert!(!x.contains(3.0));
    }

    fn arb_timeline() -> impl Strategy<Value = Timeline> {
        // millisecond grid keeps sums exact enough for the 1e-9 identities
        prop::collection::vec((0u32..20_000, 1u32..3_000), 0..12).prop_map(|v| {
            Timeline::from_pairs(v.into_iter().map(|(s, d)| (s as f64 / 1000.0, (s + d) as f64 / 1000.0)))
        })
    }

    fn is_normalized(t: &Timeline) -> bool {
        t.intervals().windows(2).all(|w| w[0].end() < w[1].start())
    }

    proptest! {
        #[test]
        fn inclusion_exclusion(a in arb_timeline(), b in arb_timeline()) {
            let lhs = a.union(&b).total_duration() + a.intersect(&b).total_duration();
            let rhs = a.total_duration() + b.total_duration();
            prop_assert!((lhs - rhs).abs() <= 1e-9, "{lhs} vs {rhs}");
        }

        #[test]
        fn subtract_then_intersect_is_empty(a in arb_timeline(), b in arb_timeline()) {
            prop_assert!(a.union(&b).subtract(&b).intersect(&b).is_empty());
        }

        #[test]
        fn results_stay_normalized(a in arb_timeline(), b in arb_timeline()) {
            prop_assert!(is_normalized(&a.union(&b)));
            prop_assert!(is_normalized(&a.intersect(&b)));
            prop_assert!(is_normalized(&a.subtract(&b)));
        }

        #[test]
        fn subtract_partitions(a in arb_timeline(), b in arb_timeline()) {
            let d = a.subtract(&b).total_duration() + a.intersect(&b).total_duration();
            prop_assert!((d - a.total_duration()).abs() <= 1e-9);
        }
    }
}
