use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{derived_bounds, SystemSpec};

/// Three-valued outcome for an asymptotic condition checked on a finite prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    PlausiblyHolds,
    PlausiblyFails,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PlausiblyHolds => "plausibly-holds",
            Self::PlausiblyFails => "plausibly-fails",
            Self::Inconclusive => "inconclusive",
        }
    }
}

/// Standing conditions of the theory, each asking a ratio sequence to tend to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    /// `log c̲_k / log M_k -> 0` (ratio A).
    SmallestRatio,
    /// `log #I_k / k -> 0` (ratio C).
    BranchGrowth,
    /// `(log c̄_k - log #I_k) / log M_k -> 0` (ratio B).
    AveragedRatio,
    /// `log c̄_k / log M_k -> 0` (ratio D), used for infinite systems.
    LargestRatio,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Self::SmallestRatio,
        Self::BranchGrowth,
        Self::AveragedRatio,
        Self::LargestRatio,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SmallestRatio => "smallest-ratio",
            Self::BranchGrowth => "branch-growth",
            Self::AveragedRatio => "averaged-ratio",
            Self::LargestRatio => "largest-ratio",
        }
    }

    fn pick<T: Copy>(self, row: &DiagnosticRow<T>) -> Option<T> {
        match self {
            Self::SmallestRatio => row.ratio_a,
            Self::BranchGrowth => row.ratio_c,
            Self::AveragedRatio => row.ratio_b,
            Self::LargestRatio => row.ratio_d,
        }
    }
}

/// Verdict thresholds on the trailing-window extremes of `|ratio|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds<T> {
    /// Window maximum below this gives [`Verdict::PlausiblyHolds`].
    pub holds_below: T,
    /// Window minimum at or above this gives [`Verdict::PlausiblyFails`].
    pub fails_above: T,
}

impl<T: Scalar> Default for Thresholds<T> {
    fn default() -> Self {
        Self {
            holds_below: T::of(0.01),
            fails_above: T::of(0.1),
        }
    }
}

/// Ratio sequences at one level; `None` where undefined (infinite families).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow<T> {
    pub k: usize,
    pub ratio_a: Option<T>,
    pub ratio_b: Option<T>,
    pub ratio_c: Option<T>,
    pub ratio_d: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionSummary<T> {
    pub condition: Condition,
    /// Trailing-window extremes of the sequence; `None` if undefined there.
    pub window_max: Option<T>,
    pub window_min: Option<T>,
    /// Value at `k_max`.
    pub last: Option<T>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport<T> {
    pub k_max: usize,
    pub window: usize,
    pub thresholds: Thresholds<T>,
    pub rows: Vec<DiagnosticRow<T>>,
    pub conditions: Vec<ConditionSummary<T>>,
}

impl<T: Scalar> DiagnosticsReport<T> {
    pub fn summary(&self, c: Condition) -> &ConditionSummary<T> {
        self.conditions.iter().find(|s| s.condition == c).expect("all conditions summarized")
    }
}

/// Ratio sequences for `k <= k_max` with verdicts over the last `window` levels.
pub fn condition_diagnostics<T: Scalar>(
    spec: &SystemSpec<T>,
    k_max: usize,
    window: usize,
    thresholds: Thresholds<T>,
) -> Result<DiagnosticsReport<T>> {
    if window == 0 || k_max < 2 * window {
        return Err(Error::Domain(format!(
            "diagnostics need window >= 1 and k_max >= 2*window (k_max={k_max}, window={window})"
        )));
    }
    let bounds = derived_bounds(spec, k_max)?;
    let finite = |x: T| if x.is_finite() { Some(x) } else { None };
    let rows: Vec<DiagnosticRow<T>> = bounds
        .iter()
        .map(|b| {
            let kt = T::of_usize(b.k);
            DiagnosticRow {
                k: b.k,
                ratio_a: finite(b.log_c_min / b.log_big_m),
                ratio_b: finite((b.log_c_max - b.log_count) / b.log_big_m),
                ratio_c: finite(b.log_count / kt),
                ratio_d: finite(b.log_c_max / b.log_big_m),
            }
        })
        .collect();
    let tail = &rows[k_max - window..];
    let conditions = Condition::ALL
        .iter()
        .map(|&c| summarize(c, tail, thresholds))
        .collect();
    Ok(DiagnosticsReport {
        k_max,
        window,
        thresholds,
        rows,
        conditions,
    })
}

fn summarize<T: Scalar>(c: Condition, tail: &[DiagnosticRow<T>], th: Thresholds<T>) -> ConditionSummary<T> {
    let values: Option<Vec<T>> = tail.iter().map(|r| c.pick(r)).collect();
    let last = tail.last().and_then(|r| c.pick(r));
    let Some(values) = values else {
        return ConditionSummary {
            condition: c,
            window_max: None,
            window_min: None,
            last,
            verdict: Verdict::Inconclusive,
        };
    };
    let window_max = values.iter().copied().fold(T::neg_infinity(), T::max);
    let window_min = values.iter().copied().fold(T::infinity(), T::min);
    let abs_max = values.iter().map(|v| v.abs()).fold(T::zero(), T::max);
    let abs_min = values.iter().map(|v| v.abs()).fold(T::infinity(), T::min);
    let verdict = if abs_max < th.holds_below {
        Verdict::PlausiblyHolds
    } else if abs_min >= th.fails_above {
        Verdict::PlausiblyFails
    } else {
        Verdict::Inconclusive
    };
    ConditionSummary {
        condition: c,
        window_max: Some(window_max),
        window_min: Some(window_min),
        last,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::presets;

    fn report(spec: &SystemSpec<f64>, k_max: usize) -> DiagnosticsReport<f64> {
        condition_diagnostics(spec, k_max, k_max / 4, Thresholds::default()).unwrap()
    }

    #[test]
    fn homogeneous_smallest_ratio_vanishes() {
        let r = report(&presets::middle_third(), 1000);
        let s = r.summary(Condition::SmallestRatio);
        assert!(s.window_max.unwrap() < 0.01);
        assert_eq!(s.verdict, Verdict::PlausiblyHolds);
    }

    #[test]
    fn e1_conditions() {
        let r = report(&presets::e1(), 2000);
        assert_eq!(r.summary(Condition::SmallestRatio).verdict, Verdict::PlausiblyHolds);
        let c = r.summary(Condition::BranchGrowth).last.unwrap();
        assert!((c - 2f64.ln()).abs() < 1e-12);
        assert_eq!(r.summary(Condition::BranchGrowth).verdict, Verdict::PlausiblyFails);
    }

    #[test]
    fn e2_conditions() {
        let r = report(&presets::e2(), 2000);
        let a = r.summary(Condition::SmallestRatio);
        assert!((a.last.unwrap() - 2.0).abs() < 0.01);
        assert_eq!(a.verdict, Verdict::PlausiblyFails);
        let b = r.summary(Condition::AveragedRatio);
        assert!(b.last.unwrap().abs() < 0.01);
        assert_eq!(b.verdict, Verdict::PlausiblyHolds);
    }

    #[test]
    fn e3_conditions() {
        let r = report(&presets::e3(), 1000);
        let b = r.summary(Condition::AveragedRatio);
        assert!((b.last.unwrap() - 0.5).abs() < 1e-6);
        assert_eq!(b.verdict, Verdict::PlausiblyFails);
        assert!(r.summary(Condition::BranchGrowth).last.unwrap() < 0.001);
    }

    #[test]
    fn infinite_family_ratio_a_undefined() {
        let r = report(&presets::geometric_infinite(), 40);
        let a = r.summary(Condition::SmallestRatio);
        assert_eq!(a.last, None);
        assert_eq!(a.verdict, Verdict::Inconclusive);
        assert!(r.summary(Condition::LargestRatio).last.is_some());
    }

    #[test]
    fn window_precondition() {
        assert!(condition_diagnostics(&presets::middle_third::<f64>(), 10, 6, Thresholds::default()).is_err());
    }

    #[test]
    fn reports_are_deterministic() {
        let spec = presets::e2::<f64>();
        assert_eq!(report(&spec, 400), report(&spec, 400));
    }
}
