use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::system::{LevelSpec, Separation, SystemSpec};

/// Largest number of depth-`n` intervals [`realize_attractor`] will emit.
pub const DEFAULT_INTERVAL_BUDGET: usize = 10_000_000;

/// How children are laid out inside their parent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement<T> {
    /// Adjacent children are `gap * |parent|` apart and the flanks share
    /// what is left. `None` makes all gaps, flanks included, equal.
    SscUniformGaps { gap: Option<T> },
    /// Children packed from the left end, touching.
    OscLeftPacked,
}

impl<T: Scalar> Placement<T> {
    pub fn from_separation(sep: Separation<T>) -> Self {
        match sep {
            Separation::Ssc { gap } => Placement::SscUniformGaps { gap },
            Separation::Osc => Placement::OscLeftPacked,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub left: T,
    pub length: T,
}

impl<T: Scalar> Interval<T> {
    pub fn right(&self) -> T {
        self.left + self.length
    }
}

/// Depth-`n` cylinder intervals of a system, sorted by left endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorRealization<T> {
    pub spec_name: String,
    pub depth: usize,
    pub placement: Placement<T>,
    pub ambient_diameter: T,
    pub intervals: Vec<Interval<T>>,
    /// `log |J_u|`, kept alongside the rounded lengths.
    pub log_lengths: Vec<T>,
}

impl<T: Scalar> AttractorRealization<T> {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn min_length(&self) -> T {
        self.intervals.iter().map(|i| i.length).fold(T::infinity(), T::min)
    }

    /// `left,length` rows at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "left,length")?;
        for i in &self.intervals {
            writeln!(w, "{:.16e},{:.16e}", i.left.f64(), i.length.f64())?;
        }
        Ok(())
    }
}

/// Child offsets (as fractions of the parent) and log-ratios for one level.
fn layout<T: Scalar>(level: &LevelSpec<T>, k: usize, placement: Placement<T>) -> Result<Vec<(T, T)>> {
    let logs = level.expanded_log_ratios().ok_or(Error::InfiniteLevel {
        level: k,
        what: "realization",
    })?;
    let n = T::of_usize(logs.len());
    let total = logs.iter().fold(T::zero(), |a, &l| a + l.exp());
    let (first, gap) = match placement {
        Placement::OscLeftPacked => {
            if total > T::one() + T::of(1e-12) {
                return Err(Error::Realization(format!(
                    "ratios at level {k} sum to {total} > 1; children cannot have disjoint interiors"
                )));
            }
            (T::zero(), T::zero())
        }
        Placement::SscUniformGaps { gap } => {
            let g = gap.unwrap_or((T::one() - total) / (n + T::one()));
            let used = total + (n - T::one()) * g;
            if total >= T::one() || !(g > T::zero()) || used > T::one() {
                return Err(Error::SscInfeasible {
                    level: k,
                    total: used.f64(),
                });
            }
            ((T::one() - used) / T::of(2.0), g)
        }
    };
    let mut out = Vec::with_capacity(logs.len());
    let mut at = first;
    for l in logs {
        out.push((at, l));
        at = at + l.exp() + gap;
    }
    Ok(out)
}

pub(crate) fn planned_count<T: Scalar>(spec: &SystemSpec<T>, depth: usize) -> Result<f64> {
    let mut n = 1.0f64;
    for k in 1..=depth {
        let level = spec.materialize_level(k)?;
        if !level.is_finite() {
            return Err(Error::InfiniteLevel { level: k, what: "realization" });
        }
        n *= level.log_count().f64().exp();
    }
    Ok(n)
}

/// Lays out every depth-`depth` cylinder of `spec` inside `[0, |J|]`.
///
/// Nesting and disjointness are checked on the way; a violation is a
/// [`Error::Realization`].
pub fn realize_attractor<T: Scalar>(
    spec: &SystemSpec<T>,
    depth: usize,
    placement: Placement<T>,
    budget: usize,
) -> Result<AttractorRealization<T>> {
    let needed = planned_count(spec, depth)?;
    if needed > budget as f64 {
        return Err(Error::RealizationBudget { needed, budget });
    }
    let log_j = spec.log_ambient_diameter();
    let mut lefts = vec![T::zero()];
    let mut logs = vec![log_j];
    for k in 1..=depth {
        let lay = layout(&spec.materialize_level(k)?, k, placement)?;
        let mut next_lefts = Vec::with_capacity(lefts.len() * lay.len());
        let mut next_logs = Vec::with_capacity(lefts.len() * lay.len());
        for (&left, &log_len) in lefts.iter().zip(&logs) {
            let len = log_len.exp();
            for &(off, lr) in &lay {
                next_lefts.push(left + off * len);
                next_logs.push(log_len + lr);
            }
        }
        check_level(&lefts, &logs, &next_lefts, &next_logs, lay.len(), placement, k)?;
        lefts = next_lefts;
        logs = next_logs;
    }
    let intervals = lefts
        .iter()
        .zip(&logs)
        .map(|(&left, &l)| Interval { left, length: l.exp() })
        .collect();
    Ok(AttractorRealization {
        spec_name: spec.name().to_string(),
        depth,
        placement,
        ambient_diameter: spec.ambient_diameter(),
        intervals,
        log_lengths: logs,
    })
}

fn check_level<T: Scalar>(
    parents: &[T],
    parent_logs: &[T],
    lefts: &[T],
    logs: &[T],
    per_parent: usize,
    placement: Placement<T>,
    k: usize,
) -> Result<()> {
    let slack = |len: T| T::of(1e-9) * len;
    for (p, (&pl, &plog)) in parents.iter().zip(parent_logs).enumerate() {
        let plen = plog.exp();
        for c in p * per_parent..(p + 1) * per_parent {
            let right = lefts[c] + logs[c].exp();
            if lefts[c] < pl - slack(plen) || right > pl + plen + slack(plen) {
                return Err(Error::Realization(format!(
                    "interval {c} at depth {k} leaves its parent"
                )));
            }
        }
    }
    for c in 1..lefts.len() {
        let prev_right = lefts[c - 1] + logs[c - 1].exp();
        let ok = match placement {
            Placement::SscUniformGaps { .. } => lefts[c] > prev_right,
            Placement::OscLeftPacked => lefts[c] >= prev_right - slack(logs[c].exp()),
        };
        if !ok {
            return Err(Error::Realization(format!(
                "intervals {} and {c} overlap at depth {k}",
                c - 1
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{presets, ClosedFormRule, TailRule};

    fn homogeneous(ratio: f64, branches: u64) -> SystemSpec<f64> {
        SystemSpec::builder("h", TailRule::ClosedForm(ClosedFormRule::Homogeneous { ratio, branches }))
            .build()
            .unwrap()
    }

    fn assert_intervals(r: &AttractorRealization<f64>, want: &[(f64, f64)]) {
        assert_eq!(r.len(), want.len());
        for (i, &(l, len)) in r.intervals.iter().zip(want) {
            assert!((i.left - l).abs() < 1e-15 && (i.length - len).abs() < 1e-15, "{i:?} vs {l} {len}");
        }
    }

    #[test]
    fn classic_cantor_depth_two() {
        let s = presets::middle_third::<f64>();
        let r = realize_attractor(&s, 2, Placement::from_separation(s.separation()), DEFAULT_INTERVAL_BUDGET).unwrap();
        let n = 1.0 / 9.0;
        assert_intervals(&r, &[(0.0, n), (2.0 * n, n), (6.0 * n, n), (8.0 * n, n)]);
    }

    #[test]
    fn explicit_gap() {
        let s = homogeneous(0.4, 2);
        let r = realize_attractor(&s, 1, Placement::SscUniformGaps { gap: Some(0.2) }, 100).unwrap();
        assert_intervals(&r, &[(0.0, 0.4), (0.6, 0.4)]);
    }

    #[test]
    fn default_gaps_are_equal() {
        let s = homogeneous(0.25, 3);
        let r = realize_attractor(&s, 1, Placement::SscUniformGaps { gap: None }, 100).unwrap();
        assert_intervals(&r, &[(0.0625, 0.25), (0.375, 0.25), (0.6875, 0.25)]);
    }

    #[test]
    fn e1_depth_three() {
        let s = presets::e1::<f64>();
        let r = realize_attractor(&s, 3, Placement::SscUniformGaps { gap: None }, 1000).unwrap();
        assert_eq!(r.len(), 64);
        let want = 3f64.powi(-9);
        assert!(r.intervals.iter().all(|i| ((i.length - want) / want).abs() < 1e-14));
    }

    #[test]
    fn full_interval_tiles() {
        let s = presets::full_interval::<f64>();
        let r = realize_attractor(&s, 3, Placement::OscLeftPacked, 100).unwrap();
        for (j, i) in r.intervals.iter().enumerate() {
            assert_eq!(i.left, j as f64 / 8.0);
        }
    }

    #[test]
    fn infeasible_and_budget() {
        let s = presets::full_interval::<f64>();
        assert!(matches!(
            realize_attractor(&s, 1, Placement::SscUniformGaps { gap: None }, 100),
            Err(Error::SscInfeasible { level: 1, .. })
        ));
        let s = homogeneous(0.4, 2);
        assert!(matches!(
            realize_attractor(&s, 1, Placement::SscUniformGaps { gap: Some(0.3) }, 100),
            Err(Error::SscInfeasible { level: 1, .. })
        ));
        assert!(matches!(
            realize_attractor(&s, 10, Placement::OscLeftPacked, 1000),
            Err(Error::RealizationBudget { budget: 1000, .. })
        ));
        assert!(matches!(
            realize_attractor(&presets::geometric_infinite::<f64>(), 1, Placement::OscLeftPacked, 1000),
            Err(Error::InfiniteLevel { .. })
        ));
    }

    #[test]
    fn csv_rows() {
        let s = homogeneous(0.4, 2);
        let r = realize_attractor(&s, 1, Placement::SscUniformGaps { gap: Some(0.2) }, 100).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("left,length\n0.0000000000000000e0,"));
    }
}
