use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pressure::pressure;
use crate::scalar::Scalar;
use crate::special::log_head_power_sum;
use crate::system::{derived_bounds, AnalyticFamily, LevelSpec, SystemSpec, Thresholds, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// Level sums at `t` are finite for every level or for none.
    Uniformity,
    /// Convergent case: the head `j <= M_n^{-eps}` carries almost all of the sum.
    HeadFraction,
    /// Divergent case: the head sum itself grows without bound.
    HeadDivergence,
}

impl Hypothesis {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Uniformity => "uniform-finiteness",
            Self::HeadFraction => "head-fraction",
            Self::HeadDivergence => "head-divergence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisRow<T> {
    pub hypothesis: Hypothesis,
    pub t: T,
    pub eps: Option<T>,
    /// Head-fraction: window maximum of `1 - head/total`. Head-divergence:
    /// growth of `log head` over the window.
    pub value: Option<T>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfiniteConditionReport<T> {
    pub n_max: usize,
    pub rows: Vec<HypothesisRow<T>>,
}

impl<T: Scalar> InfiniteConditionReport<T> {
    /// Worst verdict over all rows of `h`; holds vacuously when no row applies.
    pub fn verdict(&self, h: Hypothesis) -> Verdict {
        let mut out = Verdict::PlausiblyHolds;
        for r in self.rows.iter().filter(|r| r.hypothesis == h) {
            match r.verdict {
                Verdict::PlausiblyFails => return Verdict::PlausiblyFails,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::PlausiblyHolds => {}
            }
        }
        out
    }
}

/// `log sum_{j <= K} c_j^t` with `K = floor(exp(ln_k))`, which may be huge.
fn log_head_ln<T: Scalar>(level: &LevelSpec<T>, t: T, ln_k: T) -> T {
    if ln_k < T::zero() {
        return T::neg_infinity();
    }
    match level {
        LevelSpec::Analytic(AnalyticFamily::Geometric { log_scale, log_decay }) => {
            let lq = t * *log_decay;
            let k = if ln_k < T::of(40.0) { ln_k.exp().floor() } else { ln_k.exp() };
            t * *log_scale + lq + crate::logspace::log1m_exp(k * lq) - crate::logspace::log1m_exp(lq)
        }
        LevelSpec::Analytic(AnalyticFamily::PowerLaw { log_scale, exponent }) => {
            t * *log_scale + log_head_power_sum(*exponent * t, ln_k)
        }
        LevelSpec::Finite(groups) => {
            let mut left = ln_k.f64().exp().floor();
            let mut terms = Vec::new();
            for g in groups {
                if left <= 0.0 {
                    break;
                }
                let n = g.mult.ln().f64().exp().min(left);
                terms.push(T::of(n).ln() + t * g.log_ratio);
                left -= n;
            }
            crate::logspace::log_sum_exp(terms)
        }
    }
}

fn log_total<T: Scalar>(level: &LevelSpec<T>, t: T) -> T {
    match level {
        LevelSpec::Analytic(f) => f.log_power_sum(t),
        LevelSpec::Finite(groups) => crate::logspace::log_sum_exp(groups.iter().map(|g| g.mult.ln() + t * g.log_ratio)),
    }
}

/// Head-divergence growth of `log head` across the window: below this fails.
const STALL: f64 = 0.01;
/// At or above this (a 1.5-fold increase) it plausibly diverges.
const GROWTH: f64 = 0.405_465_108_108_164_4;

/// Numerical check of the hypotheses under which the truncated pressures
/// recover the full ones, over levels `1..=n_max` with verdicts on the last
/// half.
pub fn infinite_condition_check<T: Scalar>(
    spec: &SystemSpec<T>,
    t_grid: &[T],
    eps_grid: &[T],
    n_max: usize,
) -> Result<InfiniteConditionReport<T>> {
    if n_max < 2 {
        return Err(Error::Domain("n_max must be at least 2".into()));
    }
    if t_grid.iter().any(|&t| !(t > T::zero())) || eps_grid.iter().any(|&e| !(e > T::zero())) {
        return Err(Error::Domain("t and eps grids must be positive".into()));
    }
    let levels = spec.levels(n_max)?;
    let bounds = derived_bounds(spec, n_max)?;
    let th = Thresholds::<T>::default();
    let from = n_max / 2;
    let mut rows = Vec::new();
    for &t in t_grid {
        let finite: Vec<bool> = levels.iter().map(|l| log_total(l, t).is_finite()).collect();
        let all = finite.iter().all(|&f| f);
        let none = finite.iter().all(|&f| !f);
        rows.push(HypothesisRow {
            hypothesis: Hypothesis::Uniformity,
            t,
            eps: None,
            value: None,
            verdict: if all || none {
                Verdict::PlausiblyHolds
            } else {
                Verdict::PlausiblyFails
            },
        });
        if !(all || none) {
            continue;
        }
        for &eps in eps_grid {
            let ln_k = |n: usize| -eps * bounds[n].log_big_m;
            if all {
                let missing: Vec<T> = (from..n_max)
                    .map(|n| {
                        let frac = (log_head_ln(&levels[n], t, ln_k(n)) - log_total(&levels[n], t)).exp();
                        (T::one() - frac).max(T::zero())
                    })
                    .collect();
                let hi = missing.iter().copied().fold(T::neg_infinity(), T::max);
                let lo = missing.iter().copied().fold(T::infinity(), T::min);
                let verdict = if hi < th.holds_below {
                    Verdict::PlausiblyHolds
                } else if lo >= th.fails_above {
                    Verdict::PlausiblyFails
                } else {
                    Verdict::Inconclusive
                };
                rows.push(HypothesisRow {
                    hypothesis: Hypothesis::HeadFraction,
                    t,
                    eps: Some(eps),
                    value: Some(hi),
                    verdict,
                });
            } else {
                let first = log_head_ln(&levels[from - 1], t, ln_k(from - 1));
                let last = log_head_ln(&levels[n_max - 1], t, ln_k(n_max - 1));
                let growth = last - first;
                let verdict = if growth >= T::of(GROWTH) {
                    Verdict::PlausiblyHolds
                } else if growth < T::of(STALL) {
                    Verdict::PlausiblyFails
                } else {
                    Verdict::Inconclusive
                };
                rows.push(HypothesisRow {
                    hypothesis: Hypothesis::HeadDivergence,
                    t,
                    eps: Some(eps),
                    value: Some(growth),
                    verdict,
                });
            }
        }
    }
    Ok(InfiniteConditionReport { n_max, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MPhiStatus {
    /// The lower proxy changes sign continuously, so positive values get
    /// arbitrarily small: reported as 0.
    AttainedInLimit,
    /// The sign change is a jump; the smallest positive grid value is reported.
    Inconclusive,
    /// No grid point has a non-positive proxy; refine or extend the grid.
    GridExhausted,
}

impl MPhiStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AttainedInLimit => "infimum-attained-in-limit",
            Self::Inconclusive => "inconclusive",
            Self::GridExhausted => "grid-exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MPhiEstimate<T> {
    pub value: T,
    pub status: MPhiStatus,
    /// `(t, lower proxy)` on the grid.
    pub grid: Vec<(T, T)>,
    /// Window maximum of `log #I_k / (k m_phi)`; `None` when `m_phi` is 0.
    pub count_ratio: Option<T>,
    /// Whether `limsup log #I_k / (k m_phi) < 1` plausibly holds.
    pub count_condition: Verdict,
}

/// A crossing slope this many times steeper than its neighbours is a jump.
const JUMP_FACTOR: f64 = 4.0;

/// `inf { lower pressure(t) > 0 }` from the lower proxies on `t_grid`.
pub fn m_phi_estimate<T: Scalar>(
    spec: &SystemSpec<T>,
    t_grid: &[T],
    k_max: usize,
    window: usize,
) -> Result<MPhiEstimate<T>> {
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("t grid must be strictly ascending".into()));
    }
    let grid: Vec<(T, T)> = t_grid
        .par_iter()
        .map(|&t| pressure(spec, t, k_max, window).map(|p| (t, p.lower_est)))
        .collect::<Result<_>>()?;
    let positive = grid.iter().map(|g| g.1).filter(|&p| p > T::zero());
    let min_pos = positive.fold(T::infinity(), T::min);
    if min_pos == T::infinity() {
        return Err(Error::MPhiUndefined);
    }
    let slope = |i: usize| ((grid[i + 1].1 - grid[i].1) / (grid[i + 1].0 - grid[i].0)).abs();
    let crossing = (0..grid.len() - 1).find(|&i| grid[i].1 > T::zero() && grid[i + 1].1 <= T::zero());
    let (value, status) = match crossing {
        None => (min_pos, MPhiStatus::GridExhausted),
        Some(i) => {
            let mut neighbours = Vec::new();
            if i > 0 {
                neighbours.push(slope(i - 1));
            }
            if i + 2 < grid.len() {
                neighbours.push(slope(i + 1));
            }
            let here = slope(i);
            let jump = neighbours.is_empty()
                || !here.is_finite()
                || neighbours.iter().all(|&s| here > T::of(JUMP_FACTOR) * s);
            if jump {
                (min_pos, MPhiStatus::Inconclusive)
            } else {
                (T::zero(), MPhiStatus::AttainedInLimit)
            }
        }
    };
    let (count_ratio, count_condition) = if value > T::zero() {
        let bounds = derived_bounds(spec, k_max)?;
        let r = bounds[k_max - window..]
            .iter()
            .map(|b| b.log_count / (T::of_usize(b.k) * value))
            .fold(T::neg_infinity(), T::max);
        let v = if !r.is_finite() {
            Verdict::Inconclusive
        } else if r < T::of(0.9) {
            Verdict::PlausiblyHolds
        } else if r >= T::one() {
            Verdict::PlausiblyFails
        } else {
            Verdict::Inconclusive
        };
        (Some(r), v)
    } else {
        (None, Verdict::PlausiblyFails)
    };
    Ok(MPhiEstimate {
        value,
        status,
        grid,
        count_ratio,
        count_condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{presets, ClosedFormRule, TailRule};

    #[test]
    fn geometric_families_pass() {
        for s in [presets::geometric_infinite::<f64>(), presets::geometric_stationary()] {
            let r = infinite_condition_check(&s, &[0.3, 0.6, 0.9], &[0.1, 0.5], 64).unwrap();
            assert_eq!(r.verdict(Hypothesis::Uniformity), Verdict::PlausiblyHolds);
            assert_eq!(r.verdict(Hypothesis::HeadFraction), Verdict::PlausiblyHolds, "{r:?}");
            assert_eq!(r.verdict(Hypothesis::HeadDivergence), Verdict::PlausiblyHolds);
        }
    }

    #[test]
    fn harmonic_heads_diverge() {
        let t0 = 0.5;
        let s = SystemSpec::builder(
            "harmonic",
            TailRule::ClosedForm(ClosedFormRule::PowerLaw {
                scale: 0.5,
                level_scale: 1.0,
                exponent: 1.0 / t0,
            }),
        )
        .build()
        .unwrap();
        let r = infinite_condition_check(&s, &[t0], &[0.5], 64).unwrap();
        assert_eq!(r.verdict(Hypothesis::Uniformity), Verdict::PlausiblyHolds);
        let row = r.rows.iter().find(|r| r.hypothesis == Hypothesis::HeadDivergence).unwrap();
        assert_eq!(row.verdict, Verdict::PlausiblyHolds, "{row:?}");
    }

    #[test]
    fn finite_spec_vacuous() {
        let r = infinite_condition_check(&presets::middle_third::<f64>(), &[0.5], &[0.1], 16).unwrap();
        assert!(r.rows.iter().all(|r| r.verdict == Verdict::PlausiblyHolds));
    }

    #[test]
    fn m_phi_linear_pressures() {
        let grid: Vec<f64> = (1..25).map(|i| i as f64 * 0.05).collect();
        for s in [
            presets::middle_third::<f64>(),
            SystemSpec::builder(
                "thirds",
                TailRule::ClosedForm(ClosedFormRule::Homogeneous {
                    ratio: 1.0 / 3.0,
                    branches: 3,
                }),
            )
            .build()
            .unwrap(),
        ] {
            let m = m_phi_estimate(&s, &grid, 64, 16).unwrap();
            assert_eq!(m.status, MPhiStatus::AttainedInLimit, "{}", s.name());
            assert_eq!(m.value, 0.0);
            assert_eq!(m.count_condition, Verdict::PlausiblyFails);
        }
    }

    #[test]
    fn m_phi_edges() {
        let s = presets::middle_third::<f64>();
        let m = m_phi_estimate(&s, &[0.1, 0.2, 0.3], 64, 16).unwrap();
        assert_eq!(m.status, MPhiStatus::GridExhausted);
        assert!((m.value - (2f64.ln() - 0.3 * 3f64.ln())).abs() < 1e-12);
        assert_eq!(m_phi_estimate(&s, &[0.8, 0.9], 64, 16), Err(Error::MPhiUndefined));
        // E2's proxies drop from large positive values to very negative ones
        let m = m_phi_estimate(&presets::e2::<f64>(), &[0.0, 0.1, 0.2, 0.3], 200, 50).unwrap();
        assert_eq!(m.status, MPhiStatus::Inconclusive, "{m:?}");
    }
}
