use crate::error::{Error, Result};
use crate::logspace::{log1m_exp, log_add_exp, log_sum_exp};
use crate::scalar::Scalar;
use crate::special::{hurwitz_zeta, log_head_power_sum, zeta};

/// Number of maps sharing one contraction ratio.
///
/// Some presets carry `2^k` identical maps at level `k`, so the count is kept
/// as a natural log with the exact integer alongside whenever it fits in a
/// `u64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplicity<T> {
    count: Option<u64>,
    ln: T,
}

impl<T: Scalar> Multiplicity<T> {
    pub fn new(count: u64) -> Self {
        assert!(count >= 1, "multiplicity must be positive");
        Self {
            count: Some(count),
            ln: T::of(count as f64).ln(),
        }
    }

    /// `base^exp`.
    pub fn pow(base: u64, exp: u32) -> Self {
        assert!(base >= 1);
        Self {
            count: base.checked_pow(exp),
            ln: T::of(exp as f64) * T::of(base as f64).ln(),
        }
    }

    /// `base^exp - 1`; requires `base^exp >= 2`.
    pub fn pow_minus_one(base: u64, exp: u32) -> Self {
        let p = Self::pow(base, exp);
        Self {
            count: p.count.map(|c| c - 1),
            ln: p.ln + log1m_exp(-p.ln),
        }
    }

    pub fn count(&self) -> Option<u64> {
        self.count
    }

    pub fn ln(&self) -> T {
        self.ln
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            count: match (self.count, other.count) {
                (Some(a), Some(b)) => a.checked_add(b),
                _ => None,
            },
            ln: log_add_exp(self.ln, other.ln),
        }
    }
}

/// A contraction ratio together with how many maps of the level share it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioGroup<T> {
    pub log_ratio: T,
    pub mult: Multiplicity<T>,
}

impl<T: Scalar> RatioGroup<T> {
    pub fn new(ratio: T, count: u64) -> Self {
        Self {
            log_ratio: ratio.ln(),
            mult: Multiplicity::new(count),
        }
    }

    pub fn from_log(log_ratio: T, mult: Multiplicity<T>) -> Self {
        Self { log_ratio, mult }
    }

    pub fn ratio(&self) -> T {
        self.log_ratio.exp()
    }
}

/// Infinite ratio family `c_j`, `j = 1, 2, ...` with closed-form power sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticFamily<T> {
    /// `c_j = scale * decay^j`.
    Geometric { log_scale: T, log_decay: T },
    /// `c_j = scale * j^{-exponent}`.
    PowerLaw { log_scale: T, exponent: T },
}

impl<T: Scalar> AnalyticFamily<T> {
    pub fn log_ratio(&self, j: usize) -> T {
        let j = T::of_usize(j);
        match *self {
            Self::Geometric { log_scale, log_decay } => log_scale + j * log_decay,
            Self::PowerLaw { log_scale, exponent } => log_scale - exponent * j.ln(),
        }
    }

    pub fn sup_log_ratio(&self) -> T {
        self.log_ratio(1)
    }

    /// Infimum of `t` for which `sum_j c_j^t` converges.
    pub fn convergence_exponent(&self) -> T {
        match *self {
            Self::Geometric { .. } => T::zero(),
            Self::PowerLaw { exponent, .. } => exponent.recip(),
        }
    }

    /// `log sum_{j>=1} c_j^t`, `+inf` when divergent.
    pub fn log_power_sum(&self, t: T) -> T {
        if t <= self.convergence_exponent() {
            return T::infinity();
        }
        match *self {
            Self::Geometric { log_scale, log_decay } => {
                t * log_scale + t * log_decay - log1m_exp(t * log_decay)
            }
            Self::PowerLaw { log_scale, exponent } => t * log_scale + zeta(exponent * t).ln(),
        }
    }

    /// `log sum_{j<=k} c_j^t`.
    pub fn log_head_sum(&self, t: T, k: usize) -> T {
        if k == 0 {
            return T::neg_infinity();
        }
        match *self {
            Self::Geometric { log_scale, log_decay } => {
                if t == T::zero() {
                    return T::of_usize(k).ln();
                }
                let lq = t * log_decay;
                t * log_scale + lq + log1m_exp(T::of_usize(k) * lq) - log1m_exp(lq)
            }
            Self::PowerLaw { log_scale, exponent } => {
                t * log_scale + log_head_power_sum(exponent * t, T::of_usize(k).ln() + T::of(1e-12))
            }
        }
    }

    /// `log sum_{j>k} c_j^t`, `+inf` when divergent.
    pub fn log_tail_sum(&self, t: T, k: usize) -> T {
        if t <= self.convergence_exponent() {
            return T::infinity();
        }
        match *self {
            Self::Geometric { log_scale, log_decay } => {
                let lq = t * log_decay;
                t * log_scale + T::of_usize(k + 1) * lq - log1m_exp(lq)
            }
            Self::PowerLaw { log_scale, exponent } => {
                t * log_scale + hurwitz_zeta(exponent * t, T::of_usize(k + 1)).ln()
            }
        }
    }

    /// The first `k` ratios as an explicit finite level.
    pub fn truncate(&self, k: usize) -> LevelSpec<T> {
        let groups = (1..=k)
            .map(|j| RatioGroup::from_log(self.log_ratio(j), Multiplicity::new(1)))
            .collect();
        LevelSpec::from_sorted_groups(groups)
    }
}

/// The contraction ratios of one level.
#[derive(Debug, Clone, PartialEq)]
pub enum LevelSpec<T> {
    /// Groups sorted by ratio, descending; equal ratios merged.
    Finite(Vec<RatioGroup<T>>),
    Analytic(AnalyticFamily<T>),
}

impl<T: Scalar> LevelSpec<T> {
    /// Validates ratios in (0,1), sorts descending and merges equal ratios.
    pub fn finite(groups: Vec<RatioGroup<T>>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidSystem("level has no maps".into()));
        }
        for g in &groups {
            if !(g.log_ratio.is_finite() && g.log_ratio < T::zero()) {
                return Err(Error::InvalidSystem(format!(
                    "contraction ratio {} outside (0,1)",
                    g.ratio()
                )));
            }
        }
        let mut groups = groups;
        groups.sort_by(|a, b| b.log_ratio.partial_cmp(&a.log_ratio).unwrap());
        let mut merged: Vec<RatioGroup<T>> = Vec::with_capacity(groups.len());
        for g in groups {
            match merged.last_mut() {
                Some(last) if last.log_ratio == g.log_ratio => last.mult = last.mult.merge(g.mult),
                _ => merged.push(g),
            }
        }
        Ok(Self::Finite(merged))
    }

    pub(crate) fn from_sorted_groups(groups: Vec<RatioGroup<T>>) -> Self {
        Self::finite(groups).expect("generated level is valid")
    }

    /// Convenience constructor from `(ratio, count)` pairs.
    pub fn from_ratios(pairs: &[(T, u64)]) -> Result<Self> {
        Self::finite(pairs.iter().map(|&(r, n)| RatioGroup::new(r, n)).collect())
    }

    pub fn groups(&self) -> Option<&[RatioGroup<T>]> {
        match self {
            Self::Finite(g) => Some(g),
            Self::Analytic(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite(_))
    }

    /// `log c̄_k`.
    pub fn log_max_ratio(&self) -> T {
        match self {
            Self::Finite(g) => g[0].log_ratio,
            Self::Analytic(f) => f.sup_log_ratio(),
        }
    }

    /// `log c̲_k`; `-inf` for infinite families (ratios accumulate at 0).
    pub fn log_min_ratio(&self) -> T {
        match self {
            Self::Finite(g) => g[g.len() - 1].log_ratio,
            Self::Analytic(_) => T::neg_infinity(),
        }
    }

    /// `log #I_k`, `+inf` for infinite families.
    pub fn log_count(&self) -> T {
        match self {
            Self::Finite(g) => log_sum_exp(g.iter().map(|g| g.mult.ln())),
            Self::Analytic(_) => T::infinity(),
        }
    }

    /// Exact `#I_k` when finite and representable.
    pub fn count(&self) -> Option<u64> {
        match self {
            Self::Finite(g) => g
                .iter()
                .try_fold(0u64, |acc, g| g.mult.count().and_then(|c| acc.checked_add(c))),
            Self::Analytic(_) => None,
        }
    }

    /// Ratios of every map in the level, in group order. Only sensible for
    /// small levels.
    pub fn expanded_log_ratios(&self) -> Option<Vec<T>> {
        let groups = self.groups()?;
        let mut out = Vec::new();
        for g in groups {
            let n = g.mult.count()?;
            if n > 1 << 20 {
                return None;
            }
            out.extend(std::iter::repeat_n(g.log_ratio, n as usize));
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_sorted_and_merged() {
        let level = LevelSpec::from_ratios(&[(0.25f64, 1), (0.5, 2), (0.25, 3)]).unwrap();
        let g = level.groups().unwrap();
        assert_eq!(g.len(), 2);
        assert!((g[0].ratio() - 0.5).abs() < 1e-15);
        assert_eq!(g[1].mult.count(), Some(4));
        assert_eq!(level.count(), Some(6));
        assert!((level.log_count() - 6f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn rejects_ratios_outside_unit_interval() {
        assert!(LevelSpec::from_ratios(&[(1.0, 2)]).is_err());
        assert!(LevelSpec::from_ratios(&[(0.0, 2)]).is_err());
        assert!(LevelSpec::<f64>::finite(vec![]).is_err());
    }

    #[test]
    fn huge_multiplicities_stay_in_log_space() {
        let m = Multiplicity::<f64>::pow(2, 2000);
        assert_eq!(m.count(), None);
        assert!((m.ln() - 2000.0 * 2f64.ln()).abs() < 1e-9);
        let m1 = Multiplicity::<f64>::pow_minus_one(2, 2);
        assert_eq!(m1.count(), Some(3));
        assert!((m1.ln() - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn geometric_family_sums() {
        // c_j = 2^{-3} 2^{-j}: at t = 1 the sum is 2^{-3}
        let f = AnalyticFamily::Geometric {
            log_scale: -3.0 * 2f64.ln(),
            log_decay: -(2f64.ln()),
        };
        assert!((f.log_power_sum(1.0) + 3.0 * 2f64.ln()).abs() < 1e-14);
        assert_eq!(f.log_power_sum(0.0), f64::INFINITY);
        let head = f.log_head_sum(0.7, 5);
        let tail = f.log_tail_sum(0.7, 5);
        let direct_head: f64 = (1..=5).map(|j| (0.7 * f.log_ratio(j)).exp()).sum();
        assert!((head - direct_head.ln()).abs() < 1e-13);
        assert!((log_add_exp(head, tail) - f.log_power_sum(0.7)).abs() < 1e-13);
    }

    #[test]
    fn power_law_family_sums() {
        let f = AnalyticFamily::PowerLaw {
            log_scale: -(2f64.ln()),
            exponent: 2.0,
        };
        assert_eq!(f.log_power_sum(0.5), f64::INFINITY);
        let t = 1.5;
        let direct: f64 = (1..=2_000_000)
            .rev()
            .map(|j| (t * f.log_ratio(j)).exp())
            .sum();
        assert!((f.log_power_sum(t) - direct.ln()).abs() < 1e-6);
        let split = log_add_exp(f.log_head_sum(t, 40), f.log_tail_sum(t, 40));
        assert!((split - f.log_power_sum(t)).abs() < 1e-12);
    }
}
