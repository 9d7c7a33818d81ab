//! Partition sums, pressure proxies and their zeros.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;
use crate::roots::{bisect_sign, proxy_root};
use crate::scalar::Scalar;
use crate::system::{LevelSpec, SystemSpec};

/// `log sum_j c_j^t` for one level; `+inf` when an infinite family diverges.
pub fn level_sum<T: Scalar>(level: &LevelSpec<T>, t: T) -> T {
    match level {
        LevelSpec::Finite(groups) => {
            if groups.len() == 1 {
                return groups[0].mult.ln() + t * groups[0].log_ratio;
            }
            log_sum_exp(groups.iter().map(|g| g.mult.ln() + t * g.log_ratio))
        }
        LevelSpec::Analytic(f) => f.log_power_sum(t),
    }
}

fn require_product_model<T: Scalar>(spec: &SystemSpec<T>) -> Result<()> {
    if spec.distortion() > T::one() {
        return Err(Error::NeedsWordOracle {
            constant: spec.distortion().f64(),
        });
    }
    Ok(())
}

/// Levels `1..=k_max` materialized once, for repeated evaluation at many `t`.
#[derive(Debug, Clone)]
pub struct LevelTable<T> {
    levels: Vec<LevelSpec<T>>,
}

impl<T: Scalar> LevelTable<T> {
    pub fn new(spec: &SystemSpec<T>, k_max: usize) -> Result<Self> {
        Ok(Self {
            levels: spec.levels(k_max)?,
        })
    }

    pub fn k_max(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[LevelSpec<T>] {
        &self.levels
    }

    /// `log S_k(t)` for `k = 1..=k_max`.
    pub fn log_partition_sums(&self, t: T) -> Vec<T> {
        let mut acc = T::zero();
        self.levels
            .iter()
            .map(|l| {
                acc = acc + level_sum(l, t);
                acc
            })
            .collect()
    }

    /// `log S_k(t)` for a single `k <= k_max`.
    pub fn log_partition_sum(&self, k: usize, t: T) -> T {
        self.levels[..k].iter().fold(T::zero(), |acc, l| acc + level_sum(l, t))
    }

    /// `(max, min)` of `q_k(t) = log S_k(t) / k` over `k` in `(k_max - window, k_max]`.
    pub fn window_extremes(&self, t: T, window: usize) -> (T, T) {
        let sums = self.log_partition_sums(t);
        let n = sums.len();
        let mut hi = T::neg_infinity();
        let mut lo = T::infinity();
        for (i, &s) in sums.iter().enumerate().skip(n - window) {
            let q = s / T::of_usize(i + 1);
            hi = hi.max(q);
            lo = lo.min(q);
        }
        (hi, lo)
    }
}

/// `log S_k(t)` in the product model.
pub fn partition_sum<T: Scalar>(spec: &SystemSpec<T>, k: usize, t: T) -> Result<T> {
    require_product_model(spec)?;
    if k == 0 {
        return Err(Error::Domain("depth must be >= 1".into()));
    }
    let mut acc = T::zero();
    for i in 1..=k {
        acc = acc + level_sum(&spec.materialize_level(i)?, t);
    }
    Ok(acc)
}

/// Derivative norms of composed maps for systems that are not plain products.
pub trait WordOracle<T>: Sync {
    /// Deepest word the oracle can evaluate.
    fn max_depth(&self) -> usize;
    /// `log ||D phi_u||` for the word `u`, indices per level counted from 0.
    fn log_norm(&self, word: &[usize]) -> T;
}

/// The product model as a word oracle: `||D phi_u|| = prod c_{i,u_i}`.
#[derive(Debug, Clone)]
pub struct ProductOracle<T> {
    ratios: Vec<Vec<T>>,
}

impl<T: Scalar> ProductOracle<T> {
    pub fn new(spec: &SystemSpec<T>, depth: usize) -> Result<Self> {
        let mut ratios = Vec::with_capacity(depth);
        for k in 1..=depth {
            let level = spec.materialize_level(k)?;
            let expanded = level.expanded_log_ratios().ok_or(Error::InfiniteLevel {
                level: k,
                what: "word enumeration",
            })?;
            ratios.push(expanded);
        }
        Ok(Self { ratios })
    }
}

impl<T: Scalar> WordOracle<T> for ProductOracle<T> {
    fn max_depth(&self) -> usize {
        self.ratios.len()
    }

    fn log_norm(&self, word: &[usize]) -> T {
        word.iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, &j)| acc + self.ratios[i][j])
    }
}

/// Word-oracle partition sum with the distortion bracket around the product value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSum<T> {
    /// `log S_k(t)` by explicit enumeration.
    pub log_sum: T,
    /// Product-model value shifted by `-t log C` and `+t log C`.
    pub log_lower: T,
    pub log_upper: T,
}

const MAX_ENUMERATED_WORDS: u64 = 1 << 24;

/// `log S_k(t)` by enumerating every word of length `k` through `oracle`.
pub fn partition_sum_with_oracle<T: Scalar, O: WordOracle<T>>(
    spec: &SystemSpec<T>,
    oracle: &O,
    k: usize,
    t: T,
) -> Result<OracleSum<T>> {
    if k > oracle.max_depth() {
        return Err(Error::OracleDepthExceeded {
            max: oracle.max_depth(),
            requested: k,
        });
    }
    let mut sizes = Vec::with_capacity(k);
    let mut total: u64 = 1;
    for i in 1..=k {
        let level = spec.materialize_level(i)?;
        let n = level.count().ok_or(Error::InfiniteLevel {
            level: i,
            what: "word enumeration",
        })?;
        total = total.saturating_mul(n);
        sizes.push(n as usize);
    }
    if total > MAX_ENUMERATED_WORDS {
        return Err(Error::InstanceTooLarge(format!("{total} words at depth {k}")));
    }
    let mut terms = Vec::with_capacity(total as usize);
    let mut word = vec![0usize; k];
    loop {
        terms.push(t * oracle.log_norm(&word));
        // odometer increment
        let mut i = k;
        loop {
            if i == 0 {
                let log_sum = log_sum_exp(terms);
                let mut product = T::zero();
                for j in 1..=k {
                    product = product + level_sum(&spec.materialize_level(j)?, t);
                }
                let slack = t * spec.distortion().ln();
                return Ok(OracleSum {
                    log_sum,
                    log_lower: product - slack,
                    log_upper: product + slack,
                });
            }
            i -= 1;
            word[i] += 1;
            if word[i] < sizes[i] {
                break;
            }
            word[i] = 0;
        }
    }
}

/// Depths sampled by [`pressure`]: powers of two below the window, then every
/// depth inside the trailing window.
pub fn sample_schedule(k_max: usize, window: usize) -> Vec<usize> {
    let start = k_max - window + 1;
    let mut ks = Vec::new();
    let mut k = 1;
    while k < start {
        ks.push(k);
        k *= 2;
    }
    ks.extend(start..=k_max);
    ks
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureEstimate<T> {
    pub t: T,
    /// `(k, q_k)` with `q_k = log S_k(t) / k`.
    pub samples: Vec<(usize, T)>,
    /// Trailing-window maximum of `q_k`, the upper pressure proxy.
    pub upper_est: T,
    /// Trailing-window minimum of `q_k`, the lower pressure proxy.
    pub lower_est: T,
    pub k_max: usize,
    pub window: usize,
}

fn check_window(k_max: usize, window: usize) -> Result<()> {
    if window == 0 || k_max < 2 * window {
        return Err(Error::Domain(format!(
            "need window >= 1 and k_max >= 2*window (k_max={k_max}, window={window})"
        )));
    }
    Ok(())
}

pub fn pressure<T: Scalar>(spec: &SystemSpec<T>, t: T, k_max: usize, window: usize) -> Result<PressureEstimate<T>> {
    check_window(k_max, window)?;
    require_product_model(spec)?;
    let table = LevelTable::new(spec, k_max)?;
    Ok(pressure_from_table(&table, t, window))
}

pub fn pressure_from_table<T: Scalar>(table: &LevelTable<T>, t: T, window: usize) -> PressureEstimate<T> {
    let k_max = table.k_max();
    let sums = table.log_partition_sums(t);
    let samples: Vec<(usize, T)> = sample_schedule(k_max, window)
        .into_iter()
        .map(|k| (k, sums[k - 1] / T::of_usize(k)))
        .collect();
    let tail = &samples[samples.len() - window..];
    let upper_est = tail.iter().map(|s| s.1).fold(T::neg_infinity(), T::max);
    let lower_est = tail.iter().map(|s| s.1).fold(T::infinity(), T::min);
    PressureEstimate {
        t,
        samples,
        upper_est,
        lower_est,
        k_max,
        window,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpPointResult<T> {
    /// Estimate of the zero of the upper pressure.
    pub s_upper: T,
    /// Estimate of the zero of the lower pressure.
    pub s_lower: T,
    pub upper_width: T,
    pub lower_width: T,
    pub k_max: usize,
    pub window: usize,
    /// Pressure tends to `-inf` for every `t > 0`; both estimates are then 0.
    pub degenerate: bool,
}

/// Ratio below which a root shrinking between `k_max / 4` and `k_max` is
/// read as a root drifting to 0.
pub(crate) const COLLAPSE_RATIO: f64 = 0.75;

/// Zeros of the upper and lower pressure proxies, searched on `[0, d]`.
pub fn jump_points<T: Scalar>(spec: &SystemSpec<T>, k_max: usize, window: usize, tol: T) -> Result<JumpPointResult<T>> {
    jump_points_with_cap(spec, k_max, window, tol, T::of(spec.dimension() as f64))
}

pub fn jump_points_with_cap<T: Scalar>(
    spec: &SystemSpec<T>,
    k_max: usize,
    window: usize,
    tol: T,
    cap: T,
) -> Result<JumpPointResult<T>> {
    check_window(k_max, window)?;
    require_product_model(spec)?;
    if !(tol > T::zero()) {
        return Err(Error::Domain("tol must be positive".into()));
    }
    let table = LevelTable::new(spec, k_max)?;
    let (s_upper, upper_width) = proxy_root(|t| table.window_extremes(t, window).0, cap, tol)?;
    let (s_lower, lower_width) = proxy_root(|t| table.window_extremes(t, window).1, cap, tol)?;

    // a root that keeps shrinking with depth signals pressure -> -inf
    let degenerate = if s_upper < tol {
        true
    } else {
        let k_early = k_max / 4;
        let w_early = (window / 4).max(1);
        if k_early >= 2 * w_early && k_early >= 2 {
            let early = LevelTable {
                levels: table.levels[..k_early].to_vec(),
            };
            let (r_early, _) = proxy_root(|t| early.window_extremes(t, w_early).0, cap, tol)?;
            s_upper <= T::of(COLLAPSE_RATIO) * r_early
        } else {
            false
        }
    };
    if degenerate {
        return Ok(JumpPointResult {
            s_upper: T::zero(),
            s_lower: T::zero(),
            upper_width,
            lower_width,
            k_max,
            window,
            degenerate,
        });
    }
    Ok(JumpPointResult {
        s_upper,
        s_lower: s_lower.min(s_upper),
        upper_width,
        lower_width,
        k_max,
        window,
        degenerate,
    })
}

fn finite_levels<T: Scalar>(spec: &SystemSpec<T>, k: usize) -> Result<LevelTable<T>> {
    let table = LevelTable::new(spec, k)?;
    if let Some(i) = table.levels.iter().position(|l| !l.is_finite()) {
        return Err(Error::InfiniteLevel {
            level: i + 1,
            what: "the Moran exponent",
        });
    }
    Ok(table)
}

fn moran_root<T: Scalar>(levels: &[LevelSpec<T>], tol: T) -> T {
    let f = |s: T| levels.iter().fold(T::zero(), |acc, l| acc + level_sum(l, s));
    if f(T::zero()) <= T::zero() {
        return T::zero();
    }
    let mut hi = T::one();
    while f(hi) > T::zero() {
        hi = hi * T::of(2.0);
    }
    bisect_sign(f, T::zero(), hi, tol).mid()
}

/// `s_k` solving `prod_{i<=k} sum_j c_{i,j}^s = 1`.
pub fn moran_exponent<T: Scalar>(spec: &SystemSpec<T>, k: usize, tol: T) -> Result<T> {
    if k == 0 || !(tol > T::zero()) {
        return Err(Error::Domain("need k >= 1 and tol > 0".into()));
    }
    let table = finite_levels(spec, k)?;
    Ok(moran_root(&table.levels, tol))
}

/// `(min, max)` of `s_k` over `k` in the trailing window.
pub fn moran_limits<T: Scalar>(spec: &SystemSpec<T>, k_max: usize, window: usize, tol: T) -> Result<(T, T)> {
    check_window(k_max, window)?;
    if !(tol > T::zero()) {
        return Err(Error::Domain("tol must be positive".into()));
    }
    let table = finite_levels(spec, k_max)?;
    let roots: Vec<T> = (k_max - window + 1..=k_max)
        .into_par_iter()
        .map(|k| moran_root(&table.levels[..k], tol))
        .collect();
    let lo = roots.iter().copied().fold(T::infinity(), T::min);
    let hi = roots.iter().copied().fold(T::neg_infinity(), T::max);
    Ok((lo, hi))
}
