//! Minimum-cost cut sets and intermediate dimension spectra.
//!
//! A cut set is admissible at `(delta, theta)` when every element has
//! diameter at most `delta` and its parent has diameter strictly above
//! `delta^{1/theta}`. Children of the root are exempt from the parent
//! constraint.

mod brute;
mod skeleton;
mod spectrum;

pub use brute::brute_force_min_cut;
pub use spectrum::{
    spectrum, theta_jump_points, theta_pressure, DeltaSchedule, SpectrumCurve, SpectrumOptions, SpectrumPoint,
    ThetaJumpResult, ThetaPressure, TracePoint,
};

use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;
use crate::scalar::Scalar;
use crate::system::SystemSpec;

use skeleton::{Limits, Skeleton};

/// Default cap on the number of word classes held by one recursion.
pub const DEFAULT_MEMO_BUDGET: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutSetProblem<T> {
    pub delta: T,
    pub theta: T,
    pub t: T,
    /// No admissible word is deeper than this.
    pub depth_cap: usize,
}

impl<T: Scalar> CutSetProblem<T> {
    /// Problem with the depth cap implied by `c_max`.
    pub fn new(spec: &SystemSpec<T>, delta: T, theta: T, t: T) -> Self {
        Self {
            delta,
            theta,
            t,
            depth_cap: implied_depth_cap(spec, delta.ln(), theta),
        }
    }
}

pub(crate) fn implied_depth_cap<T: Scalar>(spec: &SystemSpec<T>, log_delta: T, theta: T) -> usize {
    // the parent of an admissible word has diameter > delta^{1/theta}, and
    // diameters at depth k are at most c_max^k |J|
    let levels = (log_delta / theta - spec.log_ambient_diameter()) / spec.log_c_max();
    levels.floor().to_usize().unwrap_or(usize::MAX - 2).saturating_add(2)
}

/// Cut elements sharing one word class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutClass<T> {
    pub level: usize,
    pub log_diam: T,
    /// `log w_u = log |J_u| - log |J|`.
    pub log_weight: T,
    /// Log of the number of cut elements in the class.
    pub log_count: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutSetResult<T> {
    pub min_cost_log: T,
    pub k_delta: usize,
    pub argmin_summary: Vec<CutClass<T>>,
    /// Always true here: the recursion works on exact classes, no quantization.
    pub exact: bool,
    /// Size of the class DAG that was solved.
    pub classes: usize,
    pub delta: T,
    pub theta: T,
}

impl<T: Scalar> CutSetResult<T> {
    /// `log` of the number of cut elements at each level, ascending by level.
    pub fn per_level_counts(&self) -> Vec<(usize, T)> {
        let mut levels: Vec<usize> = self.argmin_summary.iter().map(|c| c.level).collect();
        levels.sort_unstable();
        levels.dedup();
        levels
            .into_iter()
            .map(|l| {
                let c = log_sum_exp(
                    self.argmin_summary
                        .iter()
                        .filter(|c| c.level == l)
                        .map(|c| c.log_count),
                );
                (l, c)
            })
            .collect()
    }

    /// `log sum_u w_u^t` recomputed from the summary.
    pub fn reevaluate(&self, t: T) -> T {
        log_sum_exp(self.argmin_summary.iter().map(|c| c.log_count + t * c.log_weight))
    }
}

pub(crate) fn validate<T: Scalar>(spec: &SystemSpec<T>, p: &CutSetProblem<T>) -> Result<()> {
    if !(p.theta > T::zero() && p.theta <= T::one()) {
        return Err(Error::Domain(format!("theta = {} outside (0,1]", p.theta)));
    }
    check_delta(spec, p.delta)?;
    if p.theta < T::one() && p.delta > T::one() {
        return Err(Error::Domain("delta must be <= 1 when theta < 1".into()));
    }
    if !(p.t >= T::zero()) {
        return Err(Error::Domain(format!("t = {} must be >= 0", p.t)));
    }
    if spec.distortion() > T::one() {
        return Err(Error::NeedsWordOracle {
            constant: spec.distortion().f64(),
        });
    }
    Ok(())
}

fn check_delta<T: Scalar>(spec: &SystemSpec<T>, delta: T) -> Result<()> {
    if !(delta > T::zero() && delta < spec.ambient_diameter()) {
        return Err(Error::Domain(format!(
            "delta = {delta} outside (0, |J|) with |J| = {}",
            spec.ambient_diameter()
        )));
    }
    Ok(())
}

/// `min { k : m_k |J| <= delta }`.
pub fn k_delta<T: Scalar>(spec: &SystemSpec<T>, delta: T) -> Result<usize> {
    check_delta(spec, delta)?;
    k_delta_log(spec, delta.ln())
}

pub(crate) fn k_delta_log<T: Scalar>(spec: &SystemSpec<T>, target: T) -> Result<usize> {
    let mut log_diam = spec.log_ambient_diameter();
    let mut k = 0;
    while log_diam > target {
        k += 1;
        log_diam = log_diam + spec.materialize_level(k)?.log_min_ratio();
    }
    Ok(k)
}

pub(crate) fn build_skeleton<T: Scalar>(
    spec: &SystemSpec<T>,
    log_delta: T,
    theta: T,
    depth_cap: usize,
    memo_budget: usize,
) -> Result<Skeleton<T>> {
    skeleton::build(
        spec,
        log_delta,
        log_delta / theta,
        &Limits {
            depth_cap,
            memo_budget,
        },
    )
}

/// Exact minimum of `sum_{u in M} w_u^t` over admissible cut sets `M`.
pub fn min_cut_cost<T: Scalar>(spec: &SystemSpec<T>, problem: &CutSetProblem<T>) -> Result<CutSetResult<T>> {
    min_cut_cost_with_budget(spec, problem, DEFAULT_MEMO_BUDGET)
}

pub fn min_cut_cost_with_budget<T: Scalar>(
    spec: &SystemSpec<T>,
    problem: &CutSetProblem<T>,
    memo_budget: usize,
) -> Result<CutSetResult<T>> {
    validate(spec, problem)?;
    let sk = build_skeleton(spec, problem.delta.ln(), problem.theta, problem.depth_cap, memo_budget)?;
    let (costs, expands) = sk.solve(problem.t);
    let log_j = sk.log_j;
    let argmin_summary = sk
        .argmin_classes(&expands)
        .into_iter()
        .map(|(level, log_diam, log_count)| CutClass {
            level,
            log_diam,
            log_weight: log_diam - log_j,
            log_count,
        })
        .collect();
    Ok(CutSetResult {
        min_cost_log: costs[0],
        k_delta: k_delta(spec, problem.delta)?,
        argmin_summary,
        exact: true,
        classes: sk.nodes.len(),
        delta: problem.delta,
        theta: problem.theta,
    })
}

/// `log sum_u max(|J_u|, delta^{1/theta})^s` over the cut set in `summary`.
pub fn cover_cost_log<T: Scalar>(summary: &CutSetResult<T>, delta: T, theta: T, s: T) -> Result<T> {
    if summary.delta != delta || summary.theta != theta {
        return Err(Error::SummaryMismatch(format!(
            "summary is for (delta, theta) = ({}, {}), asked for ({delta}, {theta})",
            summary.delta, summary.theta
        )));
    }
    if summary.argmin_summary.is_empty() {
        return Err(Error::SummaryMismatch("summary carries no cut classes".into()));
    }
    let floor = delta.ln() / theta;
    Ok(log_sum_exp(
        summary
            .argmin_summary
            .iter()
            .map(|c| c.log_count + s * c.log_diam.max(floor)),
    ))
}

/// [`cover_cost_log`] as a plain number.
pub fn cover_cost<T: Scalar>(summary: &CutSetResult<T>, delta: T, theta: T, s: T) -> Result<T> {
    cover_cost_log(summary, delta, theta, s).map(T::exp)
}
