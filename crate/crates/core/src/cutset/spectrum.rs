//! theta-pressure proxies, their zeros and the assembled spectrum.
//!
//! The scale sequence is kept in log space: super-exponentially contracting
//! systems reach scales far below the smallest positive float after a few
//! dozen levels.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pressure::{jump_points_with_cap, JumpPointResult, COLLAPSE_RATIO};
use crate::roots::proxy_root;
use crate::scalar::Scalar;
use crate::system::SystemSpec;

use super::skeleton::Skeleton;
use super::{build_skeleton, implied_depth_cap, DEFAULT_MEMO_BUDGET};

/// Schedule length used by [`DeltaSchedule::for_depth`] when the requested
/// depth would need more scales than this.
pub const MAX_DEFAULT_STEPS: usize = 1024;

/// Geometric scales `delta_j = delta_0 * rho^j`, `j = 0..steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSchedule<T> {
    pub log_delta0: T,
    pub log_rho: T,
    pub steps: usize,
}

impl<T: Scalar> DeltaSchedule<T> {
    pub fn new(delta0: T, rho: T, steps: usize) -> Self {
        Self {
            log_delta0: delta0.ln(),
            log_rho: rho.ln(),
            steps,
        }
    }

    /// Schedule whose last scale is crossed at depth `k_target`, with
    /// `rho = c_max^0.9`. Capped at [`MAX_DEFAULT_STEPS`] scales.
    pub fn for_depth(spec: &SystemSpec<T>, k_target: usize) -> Result<Self> {
        let log_c = spec.log_c_max();
        let log_delta0 = spec.log_ambient_diameter().min(T::zero()) + log_c;
        let log_rho = T::of(0.9) * log_c;
        let mut target = spec.log_ambient_diameter();
        for k in 1..=k_target.max(1) {
            target = target + spec.materialize_level(k)?.log_min_ratio();
        }
        let needed = ((target - log_delta0) / log_rho).ceil().to_usize().unwrap_or(usize::MAX);
        Ok(Self {
            log_delta0,
            log_rho,
            steps: needed.saturating_add(1).clamp(4, MAX_DEFAULT_STEPS),
        })
    }

    pub fn validate(&self, spec: &SystemSpec<T>, window: usize) -> Result<()> {
        if !(self.log_rho > spec.log_c_max() && self.log_rho < T::zero()) {
            return Err(Error::Domain(format!(
                "rho = {} must lie in (c_max, 1) with c_max = {}",
                self.log_rho.exp(),
                spec.c_max()
            )));
        }
        if window == 0 || self.steps < 2 * window {
            return Err(Error::Domain(format!(
                "need window >= 1 and steps >= 2*window (steps={}, window={window})",
                self.steps
            )));
        }
        if !(self.log_delta0 < spec.log_ambient_diameter() && self.log_delta0 <= T::zero()) {
            return Err(Error::Domain(format!(
                "delta_0 = {} must be below |J| and at most 1",
                self.log_delta0.exp()
            )));
        }
        Ok(())
    }

    pub fn log_delta(&self, j: usize) -> T {
        self.log_delta0 + T::of_usize(j) * self.log_rho
    }

    pub fn log_delta_min(&self) -> T {
        self.log_delta(self.steps - 1)
    }
}

/// One scale of a theta-pressure computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint<T> {
    pub log_delta: T,
    pub k_delta: usize,
    pub min_cost_log: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPressure<T> {
    /// Window maximum of `log min_cost / k_delta`.
    pub upper: T,
    /// Window minimum of the same.
    pub lower: T,
    /// The scales inside the trailing window.
    pub trace: Vec<TracePoint<T>>,
}

/// `k_delta` for every `log_delta` in a non-increasing sequence.
fn k_deltas<T: Scalar>(spec: &SystemSpec<T>, log_deltas: &[T]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(log_deltas.len());
    let mut log_diam = spec.log_ambient_diameter();
    let mut k = 0;
    for &target in log_deltas {
        while log_diam > target {
            k += 1;
            log_diam = log_diam + spec.materialize_level(k)?.log_min_ratio();
        }
        out.push(k);
    }
    Ok(out)
}

/// Class DAGs for a run of scales; solved repeatedly during root finding.
struct Scales<T> {
    log_deltas: Vec<T>,
    k: Vec<usize>,
    skeletons: Vec<Skeleton<T>>,
}

impl<T: Scalar> Scales<T> {
    fn build(spec: &SystemSpec<T>, theta: T, log_deltas: Vec<T>, memo_budget: usize) -> Result<Self> {
        let k = k_deltas(spec, &log_deltas)?;
        let skeletons = log_deltas
            .par_iter()
            .map(|&ld| build_skeleton(spec, ld, theta, implied_depth_cap(spec, ld, theta), memo_budget))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { log_deltas, k, skeletons })
    }

    fn costs(&self, t: T) -> Vec<T> {
        self.skeletons.par_iter().map(|s| s.min_cost(t)).collect()
    }

    fn proxies(&self, t: T) -> Vec<T> {
        self.costs(t)
            .into_iter()
            .zip(&self.k)
            .map(|(c, &k)| c / T::of_usize(k))
            .collect()
    }

    fn extremes(&self, t: T) -> (T, T) {
        let q = self.proxies(t);
        let hi = q.iter().copied().fold(T::neg_infinity(), T::max);
        let lo = q.iter().copied().fold(T::infinity(), T::min);
        (hi, lo)
    }

    fn trace(&self, t: T) -> Vec<TracePoint<T>> {
        self.costs(t)
            .into_iter()
            .zip(&self.k)
            .zip(&self.log_deltas)
            .map(|((min_cost_log, &k_delta), &log_delta)| TracePoint {
                log_delta,
                k_delta,
                min_cost_log,
            })
            .collect()
    }
}

fn check_theta<T: Scalar>(theta: T) -> Result<()> {
    if !(theta > T::zero() && theta <= T::one()) {
        return Err(Error::Domain(format!("theta = {theta} outside (0,1]")));
    }
    Ok(())
}

fn window_scales<T: Scalar>(schedule: &DeltaSchedule<T>, end: usize, window: usize) -> Vec<T> {
    (end - window..end).map(|j| schedule.log_delta(j)).collect()
}

/// Trailing-window extremes of `log min_cost(delta_j, theta, t) / k_{delta_j}`.
///
/// Only the last `window` scales are solved; earlier ones do not enter the
/// estimate.
pub fn theta_pressure<T: Scalar>(
    spec: &SystemSpec<T>,
    t: T,
    theta: T,
    schedule: &DeltaSchedule<T>,
    window: usize,
) -> Result<ThetaPressure<T>> {
    check_theta(theta)?;
    schedule.validate(spec, window)?;
    if !(t >= T::zero()) {
        return Err(Error::Domain(format!("t = {t} must be >= 0")));
    }
    let scales = Scales::build(
        spec,
        theta,
        window_scales(schedule, schedule.steps, window),
        DEFAULT_MEMO_BUDGET,
    )?;
    let (upper, lower) = scales.extremes(t);
    Ok(ThetaPressure {
        upper,
        lower,
        trace: scales.trace(t),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOptions<T> {
    pub schedule: DeltaSchedule<T>,
    /// Number of trailing scales the extremes are taken over.
    pub window: usize,
    pub tol: T,
    /// Upper end of the root search; the ambient dimension when `None`.
    pub cap: Option<T>,
    pub memo_budget: usize,
    /// Keep per-scale `(delta, k_delta, log min_cost)` at the upper root.
    pub trace: bool,
}

impl<T: Scalar> SpectrumOptions<T> {
    /// Schedule reaching depth `k_target`, window of half its length.
    pub fn for_depth(spec: &SystemSpec<T>, k_target: usize, tol: T) -> Result<Self> {
        let schedule = DeltaSchedule::for_depth(spec, k_target)?;
        Ok(Self {
            window: schedule.steps / 2,
            schedule,
            tol,
            cap: None,
            memo_budget: DEFAULT_MEMO_BUDGET,
            trace: false,
        })
    }

    fn cap(&self, spec: &SystemSpec<T>) -> T {
        self.cap.unwrap_or_else(|| T::of(spec.dimension() as f64))
    }

    fn validate(&self, spec: &SystemSpec<T>) -> Result<()> {
        self.schedule.validate(spec, self.window)?;
        if !(self.tol > T::zero()) {
            return Err(Error::Domain("tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaJumpResult<T> {
    pub theta: T,
    pub s_upper: T,
    pub s_lower: T,
    pub upper_width: T,
    pub lower_width: T,
    pub log_delta_min: T,
    pub k_delta_max: usize,
    /// Largest class DAG solved.
    pub classes: usize,
    /// Root of the early window was much larger: theta-pressure drifts to `-inf`.
    pub degenerate: bool,
    pub trace: Option<Vec<TracePoint<T>>>,
}

/// Zeros of the upper and lower theta-pressure proxies, searched on `[0, cap]`.
pub fn theta_jump_points<T: Scalar>(
    spec: &SystemSpec<T>,
    theta: T,
    opts: &SpectrumOptions<T>,
) -> Result<ThetaJumpResult<T>> {
    check_theta(theta)?;
    opts.validate(spec)?;
    let (sched, window, tol, cap) = (&opts.schedule, opts.window, opts.tol, opts.cap(spec));
    let scales = Scales::build(
        spec,
        theta,
        window_scales(sched, sched.steps, window),
        opts.memo_budget,
    )?;
    let (s_upper, upper_width) = proxy_root(|t| scales.extremes(t).0, cap, tol)?;
    let (s_lower, lower_width) = proxy_root(|t| scales.extremes(t).1, cap, tol)?;

    // same drift test as for the plain pressure, a quarter of the way in
    let degenerate = if s_upper < tol {
        true
    } else {
        let end = sched.steps / 4;
        let w_early = (window / 4).max(1);
        if end >= 2 * w_early {
            let early = Scales::build(spec, theta, window_scales(sched, end, w_early), opts.memo_budget)?;
            let (r_early, _) = proxy_root(|t| early.extremes(t).0, cap, tol)?;
            s_upper <= T::of(COLLAPSE_RATIO) * r_early
        } else {
            false
        }
    };
    let (s_upper, s_lower) = if degenerate {
        (T::zero(), T::zero())
    } else {
        (s_upper, s_lower.min(s_upper))
    };
    Ok(ThetaJumpResult {
        theta,
        s_upper,
        s_lower,
        upper_width,
        lower_width,
        log_delta_min: sched.log_delta_min(),
        k_delta_max: *scales.k.last().expect("window is non-empty"),
        classes: scales.skeletons.iter().map(|s| s.nodes.len()).max().unwrap_or(0),
        degenerate,
        trace: opts.trace.then(|| scales.trace(s_upper)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPoint<T> {
    pub theta: T,
    pub s_upper: T,
    pub s_lower: T,
    pub upper_width: T,
    pub lower_width: T,
    pub log_delta_min: T,
    pub k_delta_max: usize,
    pub classes: usize,
    pub trace: Option<Vec<TracePoint<T>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCurve<T> {
    pub points: Vec<SpectrumPoint<T>>,
    pub schedule: DeltaSchedule<T>,
    pub window: usize,
    pub tol: T,
    /// Plain jump points over the depths the scale window spans; `s_upper`
    /// estimates the box dimension and `s_lower` the Hausdorff dimension.
    pub anchor: JumpPointResult<T>,
    /// `L` in the adjacent-point budget `L * h + 4 * tol`.
    pub continuity_constant: T,
    /// Indices `i` where points `i` and `i + 1` break the budget.
    pub continuity_flags: Vec<usize>,
}

impl<T: Scalar> SpectrumCurve<T> {
    pub fn hausdorff_estimate(&self) -> T {
        self.anchor.s_lower
    }

    pub fn thetas(&self) -> Vec<T> {
        self.points.iter().map(|p| p.theta).collect()
    }
}

/// Upper and lower intermediate dimension estimates on `theta_grid`.
///
/// When the plain pressure is degenerate every theta-pressure is as well
/// (cut sets only get more expensive than the level sums at `k_delta` once
/// `theta < 1`), so the curve is reported as zero without solving.
pub fn spectrum<T: Scalar>(
    spec: &SystemSpec<T>,
    theta_grid: &[T],
    opts: &SpectrumOptions<T>,
) -> Result<SpectrumCurve<T>> {
    opts.validate(spec)?;
    if theta_grid.is_empty() {
        return Err(Error::Domain("empty theta grid".into()));
    }
    for &th in theta_grid {
        check_theta(th)?;
    }
    if theta_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("theta grid must be strictly ascending".into()));
    }
    let sched = &opts.schedule;
    let ks = k_deltas(
        spec,
        &[sched.log_delta(sched.steps - opts.window), sched.log_delta_min()],
    )?;
    let k_max = ks[1].max(2);
    let anchor_window = (ks[1] - ks[0] + 1).clamp(1, k_max / 2);
    let anchor = jump_points_with_cap(spec, k_max, anchor_window, opts.tol, opts.cap(spec))?;

    let points: Vec<SpectrumPoint<T>> = if anchor.degenerate {
        theta_grid
            .iter()
            .map(|&theta| SpectrumPoint {
                theta,
                s_upper: T::zero(),
                s_lower: T::zero(),
                upper_width: T::zero(),
                lower_width: T::zero(),
                log_delta_min: sched.log_delta_min(),
                k_delta_max: ks[1],
                classes: 0,
                trace: None,
            })
            .collect()
    } else {
        theta_grid
            .iter()
            .map(|&theta| {
                theta_jump_points(spec, theta, opts).map(|r| SpectrumPoint {
                    theta,
                    s_upper: r.s_upper,
                    s_lower: r.s_lower,
                    upper_width: r.upper_width,
                    lower_width: r.lower_width,
                    log_delta_min: r.log_delta_min,
                    k_delta_max: r.k_delta_max,
                    classes: r.classes,
                    trace: r.trace,
                })
            })
            .collect::<Result<_>>()?
    };

    let continuity_constant = T::of(spec.dimension() as f64) / theta_grid[0];
    let slack = T::of(4.0) * opts.tol;
    let continuity_flags = points
        .windows(2)
        .enumerate()
        .filter(|(_, w)| {
            let h = w[1].theta - w[0].theta;
            (w[1].s_upper - w[0].s_upper).abs() > continuity_constant * h + slack
        })
        .map(|(i, _)| i)
        .collect();
    Ok(SpectrumCurve {
        points,
        schedule: opts.schedule,
        window: opts.window,
        tol: opts.tol,
        anchor,
        continuity_constant,
        continuity_flags,
    })
}
