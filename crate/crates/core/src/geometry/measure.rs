use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, neumaier_sum};
use crate::scalar::Scalar;

use super::realize::AttractorRealization;

/// Depth-`n` measure giving each cylinder mass `w_u^t / S_n(t)`, spread
/// uniformly over its interval.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureRealization<T> {
    pub depth: usize,
    pub t: T,
    /// Aligned with the realization's intervals.
    pub weights: Vec<T>,
}

impl<T: Scalar> MeasureRealization<T> {
    pub fn total(&self) -> T {
        neumaier_sum(self.weights.iter().copied())
    }
}

/// Weights on the cylinders of `r`, normalized per depth.
pub fn mass_distribution<T: Scalar>(r: &AttractorRealization<T>, t: T, dimension: u32) -> Result<MeasureRealization<T>> {
    if !(t >= T::zero() && t <= T::of(dimension as f64)) {
        return Err(Error::Domain(format!("t = {t} outside [0, {dimension}]")));
    }
    let log_j = r.ambient_diameter.ln();
    let logs: Vec<T> = r.log_lengths.iter().map(|&l| t * (l - log_j)).collect();
    let norm = log_sum_exp(logs.iter().copied());
    let mut weights: Vec<T> = logs.iter().map(|&l| (l - norm).exp()).collect();
    let total = neumaier_sum(weights.iter().copied());
    for w in &mut weights {
        *w = *w / total;
    }
    Ok(MeasureRealization {
        depth: r.depth,
        t,
        weights,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalExponent<T> {
    pub radius: T,
    /// Minimum of `log mu(B(x,r)) / log r` over the scan centers.
    pub min_exponent: T,
    pub argmin_center: T,
}

/// `mu(B(x, r))`, with the mass of each interval spread uniformly over it.
fn ball_mass<T: Scalar>(r: &AttractorRealization<T>, prefix: &[T], weights: &[T], x: T, rad: T) -> T {
    let (lo, hi) = (x - rad, x + rad);
    let ivs = &r.intervals;
    // first interval ending after lo, first interval starting at or after hi
    let a = ivs.partition_point(|i| i.right() <= lo);
    let b = ivs.partition_point(|i| i.left < hi);
    if a >= b {
        return T::zero();
    }
    let partial = |j: usize| {
        let i = &ivs[j];
        let cover = (i.right().min(hi) - i.left.max(lo)).max(T::zero());
        weights[j] * (cover / i.length).min(T::one())
    };
    if b - a == 1 {
        return partial(a);
    }
    let inner = prefix[b - 1] - prefix[a + 1];
    partial(a) + inner.max(T::zero()) + partial(b - 1)
}

/// Minimum local exponent per radius over `samples` centers.
///
/// Centers are the midpoints of intervals picked at evenly spaced ranks, so
/// the scan is deterministic.
pub fn local_exponent_scan<T: Scalar>(
    measure: &MeasureRealization<T>,
    r: &AttractorRealization<T>,
    radii: &[T],
    samples: usize,
) -> Result<Vec<LocalExponent<T>>> {
    if measure.weights.len() != r.len() {
        return Err(Error::Domain(format!(
            "measure has {} weights, realization {} intervals",
            measure.weights.len(),
            r.len()
        )));
    }
    if samples == 0 || r.is_empty() {
        return Err(Error::Domain("need at least one sample center".into()));
    }
    let mut prefix = Vec::with_capacity(r.len() + 1);
    prefix.push(T::zero());
    for &w in &measure.weights {
        prefix.push(*prefix.last().unwrap() + w);
    }
    let n = r.len();
    let centers: Vec<T> = (0..samples.min(n))
        .map(|s| {
            let idx = ((2 * s + 1) * n) / (2 * samples.min(n));
            let i = &r.intervals[idx];
            i.left + i.length / T::of(2.0)
        })
        .collect();
    Ok(radii
        .par_iter()
        .map(|&rad| {
            let mut best = (T::infinity(), T::zero());
            for &x in &centers {
                let m = ball_mass(r, &prefix, &measure.weights, x, rad);
                let e = m.ln() / rad.ln();
                if e < best.0 {
                    best = (e, x);
                }
            }
            LocalExponent {
                radius: rad,
                min_exponent: best.0,
                argmin_center: best.1,
            }
        })
        .collect())
}
