use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::realize::AttractorRealization;

/// Relative snap applied to box coordinates so that endpoints landing on a
/// grid line up to rounding count as on it.
const SNAP: f64 = 1e-9;

pub const MIN_FIT_SCALES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxCount<T> {
    pub scale: T,
    pub count: u64,
    /// The scale is below the shortest interval, so the count only sees the
    /// realization depth.
    pub saturated: bool,
}

/// `count` scales spaced evenly in log between `hi` and `lo`.
pub fn geometric_scales<T: Scalar>(hi: T, lo: T, count: usize) -> Vec<T> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.ln(), lo.ln());
    (0..count)
        .map(|i| (a + (b - a) * T::of_usize(i) / T::of_usize(count - 1)).exp())
        .collect()
}

fn count_at<T: Scalar>(r: &AttractorRealization<T>, eps: T) -> u64 {
    // boxes [m eps, (m+1) eps) whose interior meets an interval's interior
    let snap = T::of(SNAP);
    let mut total = 0u64;
    let mut last: Option<u64> = None;
    for i in &r.intervals {
        let first = (i.left / eps + snap).floor().to_u64().unwrap_or(0);
        let end = (i.right() / eps - snap).ceil().to_u64().unwrap_or(0);
        if end <= first {
            // shorter than the snap: still occupies one box
            let m = first;
            if last.is_none_or(|l| m > l) {
                total += 1;
                last = Some(m);
            }
            continue;
        }
        let from = match last {
            Some(l) if l >= first => l + 1,
            _ => first,
        };
        if end > from {
            total += end - from;
        }
        last = Some(last.map_or(end - 1, |l| l.max(end - 1)));
    }
    total
}

/// Exact number of grid boxes (grid anchored at 0) meeting the realization.
pub fn box_count<T: Scalar>(r: &AttractorRealization<T>, scales: &[T]) -> Vec<BoxCount<T>> {
    let min_len = r.min_length();
    scales
        .par_iter()
        .map(|&scale| BoxCount {
            scale,
            count: count_at(r, scale),
            saturated: scale < min_len,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxDimFit<T> {
    pub slope: T,
    pub stderr: T,
    pub intercept: T,
    pub counts: Vec<BoxCount<T>>,
}

/// Least-squares slope of `log N(eps)` against `log(1/eps)` over the
/// unsaturated scales.
pub fn empirical_box_dim<T: Scalar>(r: &AttractorRealization<T>, scales: &[T]) -> Result<BoxDimFit<T>> {
    let counts = box_count(r, scales);
    let used: Vec<(T, T)> = counts
        .iter()
        .filter(|c| !c.saturated && c.count > 0)
        .map(|c| (-c.scale.ln(), T::of(c.count as f64).ln()))
        .collect();
    let span = used.iter().map(|p| p.0).fold(T::neg_infinity(), T::max)
        - used.iter().map(|p| p.0).fold(T::infinity(), T::min);
    if used.len() < MIN_FIT_SCALES || !(span >= T::of(100f64.ln())) {
        return Err(Error::InsufficientScales {
            needed: MIN_FIT_SCALES,
            got: used.len(),
        });
    }
    let n = T::of_usize(used.len());
    let mx = used.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let my = used.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let sxx = used.iter().fold(T::zero(), |a, p| a + (p.0 - mx) * (p.0 - mx));
    let sxy = used.iter().fold(T::zero(), |a, p| a + (p.0 - mx) * (p.1 - my));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = used.iter().fold(T::zero(), |a, p| {
        let e = p.1 - intercept - slope * p.0;
        a + e * e
    });
    let stderr = (ssr / (n - T::of(2.0)) / sxx).sqrt();
    Ok(BoxDimFit {
        slope,
        stderr,
        intercept,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{realize_attractor, Placement, DEFAULT_INTERVAL_BUDGET};
    use crate::system::presets;

    fn mt(depth: usize) -> AttractorRealization<f64> {
        let s = presets::middle_third::<f64>();
        realize_attractor(&s, depth, Placement::from_separation(s.separation()), DEFAULT_INTERVAL_BUDGET).unwrap()
    }

    #[test]
    fn cantor_counts_are_exact() {
        let r = mt(8);
        let c = box_count(&r, &[3f64.powi(-4), 3f64.powi(-1), 3f64.powi(-8)]);
        assert_eq!(c[0].count, 16);
        assert_eq!(c[1].count, 2);
        assert_eq!(c[2].count, 256);
        assert!(c.iter().all(|c| !c.saturated));
        assert!(box_count(&r, &[3f64.powi(-9)])[0].saturated);
    }

    #[test]
    fn unit_interval_tenths() {
        let s = presets::full_interval::<f64>();
        let r = realize_attractor(&s, 4, Placement::OscLeftPacked, 100).unwrap();
        assert_eq!(box_count(&r, &[0.1])[0].count, 10);
        assert_eq!(box_count(&r, &[0.5])[0].count, 2);
    }

    #[test]
    fn e1_count_matches_intervals() {
        let s = presets::e1::<f64>();
        let r = realize_attractor(&s, 4, Placement::SscUniformGaps { gap: None }, 100_000).unwrap();
        // depth-3 intervals have length 3^-9; each lies in at most two boxes
        let c = box_count(&r, &[3f64.powi(-9)])[0].count;
        assert!((64..=128).contains(&c), "{c}");
    }

    #[test]
    fn slopes() {
        let r = mt(12);
        let fit = empirical_box_dim(&r, &geometric_scales(0.1, 1e-5, 16)).unwrap();
        assert!((fit.slope - 2f64.ln() / 3f64.ln()).abs() < 0.05, "{fit:?}");
        let s = presets::full_interval::<f64>();
        let r = realize_attractor(&s, 16, Placement::OscLeftPacked, DEFAULT_INTERVAL_BUDGET).unwrap();
        let fit = empirical_box_dim(&r, &geometric_scales(0.1, 1e-4, 10)).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn too_few_scales() {
        let r = mt(6);
        assert!(matches!(
            empirical_box_dim(&r, &geometric_scales(0.1, 0.01, 8)),
            Err(Error::InsufficientScales { .. })
        ));
        assert!(matches!(
            empirical_box_dim(&r, &geometric_scales(0.1, 1e-5, 8)),
            Err(Error::InsufficientScales { .. })
        ));
    }
}
