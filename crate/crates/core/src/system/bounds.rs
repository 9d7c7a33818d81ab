use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::SystemSpec;

/// Extremal quantities of level `k`, all as natural logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedLevelBounds<T> {
    pub k: usize,
    /// `log m_k`, smallest word ratio at depth `k`.
    pub log_m: T,
    /// `log M_k`, largest word ratio at depth `k`.
    pub log_big_m: T,
    /// `log c̲_k`.
    pub log_c_min: T,
    /// `log c̄_k`.
    pub log_c_max: T,
    /// `log #I_k`; `+inf` for infinite families.
    pub log_count: T,
    /// The level's ratios accumulate at 0, so `c̲_k = 0`.
    pub min_is_zero: bool,
}

/// Per-level bounds for `k = 1..=k_max` as running log-sums.
pub fn derived_bounds<T: Scalar>(spec: &SystemSpec<T>, k_max: usize) -> Result<Vec<DerivedLevelBounds<T>>> {
    let mut out = Vec::with_capacity(k_max);
    let mut log_m = T::zero();
    let mut log_big_m = T::zero();
    for k in 1..=k_max {
        let level = spec.materialize_level(k)?;
        let hi = level.log_max_ratio();
        if !(hi < T::zero()) {
            return Err(Error::InvalidSystem(format!("level {k} has supremum ratio >= 1")));
        }
        let lo = level.log_min_ratio();
        log_m = log_m + lo;
        log_big_m = log_big_m + hi;
        if !log_big_m.is_finite() {
            return Err(Error::DepthOutOfRange { level: k });
        }
        out.push(DerivedLevelBounds {
            k,
            log_m,
            log_big_m,
            log_c_min: lo,
            log_c_max: hi,
            log_count: level.log_count(),
            min_is_zero: !level.is_finite(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::presets;

    #[test]
    fn middle_third_products() {
        let b = derived_bounds(&presets::middle_third::<f64>(), 4).unwrap();
        assert!((b[3].log_big_m + 4.0 * 3f64.ln()).abs() < 1e-14);
        assert_eq!(b[3].log_m, b[3].log_big_m);
    }

    #[test]
    fn e1_second_level() {
        let b = derived_bounds(&presets::e1::<f64>(), 2).unwrap();
        assert!((b[1].log_big_m + 5.0 * 3f64.ln()).abs() < 1e-14);
        assert!((b[1].log_c_max + 3.0 * 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn e3_fifth_level() {
        let b = derived_bounds(&presets::e3::<f64>(), 5).unwrap();
        assert!((b[4].log_big_m + 24.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_additivity_is_exact() {
        let spec = presets::e2::<f64>();
        let b = derived_bounds(&spec, 50).unwrap();
        let mut acc = 0.0;
        for (i, row) in b.iter().enumerate() {
            acc += spec.materialize_level(i + 1).unwrap().log_min_ratio();
            assert_eq!(row.log_m, acc);
            assert!(row.log_m <= row.log_big_m && row.log_c_min <= row.log_c_max);
        }
    }

    #[test]
    fn infinite_families_flag_zero_infimum() {
        let b = derived_bounds(&presets::geometric_infinite::<f64>(), 3).unwrap();
        assert!(b.iter().all(|r| r.min_is_zero && r.log_m == f64::NEG_INFINITY));
        assert!((b[0].log_c_max + 2.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn e3_overflow_reported() {
        assert!(matches!(
            derived_bounds(&presets::e3::<f64>(), 1100),
            Err(Error::DepthOutOfRange { .. })
        ));
    }
}
