//! Built-in systems.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{ClosedFormRule, Separation, SystemSpec, TailRule};

pub const NAMES: [&str; 8] = [
    "middle-third",
    "full-interval",
    "E1",
    "E2",
    "E3",
    "block-alternating",
    "geometric-infinite",
    "geometric-stationary",
];

pub fn by_name<T: Scalar>(name: &str) -> Result<SystemSpec<T>> {
    Ok(match name {
        "middle-third" => middle_third(),
        "full-interval" => full_interval(),
        "E1" | "e1" => e1(),
        "E2" | "e2" => e2(),
        "E3" | "e3" => e3(),
        "block-alternating" => block_alternating(),
        "geometric-infinite" => geometric_infinite(),
        "geometric-stationary" => geometric_stationary(),
        other => return Err(Error::Config(format!("unknown preset `{other}`"))),
    })
}

fn closed<T: Scalar>(name: &str, rule: ClosedFormRule<T>, sep: Separation<T>) -> SystemSpec<T> {
    SystemSpec::builder(name, TailRule::ClosedForm(rule))
        .separation(sep)
        .build()
        .expect("preset is valid")
}

/// Two maps of ratio 1/3 with the classical middle gap.
pub fn middle_third<T: Scalar>() -> SystemSpec<T> {
    closed(
        "middle-third",
        ClosedFormRule::Homogeneous {
            ratio: T::of(1.0 / 3.0),
            branches: 2,
        },
        Separation::Ssc {
            gap: Some(T::of(1.0 / 3.0)),
        },
    )
}

/// Two halves of the unit interval; the attractor is `[0,1]`.
pub fn full_interval<T: Scalar>() -> SystemSpec<T> {
    closed(
        "full-interval",
        ClosedFormRule::Homogeneous {
            ratio: T::of(0.5),
            branches: 2,
        },
        Separation::Osc,
    )
}

/// `2^k` maps of ratio `3^{-(k+1)}` at level `k`.
pub fn e1<T: Scalar>() -> SystemSpec<T> {
    closed(
        "E1",
        ClosedFormRule::GrowingBranches {
            branch_base: 2,
            ratio_base: T::of(3.0),
            ratio_offset: 1,
        },
        Separation::Ssc { gap: None },
    )
}

/// `2^k` maps at level `k`: one of ratio `3^{-(k+1)}`, the others `3^{-k(k+1)}`.
pub fn e2<T: Scalar>() -> SystemSpec<T> {
    closed(
        "E2",
        ClosedFormRule::SplitGrowing {
            branch_base: 2,
            ratio_base: T::of(3.0),
        },
        Separation::Ssc { gap: None },
    )
}

/// Two maps per level with `c_1 = 1/2`, `c_2 = 1/4`, `c_k = c_1 ... c_{k-1}`.
pub fn e3<T: Scalar>() -> SystemSpec<T> {
    closed(
        "E3",
        ClosedFormRule::ProductRecurrence {
            seeds: vec![T::of(0.5), T::of(0.25)],
            branches: 2,
        },
        Separation::Osc,
    )
}

/// Two maps per level, ratio 1/2 on blocks `[2^b, 2^{b+1})` with `b` even and
/// 1/4 with `b` odd. The Moran exponents oscillate between 0.6 and 0.75.
pub fn block_alternating<T: Scalar>() -> SystemSpec<T> {
    closed(
        "block-alternating",
        ClosedFormRule::BlockAlternating {
            ratio_even: T::of(0.5),
            ratio_odd: T::of(0.25),
            branches: 2,
        },
        Separation::Osc,
    )
}

/// Infinitely many maps `c_{n,k} = 2^{-n} 2^{-k}`.
pub fn geometric_infinite<T: Scalar>() -> SystemSpec<T> {
    closed(
        "geometric-infinite",
        ClosedFormRule::Geometric {
            scale: T::one(),
            level_scale: T::of(0.5),
            decay: T::of(0.5),
        },
        Separation::Osc,
    )
}

/// Infinitely many maps `c_{n,k} = 2^{-1} 2^{-k}` at every level; the level
/// sum at `t` is `x^2 / (1 - x)` with `x = 2^{-t}`, so the dimension is
/// `log2` of the golden ratio.
pub fn geometric_stationary<T: Scalar>() -> SystemSpec<T> {
    closed(
        "geometric-stationary",
        ClosedFormRule::Geometric {
            scale: T::of(0.5),
            level_scale: T::one(),
            decay: T::of(0.5),
        },
        Separation::Osc,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for name in NAMES {
            let spec = by_name::<f64>(name).unwrap();
            assert_eq!(spec.name(), name);
        }
        assert!(by_name::<f64>("sierpinski").is_err());
    }

    #[test]
    fn c_max_values() {
        assert!((middle_third::<f64>().c_max() - 1.0 / 3.0).abs() < 1e-15);
        assert!((e1::<f64>().c_max() - 1.0 / 9.0).abs() < 1e-15);
        assert!((e3::<f64>().c_max() - 0.5).abs() < 1e-15);
        assert!((block_alternating::<f64>().c_max() - 0.5).abs() < 1e-15);
        assert!((geometric_infinite::<f64>().c_max() - 0.25).abs() < 1e-15);
        assert!(!geometric_infinite::<f64>().is_finite());
        assert!(e2::<f32>().is_finite());
    }
}
