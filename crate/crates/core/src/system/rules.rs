use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::level::{AnalyticFamily, LevelSpec, Multiplicity, RatioGroup};

/// Level rule indexed by the absolute level `k >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedFormRule<T> {
    /// `branches` maps of one fixed ratio at every level.
    Homogeneous { ratio: T, branches: u64 },
    /// `branch_base^k` maps of ratio `ratio_base^{-(k + ratio_offset)}`.
    GrowingBranches {
        branch_base: u64,
        ratio_base: T,
        ratio_offset: u32,
    },
    /// `branch_base^k` maps: one of ratio `ratio_base^{-(k+1)}`, the rest of
    /// ratio `ratio_base^{-k(k+1)}`.
    SplitGrowing { branch_base: u64, ratio_base: T },
    /// Seed ratios for the first levels, afterwards `c_k = c_1 c_2 ... c_{k-1}`.
    ProductRecurrence { seeds: Vec<T>, branches: u64 },
    /// Blocks `[2^b, 2^{b+1})`; even `b` uses `ratio_even`, odd `b` uses `ratio_odd`.
    BlockAlternating {
        ratio_even: T,
        ratio_odd: T,
        branches: u64,
    },
    /// `c_{k,j} = scale_k decay^j` with `scale_k = scale * level_scale^k`.
    Geometric {
        scale: T,
        level_scale: T,
        decay: T,
    },
    /// `c_{k,j} = scale_k j^{-exponent}` with `scale_k = scale * level_scale^k`.
    PowerLaw {
        scale: T,
        level_scale: T,
        exponent: T,
    },
    /// The first `keep` ratios of an infinite family rule.
    Truncated {
        family: Box<ClosedFormRule<T>>,
        keep: usize,
    },
}

impl<T: Scalar> ClosedFormRule<T> {
    pub fn level(&self, k: usize) -> Result<LevelSpec<T>> {
        debug_assert!(k >= 1);
        let kt = T::of_usize(k);
        let level = match self {
            Self::Homogeneous { ratio, branches } => {
                LevelSpec::finite(vec![RatioGroup::from_log(ratio.ln(), Multiplicity::new(*branches))])?
            }
            Self::GrowingBranches {
                branch_base,
                ratio_base,
                ratio_offset,
            } => {
                let lr = -(kt + T::of(*ratio_offset as f64)) * ratio_base.ln();
                LevelSpec::finite(vec![RatioGroup::from_log(lr, Multiplicity::pow(*branch_base, exp32(k)?))])?
            }
            Self::SplitGrowing {
                branch_base,
                ratio_base,
            } => {
                let lb = ratio_base.ln();
                let big = RatioGroup::from_log(-(kt + T::one()) * lb, Multiplicity::new(1));
                let small = RatioGroup::from_log(
                    -kt * (kt + T::one()) * lb,
                    Multiplicity::pow_minus_one(*branch_base, exp32(k)?),
                );
                LevelSpec::finite(vec![big, small])?
            }
            Self::ProductRecurrence { seeds, branches } => {
                let lr = product_recurrence_log_ratio(seeds, k);
                if !lr.is_finite() {
                    return Err(Error::DepthOutOfRange { level: k });
                }
                LevelSpec::finite(vec![RatioGroup::from_log(lr, Multiplicity::new(*branches))])?
            }
            Self::BlockAlternating {
                ratio_even,
                ratio_odd,
                branches,
            } => {
                let b = usize::BITS - 1 - k.leading_zeros();
                let r = if b.is_multiple_of(2) { *ratio_even } else { *ratio_odd };
                LevelSpec::finite(vec![RatioGroup::from_log(r.ln(), Multiplicity::new(*branches))])?
            }
            Self::Geometric { .. } | Self::PowerLaw { .. } => LevelSpec::Analytic(self.family(k)?),
            Self::Truncated { family, keep } => family.family(k)?.truncate(*keep),
        };
        let lo = level.log_min_ratio();
        if level.is_finite() && !lo.is_finite() {
            return Err(Error::DepthOutOfRange { level: k });
        }
        Ok(level)
    }

    fn family(&self, k: usize) -> Result<AnalyticFamily<T>> {
        let kt = T::of_usize(k);
        match *self {
            Self::Geometric {
                scale,
                level_scale,
                decay,
            } => Ok(AnalyticFamily::Geometric {
                log_scale: scale.ln() + kt * level_scale.ln(),
                log_decay: decay.ln(),
            }),
            Self::PowerLaw {
                scale,
                level_scale,
                exponent,
            } => Ok(AnalyticFamily::PowerLaw {
                log_scale: scale.ln() + kt * level_scale.ln(),
                exponent,
            }),
            _ => Err(Error::InvalidSystem(
                "truncation needs an infinite family rule".into(),
            )),
        }
    }

    /// Supremum of `log c_{k,j}` over all `k >= from` and all `j`.
    pub fn sup_log_ratio(&self, from: usize) -> Result<T> {
        let from = from.max(1);
        let ft = T::of_usize(from);
        Ok(match self {
            Self::Homogeneous { ratio, .. } => ratio.ln(),
            Self::GrowingBranches {
                ratio_base,
                ratio_offset,
                ..
            } => -(ft + T::of(*ratio_offset as f64)) * ratio_base.ln(),
            Self::SplitGrowing { ratio_base, .. } => -(ft + T::one()) * ratio_base.ln(),
            Self::ProductRecurrence { seeds, .. } => {
                // seeds are arbitrary, the recurrence part decreases from its first level on
                let n0 = seeds.len();
                let first_rec = from.max(n0 + 1);
                let mut sup = product_recurrence_log_ratio(seeds, first_rec);
                for s in seeds.iter().skip(from - 1) {
                    sup = sup.max(s.ln());
                }
                sup
            }
            Self::BlockAlternating {
                ratio_even,
                ratio_odd,
                ..
            } => ratio_even.max(*ratio_odd).ln(),
            Self::Geometric { level_scale, .. } | Self::PowerLaw { level_scale, .. } => {
                if *level_scale > T::one() {
                    T::infinity()
                } else {
                    self.family(from)?.sup_log_ratio()
                }
            }
            Self::Truncated { family, .. } => family.sup_log_ratio(from)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidSystem(what.to_string()));
        let in_unit = |r: T| r > T::zero() && r < T::one();
        match self {
            Self::Homogeneous { ratio, branches } => {
                if !in_unit(*ratio) {
                    return bad("homogeneous ratio must lie in (0,1)");
                }
                if *branches < 2 {
                    return bad("each level needs at least 2 maps");
                }
            }
            Self::GrowingBranches {
                branch_base,
                ratio_base,
                ratio_offset,
            } => {
                if *branch_base < 2 || !(*ratio_base > T::one()) {
                    return bad("growing-branches needs branch_base >= 2 and ratio_base > 1");
                }
                let _ = ratio_offset;
            }
            Self::SplitGrowing {
                branch_base,
                ratio_base,
            } => {
                if *branch_base < 2 || !(*ratio_base > T::one()) {
                    return bad("split-growing needs branch_base >= 2 and ratio_base > 1");
                }
            }
            Self::ProductRecurrence { seeds, branches } => {
                if seeds.is_empty() || !seeds.iter().all(|&s| in_unit(s)) {
                    return bad("product-recurrence needs seed ratios in (0,1)");
                }
                if *branches < 2 {
                    return bad("each level needs at least 2 maps");
                }
            }
            Self::BlockAlternating {
                ratio_even,
                ratio_odd,
                branches,
            } => {
                if !in_unit(*ratio_even) || !in_unit(*ratio_odd) {
                    return bad("block-alternating ratios must lie in (0,1)");
                }
                if *branches < 2 {
                    return bad("each level needs at least 2 maps");
                }
            }
            Self::Geometric {
                scale,
                level_scale,
                decay,
            } => {
                if !(*scale > T::zero()) || !in_unit(*decay) || !(*level_scale > T::zero()) {
                    return bad("geometric family needs scale > 0, level_scale > 0, decay in (0,1)");
                }
            }
            Self::PowerLaw {
                scale,
                level_scale,
                exponent,
            } => {
                if !(*scale > T::zero()) || !(*exponent > T::zero()) || !(*level_scale > T::zero()) {
                    return bad("power-law family needs scale > 0, level_scale > 0, exponent > 0");
                }
            }
            Self::Truncated { family, keep } => {
                if !matches!(**family, Self::Geometric { .. } | Self::PowerLaw { .. }) {
                    return bad("truncation needs an infinite family rule");
                }
                family.validate()?;
                if *keep < 1 {
                    return bad("truncated levels keep at least one map");
                }
            }
        }
        Ok(())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Geometric { .. } | Self::PowerLaw { .. })
    }
}

fn exp32(k: usize) -> Result<u32> {
    u32::try_from(k).map_err(|_| Error::DepthOutOfRange { level: k })
}

/// `log c_k` for the product recurrence; `-inf` once it leaves the float range.
fn product_recurrence_log_ratio<T: Scalar>(seeds: &[T], k: usize) -> T {
    let n0 = seeds.len();
    if k <= n0 {
        return seeds[k - 1].ln();
    }
    // c_{n0+1} = prod of seeds, and each later level doubles the log
    let base: T = seeds.iter().fold(T::zero(), |acc, s| acc + s.ln());
    let doublings = k - n0 - 1;
    if doublings > 4096 {
        return T::neg_infinity();
    }
    base * T::of(2.0).powi(doublings as i32)
}

/// What follows the explicit prefix.
#[derive(Debug, Clone, PartialEq)]
pub enum TailRule<T> {
    /// The listed levels repeat forever.
    Periodic(Vec<LevelSpec<T>>),
    /// Level `k` computed from its absolute index.
    ClosedForm(ClosedFormRule<T>),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(level: &LevelSpec<f64>) -> (f64, Option<u64>) {
        let g = level.groups().unwrap();
        assert_eq!(g.len(), 1);
        (g[0].log_ratio, g[0].mult.count())
    }

    #[test]
    fn growing_branches_level() {
        let rule = ClosedFormRule::GrowingBranches {
            branch_base: 2,
            ratio_base: 3.0,
            ratio_offset: 1,
        };
        let (lr, n) = single(&rule.level(3).unwrap());
        assert!((lr + 4.0 * 3f64.ln()).abs() < 1e-14);
        assert_eq!(n, Some(8));
        // far beyond u64 counts the level still materializes
        assert!(rule.level(2000).unwrap().count().is_none());
    }

    #[test]
    fn split_growing_merges_first_level() {
        let rule = ClosedFormRule::SplitGrowing {
            branch_base: 2,
            ratio_base: 3.0,
        };
        let (lr, n) = single(&rule.level(1).unwrap());
        assert!((lr + 2.0 * 3f64.ln()).abs() < 1e-14);
        assert_eq!(n, Some(2));
        let l2 = rule.level(2).unwrap();
        let g = l2.groups().unwrap();
        assert!((g[0].log_ratio + 3.0 * 3f64.ln()).abs() < 1e-14);
        assert_eq!(g[0].mult.count(), Some(1));
        assert!((g[1].log_ratio + 6.0 * 3f64.ln()).abs() < 1e-14);
        assert_eq!(g[1].mult.count(), Some(3));
    }

    #[test]
    fn product_recurrence_exponents() {
        let rule = ClosedFormRule::ProductRecurrence {
            seeds: vec![0.5, 0.25],
            branches: 2,
        };
        let exps: Vec<f64> = (1..=6)
            .map(|k| -single(&rule.level(k).unwrap()).0 / 2f64.ln())
            .collect();
        for (got, want) in exps.iter().zip([1.0, 2.0, 3.0, 6.0, 12.0, 24.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(rule.level(1100), Err(Error::DepthOutOfRange { level: 1100 }));
        assert!((rule.sup_log_ratio(1).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert!((rule.sup_log_ratio(4).unwrap() + 6.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn block_alternating_blocks() {
        let rule = ClosedFormRule::BlockAlternating {
            ratio_even: 0.5,
            ratio_odd: 0.25,
            branches: 2,
        };
        let ratios: Vec<f64> = (1..=8).map(|k| single(&rule.level(k).unwrap()).0.exp()).collect();
        let want = [0.5, 0.25, 0.25, 0.5, 0.5, 0.5, 0.5, 0.25];
        for (g, w) in ratios.iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn geometric_family_scales_with_level() {
        let rule = ClosedFormRule::Geometric {
            scale: 1.0,
            level_scale: 0.5,
            decay: 0.5,
        };
        match rule.level(3).unwrap() {
            LevelSpec::Analytic(f) => assert!((f.log_ratio(1) + 4.0 * 2f64.ln()).abs() < 1e-14),
            _ => panic!("expected analytic level"),
        }
        let tr = ClosedFormRule::Truncated {
            family: Box::new(rule),
            keep: 4,
        };
        assert_eq!(tr.level(3).unwrap().count(), Some(4));
    }
}
