//! TOML form of [`SystemSpec`].
//!
//! ```toml
//! name = "two-scale"
//! ambient_diameter = 1.0
//! separation = { kind = "ssc", gap = 0.2 }
//!
//! [[prefix]]
//! ratios = [[0.5, 1], [0.25, 2]]
//!
//! [tail]
//! rule = "homogeneous"
//! ratio = 0.3333333333333333
//! branches = 2
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{AnalyticFamily, ClosedFormRule, LevelSpec, Separation, SystemBuilder, SystemSpec, TailRule};

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    pub name: String,
    #[serde(default = "one")]
    pub ambient_diameter: f64,
    #[serde(default = "one")]
    pub distortion: f64,
    #[serde(default = "one_u32")]
    pub dimension: u32,
    #[serde(default)]
    pub separation: SeparationDoc,
    #[serde(default, skip_serializing_if = "is_false")]
    pub cone_condition: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prefix: Vec<LevelDoc>,
    pub tail: TailDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeparationDoc {
    Ssc {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gap: Option<f64>,
    },
    #[default]
    Osc,
}

/// One level: either explicit `(ratio, multiplicity)` pairs or an infinite family.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Vec<(f64, u64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyDoc>,
}

/// `c_j = scale * decay^j` or `c_j = scale * j^{-exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyDoc {
    Geometric { scale: f64, decay: f64 },
    PowerLaw { scale: f64, exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TailDoc {
    Periodic {
        levels: Vec<LevelDoc>,
    },
    Homogeneous {
        ratio: f64,
        branches: u64,
    },
    GrowingBranches {
        branch_base: u64,
        ratio_base: f64,
        #[serde(default)]
        ratio_offset: u32,
    },
    SplitGrowing {
        branch_base: u64,
        ratio_base: f64,
    },
    ProductRecurrence {
        seeds: Vec<f64>,
        branches: u64,
    },
    BlockAlternating {
        ratio_even: f64,
        ratio_odd: f64,
        branches: u64,
    },
    Geometric {
        scale: f64,
        #[serde(default = "one")]
        level_scale: f64,
        decay: f64,
    },
    PowerLaw {
        scale: f64,
        #[serde(default = "one")]
        level_scale: f64,
        exponent: f64,
    },
    Truncated {
        family: Box<TailDoc>,
        keep: usize,
    },
}

impl LevelDoc {
    fn to_level<T: Scalar>(&self) -> Result<LevelSpec<T>> {
        match (&self.ratios, &self.family) {
            (Some(pairs), None) => {
                if pairs.iter().any(|&(_, m)| m == 0) {
                    return Err(Error::InvalidSystem("multiplicities must be positive".into()));
                }
                let pairs: Vec<(T, u64)> = pairs.iter().map(|&(r, m)| (T::of(r), m)).collect();
                LevelSpec::from_ratios(&pairs)
            }
            (None, Some(FamilyDoc::Geometric { scale, decay })) => {
                if !(*scale > 0.0 && *decay > 0.0 && *decay < 1.0) {
                    return Err(Error::InvalidSystem("geometric family needs scale > 0, decay in (0,1)".into()));
                }
                Ok(LevelSpec::Analytic(AnalyticFamily::Geometric {
                    log_scale: T::of(*scale).ln(),
                    log_decay: T::of(*decay).ln(),
                }))
            }
            (None, Some(FamilyDoc::PowerLaw { scale, exponent })) => {
                if !(*scale > 0.0 && *exponent > 0.0) {
                    return Err(Error::InvalidSystem("power-law family needs scale > 0, exponent > 0".into()));
                }
                Ok(LevelSpec::Analytic(AnalyticFamily::PowerLaw {
                    log_scale: T::of(*scale).ln(),
                    exponent: T::of(*exponent),
                }))
            }
            _ => Err(Error::InvalidSystem(
                "a level needs exactly one of `ratios` or `family`".into(),
            )),
        }
    }

    fn from_level<T: Scalar>(level: &LevelSpec<T>) -> Result<Self> {
        Ok(match level {
            LevelSpec::Finite(groups) => {
                let pairs = groups
                    .iter()
                    .map(|g| {
                        g.mult
                            .count()
                            .map(|m| (g.ratio().f64(), m))
                            .ok_or_else(|| Error::InvalidSystem("multiplicity too large to serialize".into()))
                    })
                    .collect::<Result<_>>()?;
                Self {
                    ratios: Some(pairs),
                    family: None,
                }
            }
            LevelSpec::Analytic(AnalyticFamily::Geometric { log_scale, log_decay }) => Self {
                ratios: None,
                family: Some(FamilyDoc::Geometric {
                    scale: log_scale.exp().f64(),
                    decay: log_decay.exp().f64(),
                }),
            },
            LevelSpec::Analytic(AnalyticFamily::PowerLaw { log_scale, exponent }) => Self {
                ratios: None,
                family: Some(FamilyDoc::PowerLaw {
                    scale: log_scale.exp().f64(),
                    exponent: exponent.f64(),
                }),
            },
        })
    }
}

impl TailDoc {
    fn to_rule<T: Scalar>(&self) -> Result<TailRule<T>> {
        Ok(match self {
            Self::Periodic { levels } => {
                TailRule::Periodic(levels.iter().map(LevelDoc::to_level).collect::<Result<_>>()?)
            }
            other => TailRule::ClosedForm(other.to_closed()?),
        })
    }

    fn to_closed<T: Scalar>(&self) -> Result<ClosedFormRule<T>> {
        let t = T::of;
        Ok(match self {
            Self::Periodic { .. } => {
                return Err(Error::InvalidSystem("periodic rule cannot be nested".into()));
            }
            Self::Homogeneous { ratio, branches } => ClosedFormRule::Homogeneous {
                ratio: t(*ratio),
                branches: *branches,
            },
            Self::GrowingBranches {
                branch_base,
                ratio_base,
                ratio_offset,
            } => ClosedFormRule::GrowingBranches {
                branch_base: *branch_base,
                ratio_base: t(*ratio_base),
                ratio_offset: *ratio_offset,
            },
            Self::SplitGrowing {
                branch_base,
                ratio_base,
            } => ClosedFormRule::SplitGrowing {
                branch_base: *branch_base,
                ratio_base: t(*ratio_base),
            },
            Self::ProductRecurrence { seeds, branches } => ClosedFormRule::ProductRecurrence {
                seeds: seeds.iter().map(|&s| t(s)).collect(),
                branches: *branches,
            },
            Self::BlockAlternating {
                ratio_even,
                ratio_odd,
                branches,
            } => ClosedFormRule::BlockAlternating {
                ratio_even: t(*ratio_even),
                ratio_odd: t(*ratio_odd),
                branches: *branches,
            },
            Self::Geometric {
                scale,
                level_scale,
                decay,
            } => ClosedFormRule::Geometric {
                scale: t(*scale),
                level_scale: t(*level_scale),
                decay: t(*decay),
            },
            Self::PowerLaw {
                scale,
                level_scale,
                exponent,
            } => ClosedFormRule::PowerLaw {
                scale: t(*scale),
                level_scale: t(*level_scale),
                exponent: t(*exponent),
            },
            Self::Truncated { family, keep } => ClosedFormRule::Truncated {
                family: Box::new(family.to_closed()?),
                keep: *keep,
            },
        })
    }

    fn from_rule<T: Scalar>(rule: &TailRule<T>) -> Result<Self> {
        Ok(match rule {
            TailRule::Periodic(levels) => Self::Periodic {
                levels: levels.iter().map(LevelDoc::from_level).collect::<Result<_>>()?,
            },
            TailRule::ClosedForm(r) => Self::from_closed(r),
        })
    }

    fn from_closed<T: Scalar>(rule: &ClosedFormRule<T>) -> Self {
        match rule {
            ClosedFormRule::Homogeneous { ratio, branches } => Self::Homogeneous {
                ratio: ratio.f64(),
                branches: *branches,
            },
            ClosedFormRule::GrowingBranches {
                branch_base,
                ratio_base,
                ratio_offset,
            } => Self::GrowingBranches {
                branch_base: *branch_base,
                ratio_base: ratio_base.f64(),
                ratio_offset: *ratio_offset,
            },
            ClosedFormRule::SplitGrowing {
                branch_base,
                ratio_base,
            } => Self::SplitGrowing {
                branch_base: *branch_base,
                ratio_base: ratio_base.f64(),
            },
            ClosedFormRule::ProductRecurrence { seeds, branches } => Self::ProductRecurrence {
                seeds: seeds.iter().map(|s| s.f64()).collect(),
                branches: *branches,
            },
            ClosedFormRule::BlockAlternating {
                ratio_even,
                ratio_odd,
                branches,
            } => Self::BlockAlternating {
                ratio_even: ratio_even.f64(),
                ratio_odd: ratio_odd.f64(),
                branches: *branches,
            },
            ClosedFormRule::Geometric {
                scale,
                level_scale,
                decay,
            } => Self::Geometric {
                scale: scale.f64(),
                level_scale: level_scale.f64(),
                decay: decay.f64(),
            },
            ClosedFormRule::PowerLaw {
                scale,
                level_scale,
                exponent,
            } => Self::PowerLaw {
                scale: scale.f64(),
                level_scale: level_scale.f64(),
                exponent: exponent.f64(),
            },
            ClosedFormRule::Truncated { family, keep } => Self::Truncated {
                family: Box::new(Self::from_closed(family)),
                keep: *keep,
            },
        }
    }
}

impl SystemDoc {
    pub fn to_spec<T: Scalar>(&self) -> Result<SystemSpec<T>> {
        let separation = match self.separation {
            SeparationDoc::Ssc { gap } => Separation::Ssc { gap: gap.map(T::of) },
            SeparationDoc::Osc => Separation::Osc,
        };
        SystemBuilder::new(self.name.clone(), self.tail.to_rule()?)
            .prefix(self.prefix.iter().map(LevelDoc::to_level).collect::<Result<_>>()?)
            .ambient_diameter(T::of(self.ambient_diameter))
            .distortion(T::of(self.distortion))
            .dimension(self.dimension)
            .separation(separation)
            .cone_condition(self.cone_condition)
            .truncated(self.truncated)
            .build()
    }

    pub fn from_spec<T: Scalar>(spec: &SystemSpec<T>) -> Result<Self> {
        Ok(Self {
            name: spec.name().to_string(),
            ambient_diameter: spec.ambient_diameter().f64(),
            distortion: spec.distortion().f64(),
            dimension: spec.dimension(),
            separation: match spec.separation() {
                Separation::Ssc { gap } => SeparationDoc::Ssc { gap: gap.map(|g| g.f64()) },
                Separation::Osc => SeparationDoc::Osc,
            },
            cone_condition: spec.cone_condition(),
            truncated: spec.is_truncated(),
            prefix: spec.prefix().iter().map(LevelDoc::from_level).collect::<Result<_>>()?,
            tail: TailDoc::from_rule(spec.tail())?,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("system documents always serialize")
    }
}

impl<T: Scalar> SystemSpec<T> {
    pub fn from_toml(text: &str) -> Result<Self> {
        SystemDoc::from_toml(text)?.to_spec()
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(SystemDoc::from_spec(self)?.to_toml())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::presets;

    #[test]
    fn module_example_parses() {
        let text = r#"
name = "two-scale"
ambient_diameter = 1.0
separation = { kind = "ssc", gap = 0.2 }

[[prefix]]
ratios = [[0.5, 1], [0.25, 2]]

[tail]
rule = "homogeneous"
ratio = 0.3333333333333333
branches = 2
"#;
        let spec = SystemSpec::<f64>::from_toml(text).unwrap();
        assert_eq!(spec.materialize_level(1).unwrap().count(), Some(3));
        assert!((spec.c_max() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn presets_round_trip() {
        for name in presets::NAMES {
            let spec = presets::by_name::<f64>(name).unwrap();
            let text = spec.to_toml().unwrap();
            let back = SystemSpec::<f64>::from_toml(&text).unwrap();
            assert_eq!(back, spec, "{name}");
            assert_eq!(back.to_toml().unwrap(), text);
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = "name = \"x\"\ncolour = 1\n[tail]\nrule = \"homogeneous\"\nratio = 0.5\nbranches = 2\n";
        assert!(SystemDoc::from_toml(text).is_err());
        let text = "name = \"x\"\n[tail]\nrule = \"homogeneous\"\nratio = 0.5\nbranches = 2\nextra = 3\n";
        assert!(SystemDoc::from_toml(text).is_err());
    }

    #[test]
    fn level_needs_one_form() {
        let text = "name = \"x\"\n[tail]\nrule = \"periodic\"\nlevels = [{}]\n";
        let doc = SystemDoc::from_toml(text).unwrap();
        assert!(doc.to_spec::<f64>().is_err());
    }

    #[test]
    fn truncated_family_round_trip() {
        let text = r#"
name = "cut"
truncated = true
[tail]
rule = "truncated"
keep = 3
family = { rule = "power-law", scale = 0.5, exponent = 2.0 }
"#;
        let spec = SystemSpec::<f64>::from_toml(text).unwrap();
        assert_eq!(spec.materialize_level(4).unwrap().count(), Some(3));
        assert_eq!(SystemSpec::<f64>::from_toml(&spec.to_toml().unwrap()).unwrap(), spec);
    }
}
