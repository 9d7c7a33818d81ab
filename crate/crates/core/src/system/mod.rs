//! Non-autonomous systems described by their contraction ratios.

mod bounds;
mod diagnostics;
mod doc;
mod level;
pub mod presets;
mod rules;

pub use bounds::{derived_bounds, DerivedLevelBounds};
pub use diagnostics::{
    condition_diagnostics, Condition, ConditionSummary, DiagnosticRow, DiagnosticsReport, Thresholds, Verdict,
};
pub use doc::{FamilyDoc, LevelDoc, SeparationDoc, SystemDoc, TailDoc};
pub use level::{AnalyticFamily, LevelSpec, Multiplicity, RatioGroup};
pub use rules::{ClosedFormRule, TailRule};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Declared separation of sibling cylinders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Separation<T> {
    /// Strong separation; `gap` is the fraction of the parent left between
    /// adjacent children (`None` picks equal gaps including the flanks).
    Ssc { gap: Option<T> },
    Osc,
}

/// A validated non-autonomous system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec<T> {
    name: String,
    prefix: Vec<LevelSpec<T>>,
    tail: TailRule<T>,
    ambient_diameter: T,
    distortion: T,
    dimension: u32,
    separation: Separation<T>,
    cone_condition: bool,
    truncated: bool,
    log_c_max: T,
}

/// Assembles a [`SystemSpec`]; `build` checks every invariant.
#[derive(Debug, Clone)]
pub struct SystemBuilder<T> {
    name: String,
    prefix: Vec<LevelSpec<T>>,
    tail: TailRule<T>,
    ambient_diameter: T,
    distortion: T,
    dimension: u32,
    separation: Separation<T>,
    cone_condition: bool,
    truncated: bool,
}

impl<T: Scalar> SystemBuilder<T> {
    pub fn new(name: impl Into<String>, tail: TailRule<T>) -> Self {
        Self {
            name: name.into(),
            prefix: Vec::new(),
            tail,
            ambient_diameter: T::one(),
            distortion: T::one(),
            dimension: 1,
            separation: Separation::Osc,
            cone_condition: false,
            truncated: false,
        }
    }

    pub fn prefix(mut self, prefix: Vec<LevelSpec<T>>) -> Self {
        self.prefix = prefix;
        self
    }

    pub fn tail(mut self, tail: TailRule<T>) -> Self {
        self.tail = tail;
        self
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn ambient_diameter(mut self, d: T) -> Self {
        self.ambient_diameter = d;
        self
    }

    pub fn distortion(mut self, c: T) -> Self {
        self.distortion = c;
        self
    }

    pub fn dimension(mut self, d: u32) -> Self {
        self.dimension = d;
        self
    }

    pub fn separation(mut self, s: Separation<T>) -> Self {
        self.separation = s;
        self
    }

    pub fn cone_condition(mut self, yes: bool) -> Self {
        self.cone_condition = yes;
        self
    }

    /// Marks the system as a truncated subsystem, whose levels may hold a
    /// single map.
    pub fn truncated(mut self, yes: bool) -> Self {
        self.truncated = yes;
        self
    }

    pub fn build(self) -> Result<SystemSpec<T>> {
        let invalid = |m: String| Err(Error::InvalidSystem(m));
        if !(self.ambient_diameter > T::zero() && self.ambient_diameter.is_finite()) {
            return invalid("ambient diameter must be positive".into());
        }
        if !(self.distortion >= T::one() && self.distortion.is_finite()) {
            return invalid("distortion constant must be >= 1".into());
        }
        if self.dimension == 0 {
            return invalid("ambient dimension must be >= 1".into());
        }
        if let Separation::Ssc { gap: Some(g) } = self.separation {
            if !(g > T::zero() && g < T::one()) {
                return invalid(format!("SSC gap fraction {g} outside (0,1)"));
            }
        }
        let min_maps = if self.truncated { 1 } else { 2 };
        let check_level = |level: &LevelSpec<T>, what: &str| -> Result<()> {
            if let LevelSpec::Finite(_) = level {
                if level.count().is_some_and(|n| n < min_maps) {
                    return Err(Error::InvalidSystem(format!("{what} has fewer than {min_maps} maps")));
                }
            }
            Ok(())
        };
        for (i, level) in self.prefix.iter().enumerate() {
            check_level(level, &format!("level {}", i + 1))?;
        }
        let p = self.prefix.len();
        let tail_sup = match &self.tail {
            TailRule::Periodic(cycle) => {
                if cycle.is_empty() {
                    return invalid("periodic tail needs at least one level".into());
                }
                for level in cycle {
                    check_level(level, "periodic level")?;
                }
                cycle.iter().map(|l| l.log_max_ratio()).fold(T::neg_infinity(), T::max)
            }
            TailRule::ClosedForm(rule) => {
                rule.validate()?;
                if let ClosedFormRule::Truncated { keep, .. } = rule {
                    if (*keep as u64) < min_maps {
                        return invalid("truncated levels keep a single map; mark the system truncated".into());
                    }
                }
                rule.sup_log_ratio(p + 1)?
            }
        };
        let log_c_max = self
            .prefix
            .iter()
            .map(|l| l.log_max_ratio())
            .fold(tail_sup, T::max);
        if !(log_c_max < T::zero()) {
            return invalid("contraction ratios are not uniformly below 1".into());
        }
        Ok(SystemSpec {
            name: self.name,
            prefix: self.prefix,
            tail: self.tail,
            ambient_diameter: self.ambient_diameter,
            distortion: self.distortion,
            dimension: self.dimension,
            separation: self.separation,
            cone_condition: self.cone_condition,
            truncated: self.truncated,
            log_c_max,
        })
    }
}

impl<T: Scalar> SystemSpec<T> {
    pub fn builder(name: impl Into<String>, tail: TailRule<T>) -> SystemBuilder<T> {
        SystemBuilder::new(name, tail)
    }

    /// Returns a builder pre-filled with this system's settings.
    pub fn to_builder(&self) -> SystemBuilder<T> {
        SystemBuilder {
            name: self.name.clone(),
            prefix: self.prefix.clone(),
            tail: self.tail.clone(),
            ambient_diameter: self.ambient_diameter,
            distortion: self.distortion,
            dimension: self.dimension,
            separation: self.separation,
            cone_condition: self.cone_condition,
            truncated: self.truncated,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn prefix(&self) -> &[LevelSpec<T>] {
        &self.prefix
    }

    pub fn tail(&self) -> &TailRule<T> {
        &self.tail
    }

    pub fn ambient_diameter(&self) -> T {
        self.ambient_diameter
    }

    pub fn log_ambient_diameter(&self) -> T {
        self.ambient_diameter.ln()
    }

    pub fn distortion(&self) -> T {
        self.distortion
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn separation(&self) -> Separation<T> {
        self.separation
    }

    pub fn cone_condition(&self) -> bool {
        self.cone_condition
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// `log c_max`, the supremum of all log-ratios.
    pub fn log_c_max(&self) -> T {
        self.log_c_max
    }

    pub fn c_max(&self) -> T {
        self.log_c_max.exp()
    }

    /// True when every level has finitely many maps.
    pub fn is_finite(&self) -> bool {
        self.first_infinite_level().is_none()
    }

    /// Index of the first level holding an infinite family.
    pub fn first_infinite_level(&self) -> Option<usize> {
        if let Some(i) = self.prefix.iter().position(|l| !l.is_finite()) {
            return Some(i + 1);
        }
        let p = self.prefix.len();
        match &self.tail {
            TailRule::Periodic(cycle) => cycle.iter().position(|l| !l.is_finite()).map(|i| p + i + 1),
            TailRule::ClosedForm(rule) if rule.is_infinite() => Some(p + 1),
            TailRule::ClosedForm(_) => None,
        }
    }

    /// Ratios of level `k >= 1`.
    pub fn materialize_level(&self, k: usize) -> Result<LevelSpec<T>> {
        if k == 0 {
            return Err(Error::Domain("levels are indexed from 1".into()));
        }
        let p = self.prefix.len();
        if k <= p {
            return Ok(self.prefix[k - 1].clone());
        }
        match &self.tail {
            TailRule::Periodic(cycle) => Ok(cycle[(k - p - 1) % cycle.len()].clone()),
            TailRule::ClosedForm(rule) => rule.level(k),
        }
    }

    /// Levels `1..=k_max`.
    pub fn levels(&self, k_max: usize) -> Result<Vec<LevelSpec<T>>> {
        (1..=k_max).map(|k| self.materialize_level(k)).collect()
    }
}

/// Free-function form of [`SystemSpec::materialize_level`].
pub fn materialize_level<T: Scalar>(spec: &SystemSpec<T>, k: usize) -> Result<LevelSpec<T>> {
    spec.materialize_level(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_materialize_documented_levels() {
        let mt = presets::middle_third::<f64>();
        let g = mt.materialize_level(7).unwrap();
        let g = g.groups().unwrap();
        assert_eq!(g.len(), 1);
        assert!((g[0].ratio() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(g[0].mult.count(), Some(2));

        let e1 = presets::e1::<f64>();
        let l = e1.materialize_level(3).unwrap();
        let g = l.groups().unwrap();
        assert!((g[0].log_ratio + 4.0 * 3f64.ln()).abs() < 1e-14);
        assert_eq!(g[0].mult.count(), Some(8));

        let e2 = presets::e2::<f64>();
        let l = e2.materialize_level(2).unwrap();
        let g = l.groups().unwrap();
        assert_eq!(g.len(), 2);
        assert!((g[0].ratio() - 3f64.powi(-3)).abs() < 1e-16);
        assert_eq!(g[0].mult.count(), Some(1));
        assert!((g[1].ratio() - 3f64.powi(-6)).abs() < 1e-18);
        assert_eq!(g[1].mult.count(), Some(3));
    }

    #[test]
    fn materialization_is_deterministic() {
        for name in presets::NAMES {
            let spec = presets::by_name::<f64>(name).unwrap();
            for k in [1, 2, 5, 17, 64] {
                assert_eq!(spec.materialize_level(k), spec.materialize_level(k));
            }
        }
    }

    #[test]
    fn level_zero_is_rejected() {
        assert!(matches!(
            presets::middle_third::<f64>().materialize_level(0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn periodic_tail_cycles_after_prefix() {
        let a = LevelSpec::from_ratios(&[(0.5f64, 2)]).unwrap();
        let b = LevelSpec::from_ratios(&[(0.25, 3)]).unwrap();
        let c = LevelSpec::from_ratios(&[(0.1, 2)]).unwrap();
        let spec = SystemSpec::builder("p", TailRule::Periodic(vec![b.clone(), c.clone()]))
            .prefix(vec![a.clone()])
            .build()
            .unwrap();
        let got: Vec<_> = (1..=5).map(|k| spec.materialize_level(k).unwrap()).collect();
        assert_eq!(got, vec![a, b.clone(), c.clone(), b, c]);
        assert!((spec.c_max() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_map_levels_rejected_unless_truncated() {
        let one = LevelSpec::from_ratios(&[(0.5, 1)]).unwrap();
        let tail = TailRule::Periodic(vec![one]);
        assert!(SystemSpec::builder("x", tail.clone()).build().is_err());
        assert!(SystemSpec::builder("x", tail).truncated(true).build().is_ok());
    }

    #[test]
    fn invalid_settings_rejected() {
        let tail = TailRule::ClosedForm(ClosedFormRule::Homogeneous {
            ratio: 0.5,
            branches: 2,
        });
        assert!(SystemSpec::builder("x", tail.clone()).distortion(0.5).build().is_err());
        assert!(SystemSpec::builder("x", tail.clone()).ambient_diameter(0.0).build().is_err());
        assert!(SystemSpec::builder("x", tail.clone())
            .separation(Separation::Ssc { gap: Some(1.0) })
            .build()
            .is_err());
        let growing = TailRule::ClosedForm(ClosedFormRule::Geometric {
            scale: 0.5,
            level_scale: 1.5,
            decay: 0.5,
        });
        assert!(SystemSpec::builder("x", growing).build().is_err());
    }
}
