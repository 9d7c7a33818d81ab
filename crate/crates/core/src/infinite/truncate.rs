use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;
use crate::scalar::Scalar;
use crate::system::{ClosedFormRule, LevelSpec, RatioGroup, SystemSpec, TailRule};

use super::conditions::{infinite_condition_check, Hypothesis};
use crate::system::Verdict;

/// `log sum_{j<=k} c_j^t` for any level, counting maps in descending order.
fn log_head<T: Scalar>(level: &LevelSpec<T>, t: T, k: u64) -> T {
    match level {
        LevelSpec::Analytic(f) => f.log_head_sum(t, k as usize),
        LevelSpec::Finite(groups) => {
            let mut left = k as f64;
            let mut terms = Vec::new();
            for g in groups {
                if left <= 0.0 {
                    break;
                }
                let n = g.mult.ln().f64().exp().min(left);
                terms.push(T::of(n).ln() + t * g.log_ratio);
                left -= n;
            }
            log_sum_exp(terms)
        }
    }
}

fn log_total<T: Scalar>(level: &LevelSpec<T>, t: T) -> T {
    match level {
        LevelSpec::Analytic(f) => f.log_power_sum(t),
        LevelSpec::Finite(groups) => log_sum_exp(groups.iter().map(|g| g.mult.ln() + t * g.log_ratio)),
    }
}

fn covers<T: Scalar>(level: &LevelSpec<T>, t: T, slack: T, k: u64) -> bool {
    log_total(level, t) <= slack.ln_1p() + log_head(level, t, k)
}

/// Smallest `K` with `sum_{j>K} c_j^t <= slack * sum_{j<=K} c_j^t`, ratios
/// taken in descending order.
pub fn truncate_level<T: Scalar>(level: &LevelSpec<T>, t: T, slack: T) -> Result<u64> {
    if !(slack > T::zero()) {
        return Err(Error::Domain(format!("slack {slack} must be positive")));
    }
    if !(t >= T::zero()) {
        return Err(Error::Domain(format!("t = {t} must be >= 0")));
    }
    if !log_total(level, t).is_finite() {
        return Err(Error::DivergentSum { t: t.f64() });
    }
    if slack == T::infinity() {
        return Ok(1);
    }
    let guess = match level {
        LevelSpec::Analytic(crate::system::AnalyticFamily::Geometric { log_decay, .. }) => {
            // q^K <= slack / (1 + slack) with q = decay^t
            let k = ((slack.ln() - slack.ln_1p()) / (t * *log_decay)).ceil();
            k.to_u64().unwrap_or(1).max(1)
        }
        _ => 1,
    };
    // the closed form can be off by one from rounding; settle it exactly
    let mut lo = guess;
    while lo > 1 && covers(level, t, slack, lo - 1) {
        lo -= 1;
    }
    if covers(level, t, slack, lo) {
        return Ok(lo);
    }
    let mut hi = lo.max(1);
    while !covers(level, t, slack, hi) {
        lo = hi;
        hi = hi.checked_mul(2).ok_or(Error::DivergentSum { t: t.f64() })?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if covers(level, t, slack, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Keeps the maps with `c_j >= max_j c_j / (alpha * n^{1/t0})`, `n` the
/// number of maps of the level.
pub fn ratio_prune<T: Scalar>(level: &LevelSpec<T>, t0: T, alpha: T) -> Result<LevelSpec<T>> {
    if !(t0 > T::zero() && alpha > T::zero()) {
        return Err(Error::Domain("ratio pruning needs t0 > 0 and alpha > 0".into()));
    }
    let LevelSpec::Finite(groups) = level else {
        return Err(Error::InfiniteLevel {
            level: 0,
            what: "ratio pruning",
        });
    };
    let threshold = level.log_max_ratio() - alpha.ln() - level.log_count() / t0;
    let kept: Vec<RatioGroup<T>> = groups.iter().filter(|g| g.log_ratio >= threshold).cloned().collect();
    Ok(LevelSpec::Finite(kept))
}

/// Slack `slack` applies from level `from_level` until the next block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlackBlock<T> {
    pub from_level: usize,
    pub slack: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackSchedule<T> {
    pub blocks: Vec<SlackBlock<T>>,
}

impl<T: Scalar> SlackSchedule<T> {
    pub fn constant(slack: T) -> Self {
        Self {
            blocks: vec![SlackBlock { from_level: 1, slack }],
        }
    }

    /// Slack `slack0 / 2^i` on levels `i * block_len + 1 ..`, for `blocks` blocks.
    pub fn halving(slack0: T, block_len: usize, blocks: usize) -> Self {
        Self {
            blocks: (0..blocks.max(1))
                .map(|i| SlackBlock {
                    from_level: i * block_len + 1,
                    slack: slack0 / T::of(2f64.powi(i as i32)),
                })
                .collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = !self.blocks.is_empty()
            && self.blocks[0].from_level == 1
            && self.blocks.windows(2).all(|w| w[0].from_level < w[1].from_level)
            && self.blocks.iter().all(|b| b.slack > T::zero());
        if !ok {
            return Err(Error::Domain(
                "slack schedule must start at level 1, ascend strictly and have positive slacks".into(),
            ));
        }
        Ok(())
    }

    pub fn slack_at(&self, level: usize) -> T {
        self.blocks
            .iter()
            .rev()
            .find(|b| b.from_level <= level)
            .map(|b| b.slack)
            .unwrap_or(self.blocks[0].slack)
    }

    /// Last level that starts a block; later levels share its cut.
    pub fn last_block_start(&self) -> usize {
        self.blocks.last().map_or(1, |b| b.from_level)
    }
}

/// Ratio pruning with `alpha_n = alpha_scale * n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneRule<T> {
    pub t0: T,
    pub alpha_scale: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemOptions<T> {
    pub t_grid: Vec<T>,
    pub slack: SlackSchedule<T>,
    pub prune: Option<PruneRule<T>>,
    /// Levels examined by the hypothesis check run before planning.
    pub check_levels: usize,
    /// Values of epsilon for the head-fraction hypotheses.
    pub eps_grid: Vec<T>,
}

impl<T: Scalar> SubsystemOptions<T> {
    pub fn new(t_grid: Vec<T>, slack: SlackSchedule<T>) -> Self {
        Self {
            t_grid,
            slack,
            prune: None,
            check_levels: 64,
            eps_grid: vec![T::of(0.1), T::of(0.5)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    CoverageRule,
    RatioPrune,
    Combined,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannedLevel<T> {
    pub level: usize,
    /// Maps kept, counted in descending ratio order.
    pub keep: u64,
    pub slack: T,
    /// `slack * D^{2d}`, the bound on the lost pressure.
    pub defect_bound: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationPlan<T> {
    pub levels: Vec<PlannedLevel<T>>,
    /// Every level after the last planned one keeps the same count.
    pub tail_keep: Option<u64>,
    pub t_grid: Vec<T>,
    pub slack: SlackSchedule<T>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageCheck<T> {
    pub level: usize,
    pub t: T,
    /// `log sum_full - log sum_kept`.
    pub log_excess: T,
    pub holds: bool,
}

impl<T: Scalar> TruncationPlan<T> {
    pub fn keep_at(&self, level: usize) -> Option<u64> {
        self.levels
            .iter()
            .find(|l| l.level == level)
            .map(|l| l.keep)
            .or(self.tail_keep)
    }

    /// Recomputes `sum_full <= (1 + slack) sum_kept` at every planned level
    /// and every grid point, from the closed-form sums of `full`.
    pub fn verify_coverage(&self, full: &SystemSpec<T>) -> Result<Vec<CoverageCheck<T>>> {
        let mut out = Vec::new();
        for p in &self.levels {
            let level = full.materialize_level(p.level)?;
            for &t in &self.t_grid {
                let log_excess = log_total(&level, t) - log_head(&level, t, p.keep);
                out.push(CoverageCheck {
                    level: p.level,
                    t,
                    log_excess,
                    holds: log_excess <= p.slack.ln_1p(),
                });
            }
        }
        Ok(out)
    }
}

/// Finite subsystem keeping, level by level, enough of the largest ratios
/// to cover every grid `t` within the scheduled slack.
///
/// Levels up to the start of the last slack block are planned one by one and
/// stored as an explicit prefix; later levels are cut at the last block's
/// count.
pub fn build_subsystem<T: Scalar>(
    spec: &SystemSpec<T>,
    opts: &SubsystemOptions<T>,
) -> Result<(SystemSpec<T>, TruncationPlan<T>)> {
    opts.slack.validate()?;
    if opts.t_grid.is_empty() {
        return Err(Error::Domain("empty t grid".into()));
    }
    let defect = |slack: T| slack * spec.distortion().powf(T::of(2.0 * spec.dimension() as f64));
    let n_plan = opts.slack.last_block_start().max(spec.prefix().len() + 1);

    if spec.is_finite() && opts.prune.is_none() {
        let levels = (1..=n_plan)
            .map(|n| {
                let slack = opts.slack.slack_at(n);
                Ok(PlannedLevel {
                    level: n,
                    keep: spec.materialize_level(n)?.count().unwrap_or(u64::MAX),
                    slack,
                    defect_bound: T::zero(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let plan = TruncationPlan {
            levels,
            tail_keep: None,
            t_grid: opts.t_grid.clone(),
            slack: opts.slack.clone(),
            provenance: Provenance::Identity,
        };
        return Ok((spec.clone(), plan));
    }

    if !spec.is_finite() {
        let report = infinite_condition_check(spec, &opts.t_grid, &opts.eps_grid, opts.check_levels)?;
        for h in [Hypothesis::Uniformity, Hypothesis::HeadFraction, Hypothesis::HeadDivergence] {
            if report.verdict(h) == Verdict::PlausiblyFails {
                return Err(Error::HypothesisFails { condition: h.as_str() });
            }
        }
    }

    let cut = |level: &LevelSpec<T>, slack: T| -> Result<u64> {
        let mut keep = 1;
        for &t in &opts.t_grid {
            keep = keep.max(truncate_level(level, t, slack)?);
        }
        Ok(keep)
    };
    let mut levels = Vec::with_capacity(n_plan);
    let mut prefix = Vec::with_capacity(n_plan);
    for n in 1..=n_plan {
        let level = spec.materialize_level(n)?;
        let slack = opts.slack.slack_at(n);
        let (mut kept, mut keep) = match &level {
            LevelSpec::Analytic(f) => {
                let k = cut(&level, slack)?;
                (f.truncate(k as usize), k)
            }
            LevelSpec::Finite(_) => (level.clone(), level.count().unwrap_or(u64::MAX)),
        };
        if let Some(p) = opts.prune {
            kept = ratio_prune(&kept, p.t0, p.alpha_scale * T::of_usize(n))?;
            keep = kept.count().unwrap_or(u64::MAX);
        }
        levels.push(PlannedLevel {
            level: n,
            keep,
            slack,
            defect_bound: defect(slack),
        });
        prefix.push(kept);
    }

    let last_slack = opts.slack.slack_at(n_plan);
    let (tail, tail_keep) = match spec.tail() {
        TailRule::ClosedForm(rule) if rule.is_infinite() => {
            let keep = levels.last().map_or(1, |l| l.keep);
            let rule = ClosedFormRule::Truncated {
                family: Box::new(rule.clone()),
                keep: keep as usize,
            };
            (TailRule::ClosedForm(rule), Some(keep))
        }
        TailRule::Periodic(cycle) => {
            let cycle = cycle
                .iter()
                .map(|l| match l {
                    LevelSpec::Analytic(f) => Ok(f.truncate(cut(l, last_slack)? as usize)),
                    LevelSpec::Finite(_) => Ok(l.clone()),
                })
                .collect::<Result<Vec<_>>>()?;
            (TailRule::Periodic(cycle), None)
        }
        other => (other.clone(), None),
    };
    // the prefix covers levels 1..=n_plan, so the tail must start after it
    let tail = shift_tail(tail, n_plan, spec.prefix().len());
    let provenance = match (spec.is_finite(), opts.prune.is_some()) {
        (true, true) => Provenance::RatioPrune,
        (false, true) => Provenance::Combined,
        _ => Provenance::CoverageRule,
    };
    let sub = spec
        .to_builder()
        .name(format!("{}-truncated", spec.name()))
        .prefix(prefix)
        .tail(tail)
        .truncated(true)
        .build()?;
    Ok((
        sub,
        TruncationPlan {
            levels,
            tail_keep,
            t_grid: opts.t_grid.clone(),
            slack: opts.slack.clone(),
            provenance,
        },
    ))
}

/// Periodic tails are indexed relative to the prefix; rotate the cycle so
/// that a longer prefix keeps the same level sequence. Closed-form rules use
/// absolute levels and need nothing.
fn shift_tail<T: Scalar>(tail: TailRule<T>, new_prefix: usize, old_prefix: usize) -> TailRule<T> {
    match tail {
        TailRule::Periodic(mut cycle) => {
            let r = (new_prefix - old_prefix) % cycle.len();
            cycle.rotate_left(r);
            TailRule::Periodic(cycle)
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{presets, AnalyticFamily};

    fn geometric(r: f64) -> LevelSpec<f64> {
        LevelSpec::Analytic(AnalyticFamily::Geometric {
            log_scale: 0.0,
            log_decay: r.ln(),
        })
    }

    #[test]
    fn geometric_cut_index() {
        assert_eq!(truncate_level(&geometric(0.5), 1.0, 0.1).unwrap(), 4);
        assert_eq!(truncate_level(&geometric(0.5), 1.0, f64::INFINITY).unwrap(), 1);
        assert!(matches!(
            truncate_level(&geometric(0.5), 0.0, 0.1),
            Err(Error::DivergentSum { .. })
        ));
        for &(r, t, d) in &[(0.3, 0.7, 0.01), (0.9, 0.2, 1e-3), (0.5, 2.0, 0.5)] {
            let k = truncate_level(&geometric(r), t, d).unwrap();
            assert!(covers(&geometric(r), t, d, k));
            assert!(k == 1 || !covers(&geometric(r), t, d, k - 1));
        }
    }

    #[test]
    fn power_law_against_direct_sums() {
        let level = LevelSpec::Analytic(AnalyticFamily::PowerLaw {
            log_scale: 0.5f64.ln(),
            exponent: 2.0,
        });
        let t = 1.0;
        let k = truncate_level(&level, t, 0.05).unwrap();
        // direct partial sums to 10^6 terms plus the integral tail
        let direct = |n: u64| (1..=n).map(|j| 0.5 * (j as f64).powf(-2.0)).sum::<f64>();
        let total = direct(1_000_000) + 0.5 / 1_000_000.0;
        assert!(total <= 1.05 * direct(k) * (1.0 + 1e-12));
        assert!(total > 1.05 * direct(k - 1));
    }

    #[test]
    fn finite_level_accumulates() {
        let l = LevelSpec::from_ratios(&[(0.5, 1), (0.25, 2), (0.01, 3)]).unwrap();
        assert_eq!(truncate_level(&l, 1.0, 0.1).unwrap(), 3);
        assert_eq!(truncate_level(&l, 1.0, 1e-9).unwrap(), 6);
    }

    #[test]
    fn pruning() {
        let l = LevelSpec::from_ratios(&[(0.5, 1), (0.25, 1), (1.0 / 64.0, 1)]).unwrap();
        let p = ratio_prune(&l, 1.0, 2.0).unwrap();
        assert_eq!(p.count(), Some(2));
        assert_eq!(ratio_prune(&l, 1.0, 1e9).unwrap(), l);
        let one = LevelSpec::from_ratios(&[(0.3, 4)]).unwrap();
        assert_eq!(ratio_prune(&one, 0.5, 1.0).unwrap(), one);
        // spread bound
        let lr = p.log_max_ratio() - p.log_min_ratio();
        assert!(lr <= 2f64.ln() + 3f64.ln());
    }

    #[test]
    fn finite_spec_is_identity() {
        let s = presets::middle_third::<f64>();
        let (sub, plan) = build_subsystem(&s, &SubsystemOptions::new(vec![0.5], SlackSchedule::constant(0.1))).unwrap();
        assert_eq!(sub, s);
        assert_eq!(plan.provenance, Provenance::Identity);
        assert!(plan.levels.iter().all(|l| l.keep == 2));
    }

    #[test]
    fn geometric_stationary_plan() {
        let s = presets::geometric_stationary::<f64>();
        let sched = SlackSchedule::halving(0.1, 4, 3);
        let opts = SubsystemOptions::new(vec![0.5, 0.7, 0.9], sched);
        let (sub, plan) = build_subsystem(&s, &opts).unwrap();
        assert!(sub.is_finite());
        assert_eq!(plan.levels.len(), 9);
        assert!(plan.levels.windows(2).all(|w| w[0].keep <= w[1].keep));
        assert!(plan.verify_coverage(&s).unwrap().iter().all(|c| c.holds));
        let n = plan.levels.len();
        assert_eq!(sub.materialize_level(n + 5).unwrap().count(), plan.tail_keep);
        assert_eq!(plan.keep_at(n + 5), plan.tail_keep);
    }
}
