//! Finite subsystems of infinite systems and checks of the hypotheses that
//! make their pressures converge to the full ones.

mod conditions;
mod truncate;

pub use conditions::{
    infinite_condition_check, m_phi_estimate, Hypothesis, HypothesisRow, InfiniteConditionReport, MPhiEstimate,
    MPhiStatus,
};
pub use truncate::{
    build_subsystem, ratio_prune, truncate_level, CoverageCheck, PlannedLevel, Provenance, PruneRule, SlackBlock,
    SlackSchedule, SubsystemOptions, TruncationPlan,
};
