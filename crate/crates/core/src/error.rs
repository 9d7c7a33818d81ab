use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("depth exceeds representable range at level {level}")]
    DepthOutOfRange { level: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("jump point search cap {cap} too small: pressure proxy still positive there")]
    CapTooSmall { cap: f64 },

    #[error("level {level} is an infinite family; {what} needs a finite system (truncate it first)")]
    InfiniteLevel { level: usize, what: &'static str },

    #[error("distortion constant {constant} > 1 requires a word-weight oracle")]
    NeedsWordOracle { constant: f64 },

    #[error("word oracle supports depth {max}, requested {requested}")]
    OracleDepthExceeded { max: usize, requested: usize },

    #[error("cut-set memo budget of {budget} classes exceeded at level {level} ({states} classes, {distinct_ratios} distinct ratios so far)")]
    MemoBudgetExceeded {
        budget: usize,
        level: usize,
        states: usize,
        distinct_ratios: usize,
    },

    #[error("cut set exceeds depth cap {cap}")]
    DepthCapExceeded { cap: usize },

    #[error("instance too large for exhaustive enumeration: {0}")]
    InstanceTooLarge(String),

    #[error("strong separation infeasible at level {level}: ratios plus gaps sum to {total} >= 1")]
    SscInfeasible { level: usize, total: f64 },

    #[error("realization needs {needed} intervals, budget is {budget}")]
    RealizationBudget { needed: f64, budget: usize },

    #[error("realization invariant violated: {0}")]
    Realization(String),

    #[error("need at least {needed} usable scales spanning two decades, got {got}")]
    InsufficientScales { needed: usize, got: usize },

    #[error("level sum diverges at t = {t}; use the divergent branch of the infinite-system check")]
    DivergentSum { t: f64 },

    #[error("infinite-system hypothesis {condition} plausibly fails")]
    HypothesisFails { condition: &'static str },

    #[error("m_phi undefined: no grid point has positive lower pressure")]
    MPhiUndefined,

    #[error("cut-set summary does not match problem: {0}")]
    SummaryMismatch(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
