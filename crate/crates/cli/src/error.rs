use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Config,
    Compute,
    Io,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Config => 2,
            Kind::Compute => 3,
            Kind::Io => 4,
        }
    }
}

/// Machine-readable failure, printed as one JSON object on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: Kind,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl CliError {
    pub fn config(code: &str, message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Config,
            code: code.to_string(),
            message: message.into(),
            line: None,
            column: None,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self {
            kind: Kind::Io,
            code: "io".into(),
            message: format!("{}: {e}", path.display()),
            line: None,
            column: None,
        }
    }

    pub fn at(mut self, line: usize, column: usize) -> Self {
        self.line = Some(line);
        self.column = Some(column);
        self
    }

    /// Maps a toml parse failure to a coded error with its position.
    pub fn from_toml(e: &toml::de::Error, text: &str, prefix: &str) -> Self {
        let msg = e.message();
        let code = if msg.contains("duplicate key") {
            "duplicate-key"
        } else if msg.contains("unknown field") || msg.contains("unknown variant") {
            "unknown-key"
        } else if msg.contains("missing field") {
            "missing-key"
        } else if msg.contains("invalid type") {
            "invalid-type"
        } else {
            "syntax"
        };
        let err = CliError::config(&format!("{prefix}{code}"), msg.trim().to_string());
        match e.span() {
            Some(span) => {
                let (line, column) = line_col(text, span.start);
                err.at(line, column)
            }
            None => err,
        }
    }

    pub fn json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

/// 1-based line and column of a byte offset.
pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl From<nadim::Error> for CliError {
    fn from(e: nadim::Error) -> Self {
        use nadim::Error as E;
        let code = match &e {
            E::InvalidSystem(_) => "invalid-system",
            E::DepthOutOfRange { .. } => "depth-out-of-range",
            E::Domain(_) => "domain",
            E::CapTooSmall { .. } => "cap-too-small",
            E::InfiniteLevel { .. } => "infinite-level",
            E::NeedsWordOracle { .. } => "needs-word-oracle",
            E::OracleDepthExceeded { .. } => "oracle-depth-exceeded",
            E::MemoBudgetExceeded { .. } => "memo-budget-exceeded",
            E::DepthCapExceeded { .. } => "depth-cap-exceeded",
            E::InstanceTooLarge(_) => "instance-too-large",
            E::SscInfeasible { .. } => "ssc-infeasible",
            E::RealizationBudget { .. } => "realization-budget",
            E::Realization(_) => "realization",
            E::InsufficientScales { .. } => "insufficient-scales",
            E::DivergentSum { .. } => "divergent-sum",
            E::HypothesisFails { .. } => "hypothesis-fails",
            E::MPhiUndefined => "m-phi-undefined",
            E::SummaryMismatch(_) => "summary-mismatch",
            E::Config(_) => "spec-invalid",
        };
        let kind = match e {
            E::InvalidSystem(_) | E::Config(_) => Kind::Config,
            _ => Kind::Compute,
        };
        Self {
            kind,
            code: code.into(),
            message: e.to_string(),
            line: None,
            column: None,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " (line {l}, column {c})")?;
        }
        Ok(())
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
