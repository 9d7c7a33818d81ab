//! Run configuration shared by the command line and `run --config`.
//!
//! Config grammar (TOML, unknown keys rejected):
//!
//! ```toml
//! command = "spectrum"          # pressure | jump | moran | spectrum | realize
//!                               # | boxdim | massdim | truncate | diagnose
//! preset = "middle-third"       # or: spec = "path/to/system.toml"
//! out = "results"               # default "."
//! format = "csv"                # csv | json-lines
//!
//! [params]
//! theta_grid = "0.1:1.0:0.1"    # start:end:step, or an explicit array
//! tol = 5e-3
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Pressure,
    Jump,
    Moran,
    Spectrum,
    Realize,
    Boxdim,
    Massdim,
    Truncate,
    Diagnose,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pressure => "pressure",
            Self::Jump => "jump",
            Self::Moran => "moran",
            Self::Spectrum => "spectrum",
            Self::Realize => "realize",
            Self::Boxdim => "boxdim",
            Self::Massdim => "massdim",
            Self::Truncate => "truncate",
            Self::Diagnose => "diagnose",
        }
    }

    /// Parameter keys the command reads; any other key is an error.
    fn accepts(self) -> &'static [&'static str] {
        match self {
            Self::Pressure => &["t_grid", "k_max", "window"],
            Self::Jump => &["k_max", "window", "tol", "cap"],
            Self::Moran => &["k", "tol"],
            Self::Spectrum => &[
                "theta_grid", "tol", "depth", "delta0", "rho", "steps", "window", "cap", "trace",
            ],
            Self::Realize => &["depth", "placement", "gap"],
            Self::Boxdim => &["depth", "placement", "gap", "scales"],
            Self::Massdim => &["depth", "placement", "gap", "t", "radii", "samples"],
            Self::Truncate => &["t_grid", "slack", "block_len", "blocks", "check_levels", "eps_grid"],
            Self::Diagnose => &["k_max", "window"],
        }
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    JsonLines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementKind {
    Ssc,
    Osc,
}

/// A list of reals, written either as `start:end:step` / `hi:lo:count`
/// ranges or explicitly.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    List(Vec<f64>),
    /// `start:end:step`, end included.
    Step { start: f64, end: f64, step: f64 },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Step { start, end, step } => {
                let n = ((end - start) / step + 1e-9).floor() as usize;
                // Snap away the drift of `i * step` so 0.1:1:0.1 yields 0.3, not 0.30000000000000004.
                (0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
            }
        }
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            3 => {
                let (start, end, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
                if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
                    return Err(format!("range `{s}` needs start <= end and step > 0"));
                }
                if (end - start) / step > 1e6 {
                    return Err(format!("range `{s}` has more than a million points"));
                }
                Ok(Grid::Step { start, end, step })
            }
            1 => s.split(',').map(num).collect::<Result<_, _>>().map(Grid::List),
            _ => Err(format!("`{s}` is neither start:end:step nor a comma list")),
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Step { start, end, step } => write!(f, "{start}:{end}:{step}"),
            Grid::List(v) => {
                let s: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                f.write_str(&s.join(","))
            }
        }
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Grid::List(v) => v.serialize(s),
            Grid::Step { .. } => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            List(Vec<f64>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::List(v) => Ok(Grid::List(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Log-spaced scales `hi:lo:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub hi: f64,
    pub lo: f64,
    pub count: usize,
}

impl FromStr for Scales {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("`{s}` is not hi:lo:count"));
        }
        let hi: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
        let lo: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
        let count: usize = parts[2].trim().parse().map_err(|e| format!("{e}"))?;
        if !(hi > lo && lo > 0.0) || count < 2 {
            return Err(format!("`{s}` needs hi > lo > 0 and count >= 2"));
        }
        Ok(Scales { hi, lo, count })
    }
}

impl fmt::Display for Scales {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.hi, self.lo, self.count)
    }
}

impl Serialize for Scales {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scales {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Numeric parameters; each command reads a subset (see `accepts`).
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Pressure/truncate: t values, `start:end:step` or comma list
    #[arg(long, value_name = "GRID")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Grid>,
    /// Spectrum: theta values in (0,1]
    #[arg(long, value_name = "GRID")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_grid: Option<Grid>,
    /// Deepest level for pressure proxies
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    /// Trailing window (levels, or scales for spectrum)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Root-finding tolerance
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Upper end of the root search (defaults to the ambient dimension)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
    /// Moran: last level
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Realization depth, or the target depth of the spectrum scale schedule
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Spectrum: first scale of an explicit schedule
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    /// Spectrum: schedule ratio, in (c_max, 1)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Spectrum: schedule length
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Spectrum: write per-theta trace files
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<bool>,
    /// Child placement (defaults to the system's separation)
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub placement: Option<PlacementKind>,
    /// SSC gap fraction between adjacent children
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    /// Box sizes `hi:lo:count`, log-spaced
    #[arg(long, value_name = "HI:LO:N")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<Scales>,
    /// Ball radii `hi:lo:count`, log-spaced
    #[arg(long, value_name = "HI:LO:N")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Scales>,
    /// Massdim: exponent of the measure
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Massdim: number of ball centers
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Truncate: slack of the first block
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    /// Truncate: levels per slack block
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_len: Option<usize>,
    /// Truncate: number of blocks, slack halving each time
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<usize>,
    /// Truncate: levels examined by the hypothesis check
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check_levels: Option<usize>,
    /// Truncate: epsilon values for the head-fraction check
    #[arg(long, value_name = "GRID")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Grid>,
}

impl Params {
    fn set_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        macro_rules! check {
            ($($f:ident),*) => { $( if self.$f.is_some() { keys.push(stringify!($f)); } )* };
        }
        check!(
            t_grid, theta_grid, k_max, window, tol, cap, k, depth, delta0, rho, steps, trace, placement, gap, scales,
            radii, t, samples, slack, block_len, blocks, check_levels, eps_grid
        );
        keys
    }
}

/// Where the system comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Preset(String),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub params: Params,
}

fn default_out() -> PathBuf {
    PathBuf::from(".")
}

impl RunConfig {
    pub fn source(&self) -> Source {
        match (&self.preset, &self.spec) {
            (Some(p), _) => Source::Preset(p.clone()),
            (None, Some(f)) => Source::File(f.clone()),
            (None, None) => unreachable!("validated"),
        }
    }

    /// Range and consistency checks beyond what parsing enforces.
    pub fn validate(&self) -> CliResult<()> {
        match (&self.preset, &self.spec) {
            (Some(_), Some(_)) => return Err(CliError::config("conflict", "give either a preset or a spec file, not both")),
            (None, None) => return Err(CliError::config("missing-key", "a preset or a spec file is required")),
            (Some(p), None) if !nadim::system::presets::NAMES.iter().any(|n| n.eq_ignore_ascii_case(p)) => {
                return Err(CliError::config(
                    "unknown-preset",
                    format!("unknown preset `{p}`; known: {}", nadim::system::presets::NAMES.join(", ")),
                ));
            }
            _ => {}
        }
        let accepted = self.command.accepts();
        for key in self.params.set_keys() {
            if !accepted.contains(&key) {
                return Err(CliError::config(
                    "unused-key",
                    format!("`{key}` is not a parameter of `{}`", self.command),
                ));
            }
        }
        let p = &self.params;
        let range = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(CliError::config("out-of-range", what.to_string()))
            }
        };
        if let Some(g) = &p.theta_grid {
            let v = g.values();
            if v.contains(&0.0) {
                return Err(CliError::config(
                    "theta-zero",
                    "theta = 0 is the Hausdorff endpoint, not part of the spectrum; use the `jump` command (its s_lower)",
                ));
            }
            range(!v.is_empty() && v.iter().all(|&th| th > 0.0 && th <= 1.0), "theta values must lie in (0, 1]")?;
            range(v.windows(2).all(|w| w[0] < w[1]), "theta grid must be strictly ascending")?;
        }
        if let Some(g) = &p.t_grid {
            let v = g.values();
            range(!v.is_empty() && v.iter().all(|&t| t >= 0.0 && t.is_finite()), "t values must be finite and >= 0")?;
        }
        if let Some(g) = &p.eps_grid {
            range(g.values().iter().all(|&e| e > 0.0), "eps values must be positive")?;
        }
        range(p.tol.is_none_or(|t| t > 0.0 && t < 1.0), "tol must lie in (0, 1)")?;
        range(p.cap.is_none_or(|c| c > 0.0 && c.is_finite()), "cap must be positive")?;
        range(p.k_max.is_none_or(|k| k >= 2), "k_max must be at least 2")?;
        range(p.window.is_none_or(|w| w >= 1), "window must be at least 1")?;
        if let (Some(k), Some(w)) = (p.k_max, p.window) {
            range(k >= 2 * w, "k_max must be at least 2*window")?;
        }
        range(p.k.is_none_or(|k| k >= 1), "k must be at least 1")?;
        range(p.delta0.is_none_or(|d| d > 0.0 && d <= 1.0), "delta0 must lie in (0, 1]")?;
        range(p.rho.is_none_or(|r| r > 0.0 && r < 1.0), "rho must lie in (0, 1)")?;
        let explicit = [p.delta0.is_some(), p.rho.is_some(), p.steps.is_some()];
        if explicit.iter().any(|&x| x) {
            range(explicit.iter().all(|&x| x), "delta0, rho and steps go together")?;
            range(p.depth.is_none(), "depth and an explicit delta schedule exclude each other")?;
        }
        range(p.gap.is_none_or(|g| g > 0.0 && g < 1.0), "gap must lie in (0, 1)")?;
        if p.gap.is_some() {
            range(p.placement != Some(PlacementKind::Osc), "gap only applies to SSC placement")?;
        }
        range(p.samples.is_none_or(|s| s >= 1), "samples must be at least 1")?;
        range(p.t.is_none_or(|t| t >= 0.0), "t must be >= 0")?;
        range(p.slack.is_none_or(|s| s > 0.0), "slack must be positive")?;
        range(p.block_len.is_none_or(|b| b >= 1), "block_len must be at least 1")?;
        range(p.blocks.is_none_or(|b| b >= 1), "blocks must be at least 1")?;
        range(p.check_levels.is_none_or(|c| c >= 2), "check_levels must be at least 2")?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::from_toml(&e, text, ""))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let c = parse_config("command = \"jump\"\npreset = \"E1\"\n").unwrap();
        assert_eq!(c.command, CommandKind::Jump);
        assert_eq!(c.out, PathBuf::from("."));
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.params, Params::default());
    }

    #[test]
    fn emit_parse_is_idempotent() {
        let text = "command = \"spectrum\"\npreset = \"middle-third\"\nformat = \"json-lines\"\n\n[params]\ntheta_grid = \"0.1:1:0.1\"\ntol = 0.005\n";
        let once = parse_config(text).unwrap().to_toml();
        let twice = parse_config(&once).unwrap().to_toml();
        assert_eq!(once, twice);
        let c = parse_config("command = \"pressure\"\npreset = \"E1\"\n[params]\nt_grid = [0.1, 0.5]\n").unwrap();
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn distinct_codes() {
        let code = |t: &str| parse_config(t).unwrap_err().code;
        assert_eq!(code("command = \"jump\"\ncommand = \"jump\"\npreset = \"E1\""), "duplicate-key");
        assert_eq!(code("command = \"jump\"\npreset = \"E1\"\nspeed = 3"), "unknown-key");
        assert_eq!(code("command = \"jump\"\npreset = \"nope\""), "unknown-preset");
        assert_eq!(code("command = \"jump\"\npreset = \"E1\"\n[params]\ntol = -1.0"), "out-of-range");
        assert_eq!(code("command = \"jump\"\npreset = \"E1\"\n[params]\ndepth = 3"), "unused-key");
        assert_eq!(code("command = \"jump\""), "missing-key");
        assert_eq!(code("command = \"jump\"\npreset = \"E1\"\n[params\n"), "syntax");
        assert_eq!(
            code("command = \"spectrum\"\npreset = \"E1\"\n[params]\ntheta_grid = \"0:1:0.1\""),
            "theta-zero"
        );
    }

    #[test]
    fn error_positions() {
        let e = parse_config("command = \"jump\"\npreset = \"E1\"\npreset = \"E2\"\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.column.is_some());
    }

    #[test]
    fn grids() {
        let g: Grid = "0.1:1.0:0.1".parse().unwrap();
        assert_eq!(g.values().len(), 10);
        let g: Grid = "0.5,0.25".parse().unwrap();
        assert_eq!(g.values(), vec![0.5, 0.25]);
        assert!("1:0:0.1".parse::<Grid>().is_err());
        let s: Scales = "0.1:0.001:5".parse().unwrap();
        assert_eq!(s.count, 5);
    }
}
