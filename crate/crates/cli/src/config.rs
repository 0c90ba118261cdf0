//! Run configuration: a JSON document merged with command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rough_core::experiments::{SuiteConfig, DEFAULT_SEED};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `β` as a number or `auto` (1.05 × the regime threshold).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Value(f64),
    Keyword(AutoKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

impl BetaSpec {
    pub const AUTO: BetaSpec = BetaSpec::Keyword(AutoKeyword::Auto);
}

impl FromStr for BetaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(BetaSpec::AUTO);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(BetaSpec::Value(v)),
            _ => Err(format!("expected a positive number or `auto`, got `{s}`")),
        }
    }
}

impl fmt::Display for BetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaSpec::Value(v) => write!(f, "{v}"),
            BetaSpec::Keyword(_) => f.write_str("auto"),
        }
    }
}

/// Every setting a run can take. Absent values fall back to per-command
/// defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub seed: Option<u64>,
    pub depth: Option<usize>,
    pub levels: Option<usize>,
    pub p: Option<f64>,
    pub delta: Option<f64>,
    pub beta: Option<BetaSpec>,
    pub pairs: Option<usize>,
    pub tol: Option<f64>,
    pub s: Option<f64>,
    pub t: Option<f64>,
    pub order: Option<u32>,
    pub path: Option<PathBuf>,
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,
    pub problem: Option<PathBuf>,
    pub epsilons: Option<Vec<f64>>,
    pub suite: Option<SuiteConfig>,
}

impl Settings {
    /// Read a config file; relative input paths are resolved against its
    /// directory.
    pub fn from_file(file: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(file)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", file.display())))?;
        let mut settings: Settings = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", file.display())))?;
        let base = file.parent().unwrap_or(Path::new(""));
        for slot in [&mut settings.path, &mut settings.x, &mut settings.y, &mut settings.problem] {
            if let Some(p) = slot.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(settings)
    }

    /// Values set in `flags` replace those in `self`.
    pub fn overridden_by(self, flags: Settings) -> Settings {
        Settings {
            seed: flags.seed.or(self.seed),
            depth: flags.depth.or(self.depth),
            levels: flags.levels.or(self.levels),
            p: flags.p.or(self.p),
            delta: flags.delta.or(self.delta),
            beta: flags.beta.or(self.beta),
            pairs: flags.pairs.or(self.pairs),
            tol: flags.tol.or(self.tol),
            s: flags.s.or(self.s),
            t: flags.t.or(self.t),
            order: flags.order.or(self.order),
            path: flags.path.or(self.path),
            x: flags.x.or(self.x),
            y: flags.y.or(self.y),
            problem: flags.problem.or(self.problem),
            epsilons: flags.epsilons.or(self.epsilons),
            suite: flags.suite.or(self.suite),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn require_path(&self, which: &str) -> Result<&Path, CliError> {
        let slot = match which {
            "path" => &self.path,
            "x" => &self.x,
            "y" => &self.y,
            "problem" => &self.problem,
            _ => unreachable!("unknown input slot {which}"),
        };
        slot.as_deref()
            .ok_or_else(|| CliError::Usage(format!("missing input `{which}` (flag --{which} or config field)")))
    }

    pub fn check_positive(name: &str, value: f64) -> Result<f64, CliError> {
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(CliError::Usage(format!("{name} must be positive, got {value}")))
        }
    }
}
