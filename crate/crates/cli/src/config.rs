//! Run configuration: TOML file plus `KEY=VALUE` overrides, validated before execution.

use std::path::{Path, PathBuf};

use conflow::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Evolve,
    Subspace,
    Stationary,
    Szego,
    Validate,
    Sums,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Evolve => "evolve",
            Experiment::Subspace => "subspace",
            Experiment::Stationary => "stationary",
            Experiment::Szego => "szego",
            Experiment::Validate => "validate",
            Experiment::Sums => "sums",
        }
    }
}

/// A real number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cplx {
    Real(f64),
    Pair([f64; 2]),
}

impl Cplx {
    pub fn value(self) -> Complex64 {
        match self {
            Cplx::Real(x) => Complex64::new(x, 0.0),
            Cplx::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchName {
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Amplitudes { values: Vec<Cplx> },
    Random { modes: usize, norm: f64, seed: u64 },
    Subspace { b: Cplx, a: Cplx, p: Cplx },
    OneMode { mode: usize, c: Cplx },
    FamilyA0 { c: Cplx, p: Cplx },
    FamilyOmega0 { c: Cplx, p: Cplx },
    FamilyPm { c: Cplx, p: Cplx, branch: BranchName },
    Blaschke { c: Cplx, zeros: Vec<Cplx> },
    Decimated { c: Cplx, p: Cplx, period: usize },
    /// Szegő single pole `(b + a z)/(1 − p z)` with real data.
    SzegoPole { a: f64, b: f64, p: f64 },
    /// Szegő two-mode data `a = 1, b = 2ε, p = 0`.
    TwoMode { epsilon: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_tol")]
    pub rel: f64,
    #[serde(default = "default_tol")]
    pub abs: f64,
    #[serde(default)]
    pub max_step: Option<f64>,
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: default_tol(),
            abs: default_tol(),
            max_step: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateParams {
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_horizon")]
    pub horizon_factor: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.05]
}

fn default_horizon() -> f64 {
    1.0
}

fn default_samples() -> usize {
    400
}

impl Default for ValidateParams {
    fn default() -> Self {
        Self {
            epsilons: default_epsilons(),
            horizon_factor: default_horizon(),
            samples: default_samples(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumsParams {
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    #[serde(default = "default_contour_states")]
    pub contour_states: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_max() -> u64 {
    20
}

fn default_contour_states() -> usize {
    20
}

impl Default for SumsParams {
    fn default() -> Self {
        Self {
            n_max: default_n_max(),
            contour_states: default_contour_states(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub sample_interval: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub initial: Option<Initial>,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub validate: ValidateParams,
    #[serde(default)]
    pub sums: SumsParams,
}

fn default_truncation() -> usize {
    64
}

fn default_t_end() -> f64 {
    10.0
}

pub const MAX_TRUNCATION: usize = 1 << 16;

/// Sets `key` (dot-separated) in a TOML table, parsing `raw` as a TOML value
/// when possible and as a string otherwise.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not KEY=VALUE")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("override `{assignment}` has an empty key")));
    }
    let value = parse_value(raw.trim());
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    // parse through a one-line document so arrays and inline tables work too
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

pub fn parse_table(text: &str, origin: &str) -> Result<toml::Table, CliError> {
    text.parse::<toml::Table>()
        .map_err(|e| CliError::Config(format!("{origin}: {e}")))
}

pub fn load_table(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_table(&text, &path.display().to_string())
}

pub fn from_table(table: toml::Table) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table = load_table(path)?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    from_table(table)
}

impl RunConfig {
    /// Schema-level checks; physical domains are checked by the library and
    /// reported as domain errors.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.truncation == 0 || self.truncation > MAX_TRUNCATION {
            return bad(format!("truncation must lie in 1..={MAX_TRUNCATION}"));
        }
        if !self.t_end.is_finite() {
            return bad("t_end must be finite".into());
        }
        if let Some(dt) = self.sample_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("sample_interval must be positive".into());
            }
        }
        for (name, v) in [("tolerances.rel", self.tolerances.rel), ("tolerances.abs", self.tolerances.abs)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1)"));
            }
        }
        if let Some(h) = self.tolerances.max_step {
            if !(h > 0.0) {
                return bad("tolerances.max_step must be positive".into());
            }
        }
        if self.validate.epsilons.is_empty() || self.validate.samples == 0 {
            return bad("validate needs at least one epsilon and one sample".into());
        }
        if !(self.validate.horizon_factor > 0.0 && self.validate.horizon_factor.is_finite()) {
            return bad("validate.horizon_factor must be positive".into());
        }
        let needs_initial = matches!(
            self.experiment,
            Experiment::Evolve | Experiment::Subspace | Experiment::Stationary | Experiment::Szego
        );
        if needs_initial && self.initial.is_none() {
            return bad(format!("experiment `{}` needs an [initial] table", self.experiment.name()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_set_nested_keys() {
        let mut t = parse_table("experiment = \"evolve\"\n[initial]\nkind = \"one_mode\"\nmode = 0\nc = 1.0\n", "x").unwrap();
        apply_override(&mut t, "initial.c=[0.5, 0.5]").unwrap();
        apply_override(&mut t, "t_end=3").unwrap();
        apply_override(&mut t, "tolerances.rel=1e-8").unwrap();
        let cfg = from_table(t).unwrap();
        assert_eq!(cfg.initial, Some(Initial::OneMode { mode: 0, c: Cplx::Pair([0.5, 0.5]) }));
        assert_eq!(cfg.tolerances.rel, 1e-8);
        // an integer override is accepted where a float is expected
        assert_eq!(cfg.t_end, 3.0);
    }

    #[test]
    fn schema_errors() {
        assert!(from_table(parse_table("experiment = \"evolve\"\nbogus = 1\n", "x").unwrap()).is_err());
        assert!(from_table(parse_table("experiment = \"nope\"\n", "x").unwrap()).is_err());
        assert!(from_table(parse_table("experiment = \"evolve\"\n", "x").unwrap()).is_err());
        assert!(from_table(parse_table("experiment = \"sums\"\ntruncation = 0\n", "x").unwrap()).is_err());
        assert!(from_table(parse_table("experiment = \"sums\"\n[tolerances]\nrel = 2.0\n", "x").unwrap()).is_err());
        let mut t = toml::Table::new();
        assert!(apply_override(&mut t, "novalue").is_err());
    }

    #[test]
    fn round_trip() {
        let cfg = from_table(parse_table("experiment = \"subspace\"\n[initial]\nkind = \"subspace\"\nb = 1.0\na = 1.0\np = 0.5\n", "x").unwrap()).unwrap();
        let again = from_table(parse_table(&cfg.to_toml(), "y").unwrap()).unwrap();
        assert_eq!(cfg, again);
    }
}
