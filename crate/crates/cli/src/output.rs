//! Artifacts of a run: `trajectory.csv`, `charges.csv`, `summary.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use conflow::ModeSpectrum;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const CHARGES_FILE: &str = "charges.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.toml";

/// One pass/fail comparison of a measured value against bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: Option<u32>,
    pub name: String,
    /// `None` when the measurement was not finite.
    pub value: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn at_most(criterion: Option<u32>, name: &str, value: f64, upper: f64) -> Self {
        Self::within(criterion, name, value, None, Some(upper))
    }

    pub fn within(criterion: Option<u32>, name: &str, value: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let finite = value.is_finite();
        let pass = finite && lower.map_or(true, |l| value >= l) && upper.map_or(true, |u| value <= u);
        Self {
            criterion,
            name: name.to_string(),
            value: finite.then_some(value),
            lower,
            upper,
            pass,
        }
    }

    pub fn flag(criterion: Option<u32>, name: &str, ok: bool) -> Self {
        Self::within(criterion, name, if ok { 1.0 } else { 0.0 }, Some(1.0), None)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub metrics: BTreeMap<String, serde_json::Value>,
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            metrics: BTreeMap::new(),
            checks: Vec::new(),
        }
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.metrics.insert(key.to_string(), v);
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Sampled mode-space states.
#[derive(Clone, Debug, Default)]
pub struct Series {
    pub times: Vec<f64>,
    pub states: Vec<ModeSpectrum>,
}

/// Named charge columns per sample.
#[derive(Clone, Debug, Default)]
pub struct ChargeTable {
    pub columns: Vec<&'static str>,
    pub rows: Vec<(f64, Vec<f64>)>,
}

pub struct Artifacts {
    pub series: Option<Series>,
    pub charges: Option<ChargeTable>,
    pub extra: Vec<(String, Vec<String>, Vec<Vec<f64>>)>,
    pub summary: Summary,
}

pub fn write_all(dir: &Path, art: &Artifacts, config_toml: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_FILE), config_toml)?;
    if let Some(series) = &art.series {
        let mut w = csv::Writer::from_path(dir.join(TRAJECTORY_FILE))?;
        w.write_record(["t", "n", "re", "im", "abs2"])?;
        for (t, s) in series.times.iter().zip(&series.states) {
            for (n, a) in s.iter().enumerate() {
                w.write_record([t.to_string(), n.to_string(), a.re.to_string(), a.im.to_string(), a.norm_sqr().to_string()])?;
            }
        }
        w.flush()?;
    }
    if let Some(table) = &art.charges {
        let mut w = csv::Writer::from_path(dir.join(CHARGES_FILE))?;
        let mut head = vec!["t".to_string()];
        head.extend(table.columns.iter().map(|c| c.to_string()));
        w.write_record(&head)?;
        for (t, row) in &table.rows {
            let mut rec = vec![t.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    for (name, head, rows) in &art.extra {
        let mut w = csv::Writer::from_path(dir.join(name))?;
        w.write_record(head)?;
        for row in rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
    }
    let mut json = serde_json::to_string_pretty(&art.summary)?;
    json.push('\n');
    fs::write(dir.join(SUMMARY_FILE), json)?;
    Ok(())
}
