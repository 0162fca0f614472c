//! Consolidated pass/fail table over finished runs.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::output::{Summary, SUMMARY_FILE};

/// Summary files under `paths`: files as given, directories via their own
/// `summary.json` or, failing that, those of their immediate subdirectories.
fn collect(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_file() {
            out.push(p.clone());
        } else if p.join(SUMMARY_FILE).is_file() {
            out.push(p.join(SUMMARY_FILE));
        } else if p.is_dir() {
            let mut subs: Vec<PathBuf> = fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|d| d.join(SUMMARY_FILE).is_file())
                .map(|d| d.join(SUMMARY_FILE))
                .collect();
            if subs.is_empty() {
                return Err(CliError::Config(format!("no {SUMMARY_FILE} under {}", p.display())));
            }
            subs.sort();
            out.extend(subs);
        } else {
            return Err(CliError::Config(format!("{} does not exist", p.display())));
        }
    }
    Ok(out)
}

fn load(path: &Path) -> Result<Summary, CliError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:e}"))
}

/// Prints one row per check and one verdict per criterion.
pub fn report(paths: &[PathBuf]) -> Result<(), CliError> {
    let files = collect(paths)?;
    println!("source\texperiment\tcriterion\tcheck\tvalue\tlower\tupper\tstatus");
    let mut failures = Vec::new();
    let mut criteria: Vec<(u32, bool)> = Vec::new();
    for f in &files {
        let s = load(f)?;
        let source = f.parent().unwrap_or(f).display().to_string();
        for c in &s.checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            println!(
                "{source}\t{}\t{}\t{}\t{}\t{}\t{}\t{status}",
                s.experiment,
                c.criterion.map_or_else(|| "-".to_string(), |k| k.to_string()),
                c.name,
                fmt(c.value),
                fmt(c.lower),
                fmt(c.upper),
            );
            if let Some(k) = c.criterion {
                match criteria.iter_mut().find(|(id, _)| *id == k) {
                    Some((_, ok)) => *ok &= c.pass,
                    None => criteria.push((k, c.pass)),
                }
            }
            if !c.pass {
                failures.push(format!("{source}: {}", c.name));
            }
        }
    }
    criteria.sort();
    for (k, ok) in &criteria {
        println!("{} criterion {k}", if *ok { "PASS" } else { "FAIL" });
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(format!("failed checks:\n  {}", failures.join("\n  "))))
    }
}
