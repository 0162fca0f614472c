//! `conflow`: run experiments, aggregate their checks, sweep parameters.

mod config;
mod error;
mod experiments;
mod output;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};
use rayon::prelude::*;

use crate::config::{apply_override, from_table, load, load_table, RunConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "conflow", version, about = "Conformal flow experiments")]
struct Cli {
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file.
    Run(RunArgs),
    /// Run the cartesian product of `--vary` values concurrently.
    Sweep(SweepArgs),
    /// Aggregate the checks of finished runs; exits nonzero if any failed.
    Report {
        /// `summary.json` files or run directories.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `KEY=VALUE`, dotted keys address nested tables.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `KEY=VALUE`; repeating a key adds another value for it.
    #[arg(long, value_name = "KEY=VALUE")]
    vary: Vec<String>,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn execute(cfg: &RunConfig, out: &Path) -> Result<bool, CliError> {
    let art = experiments::run(cfg)?;
    let mut stored = cfg.clone();
    stored.out = None;
    output::write_all(out, &art, &stored.to_toml())?;
    for c in art.summary.checks.iter().filter(|c| !c.pass) {
        warn!("check failed: {} ({:?})", c.name, c.value);
    }
    info!("wrote {}", out.display());
    Ok(art.summary.passed())
}

fn run_command(args: &RunArgs) -> Result<(), CliError> {
    let cfg = load(&args.config, &args.overrides)?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --out or set `out`".into()))?;
    execute(&cfg, &out)?;
    Ok(())
}

/// Groups `KEY=VALUE` pairs by key, in order of first appearance.
fn sweep_axes(vary: &[String]) -> Result<Vec<(String, Vec<String>)>, CliError> {
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    for v in vary {
        let (k, _) = v
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--vary `{v}` is not KEY=VALUE")))?;
        match axes.iter_mut().find(|(key, _)| key == k) {
            Some((_, vals)) => vals.push(v.clone()),
            None => axes.push((k.to_string(), vec![v.clone()])),
        }
    }
    Ok(axes)
}

fn sweep_command(args: &SweepArgs) -> Result<(), CliError> {
    let mut base = load_table(&args.config)?;
    for o in &args.overrides {
        apply_override(&mut base, o)?;
    }
    let axes = sweep_axes(&args.vary)?;
    let mut combos: Vec<Vec<String>> = vec![Vec::new()];
    for (_, vals) in &axes {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                vals.iter().map(move |v| {
                    let mut next = c.clone();
                    next.push(v.clone());
                    next
                })
            })
            .collect();
    }
    // validate every point before anything runs
    let mut configs = Vec::with_capacity(combos.len());
    for combo in &combos {
        let mut t = base.clone();
        for o in combo {
            apply_override(&mut t, o)?;
        }
        configs.push(from_table(t)?);
    }
    std::fs::create_dir_all(&args.out)?;
    let results: Vec<Result<bool, CliError>> = configs
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| execute(cfg, &args.out.join(format!("run-{i:03}"))))
        .collect();

    let mut w = csv::Writer::from_path(args.out.join("index.csv"))?;
    w.write_record(["run", "status", "checks", "settings"])?;
    let mut first_err: Option<CliError> = None;
    for (i, (combo, res)) in combos.iter().zip(results).enumerate() {
        let (status, checks) = match res {
            Ok(pass) => ("ok".to_string(), if pass { "pass" } else { "fail" }.to_string()),
            Err(e) => {
                error!("run-{i:03}: {e}");
                let s = (format!("exit {}", e.exit_code()), "-".to_string());
                first_err.get_or_insert(e);
                s
            }
        };
        w.write_record([format!("run-{i:03}"), status, checks, combo.join(" ")])?;
    }
    w.flush()?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CONFLOW_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("config error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            warn!("thread pool already configured: {e}");
        }
    }
    let result = match &cli.command {
        Command::Run(args) => run_command(args),
        Command::Sweep(args) => sweep_command(args),
        Command::Report { paths } => report::report(paths),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
