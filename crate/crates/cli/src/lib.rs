//! Batch front end: `ase-lab <command> --config <path>`.
//!
//! Exit status is 0 on success, 1 for invalid input and 2 when a numerical
//! computation that had to be finite failed.

pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

use ase_lab::analytic::{ase_limit, multislope_limit, scaled_sinr_limit, AnalyticError};
use ase_lab::conditions::{
    check_corollary1, check_corollary2, check_corollary5, default_lambda0_grid, table1_condition_pair, ConditionError,
};
use ase_lab::models::check_feasibility;
use ase_lab::numerics::QuadSettings;
use ase_lab::sim::{estimate_metrics, lambda_sweep, with_threads, SimError};
use ase_lab::{ModelError, PathLossModel};
use clap::{Parser, ValueEnum};
use thiserror::Error;

use config::{Command, ExperimentConfig};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "ASE_LAB_THREADS";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidParameter(_) | ModelError::NegativeDistance(_) => CliError::Validation(vec![e.to_string()]),
            ModelError::GammaInconclusive { .. } | ModelError::Quadrature(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<AnalyticError> for CliError {
    fn from(e: AnalyticError) -> Self {
        match e {
            AnalyticError::Model(m) => m.into(),
            AnalyticError::Infeasible { .. } | AnalyticError::Precondition(_) => CliError::Validation(vec![e.to_string()]),
            AnalyticError::DivergentGamma | AnalyticError::Inconclusive(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) => CliError::Validation(vec![e.to_string()]),
            SimError::Analytic(a) => a.into(),
        }
    }
}

impl From<ConditionError> for CliError {
    fn from(e: ConditionError) -> Self {
        match e {
            ConditionError::Precondition(_) => CliError::Validation(vec![e.to_string()]),
            ConditionError::Model(m) => m.into(),
            ConditionError::Quadrature(_) => CliError::Numerical(e.to_string()),
            ConditionError::Sim(s) => s.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CommandArg {
    Feasibility,
    Limit,
    Conditions,
    Simulate,
    Sweep,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Feasibility => Command::Feasibility,
            CommandArg::Limit => Command::Limit,
            CommandArg::Conditions => Command::Conditions,
            CommandArg::Simulate => Command::Simulate,
            CommandArg::Sweep => Command::Sweep,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ase-lab", version, about = "Densification limits of cellular networks with bounded path loss")]
struct Args {
    #[arg(value_enum)]
    command: CommandArg,
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// CSV path for `simulate`/`sweep` (the report goes next to it with a
    /// `.report.txt` suffix); report path for the other commands.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub csv: Option<String>,
}

/// Parses `argv`, runs the command and writes its outputs. Returns the
/// process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run_args(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_args(args: &Args) -> Result<(), CliError> {
    let command = Command::from(args.command);
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(n) = args.realizations {
        cfg.realizations = Some(n);
    }
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Validation(vec![format!("{THREADS_ENV} must be a positive integer, got {v:?}")]))?,
        ),
        Err(_) => None,
    };
    let outcome = match threads {
        Some(n) => with_threads(n, || execute(command, cfg.clone()))?,
        None => execute(command, cfg.clone())?,
    };

    let out = args.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from));
    print!("{}", outcome.report);
    match (&outcome.csv, &out) {
        (Some(csv), Some(path)) => {
            write(path, csv)?;
            write(&report_path(path), &outcome.report)?;
        }
        (Some(csv), None) => {
            println!();
            print!("{csv}");
        }
        (None, Some(path)) => write(path, &outcome.report)?,
        (None, None) => {}
    }
    Ok(())
}

/// Where the report of a CSV-producing command is written.
pub fn report_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".report.txt");
    PathBuf::from(s)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Validates, resolves and runs one command.
pub fn execute(command: Command, cfg: ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate(command)?;
    let cfg = cfg.resolve(command);
    let mut report = format!("model: {}\nfading: {}\n", cfg.model.label(), cfg.fading.label());
    let tol = cfg.tolerance();
    let mut csv = None;
    match command {
        Command::Feasibility => {
            let r = check_feasibility(&cfg.model, &QuadSettings::with_tol(tol))?;
            report.push_str(&report::feasibility_lines(&r));
        }
        Command::Limit => {
            let l = ase_limit(&cfg.model, tol)?;
            report.push_str(&report::limit_lines(&l));
            if let PathLossModel::MultiSlope(m) = &cfg.model {
                if let Ok(ms) = multislope_limit(m) {
                    report.push_str(&format!(
                        "published summation formula: {} (relative difference {:e})\n",
                        ms.printed_formula, ms.printed_relative_difference
                    ));
                }
            }
            report.push_str(&format!("lambda E[SINR] limit: {}\n", scaled_sinr_limit(&cfg.model, tol)?));
        }
        Command::Conditions => report.push_str(&conditions_report(&cfg)?),
        Command::Simulate => {
            let lambda = cfg.lambda.expect("validated");
            let limit = ase_limit(&cfg.model, tol)?;
            let m = estimate_metrics(&cfg.sim_config(lambda))?;
            report.push_str(&report::limit_lines(&limit));
            report.push_str(&report::metrics_lines(&m));
            csv = Some(report::csv_table(std::slice::from_ref(&m), limit.general_value));
        }
        Command::Sweep => {
            let grid = cfg.lambda_grid.clone().expect("validated");
            let limit = ase_limit(&cfg.model, tol)?;
            let template = cfg.sim_config(grid[0]);
            let points = lambda_sweep(&template, &grid)?;
            report.push_str(&report::limit_lines(&limit));
            let rows: Vec<_> = points.into_iter().map(|p| p.metrics).collect();
            for m in &rows {
                report.push_str(&report::metrics_lines(m));
            }
            csv = Some(report::csv_table(&rows, limit.general_value));
        }
    }
    report.push_str(&report::config_block(&cfg.to_toml()));
    Ok(Outcome { report, csv })
}

fn conditions_report(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let mut s = String::new();
    let c = cfg.conditions.clone().unwrap_or_default();
    let grid = c.lambda0_grid.clone().unwrap_or_else(default_lambda0_grid);
    let feas = check_feasibility(&cfg.model, &QuadSettings::with_tol(cfg.tolerance()))?;
    s.push_str(&report::feasibility_lines(&feas));

    let pair = table1_condition_pair(&cfg.model);
    let lower = c.lower_bound.clone().or_else(|| pair.as_ref().map(|p| p.0.clone()));
    let r0 = c.r0.or(pair.as_ref().map(|p| p.1));
    let Some(r0) = r0 else {
        s.push_str("no (lower bound, r0) pair available; set conditions.r0 and conditions.lower_bound\n");
        return Ok(s);
    };
    if cfg.model.is_deterministic() {
        s.push_str(&report::verdict_lines(&check_corollary2(&cfg.model, r0, &grid)?));
    } else {
        s.push_str("C2: not applicable, the path loss depends on the link state\n");
    }
    if let Some(lower) = lower {
        s.push_str(&format!("lower bound: {}\n", lower.label()));
        s.push_str(&report::verdict_lines(&check_corollary5(&cfg.model, &lower, r0, &grid)?));
    }
    if c.corollary1 {
        if feas.feasible {
            s.push_str(&report::verdict_lines(&check_corollary1(&cfg.model, &cfg.fading, false, &grid)?));
        } else {
            s.push_str("C1a: skipped, model is not feasible\n");
        }
    }
    Ok(s)
}
