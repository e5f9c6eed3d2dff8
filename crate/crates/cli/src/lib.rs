//! Experiment orchestration for `galerkin-flm`: manifests, the `flm`
//! subcommands and their artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{load_config, resolve, ExperimentConfig, Overrides, Resolved};
pub use error::{CliError, CliResult};

/// A subcommand with its specific arguments.
#[derive(Debug, Clone)]
pub enum Command {
    Simulate,
    Estimate { sample: Option<PathBuf> },
    Rates,
    Lowerbound,
    CheckSideCondition,
}

/// What a run produced, for the caller to report.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub message: String,
    /// A rate verdict that came out negative (exit code 3).
    pub verdict_failed: bool,
}

/// Resolves `config` and runs `command`, writing into `out` or else the configured directory.
pub fn run(command: &Command, config: &ExperimentConfig, out: Option<&Path>) -> CliResult<RunSummary> {
    let res = resolve(config)?;
    let out = config.output_dir(out);
    let summary = match command {
        Command::Simulate => {
            let o = commands::simulate(&res, &out)?;
            let msg = format!("simulated n = {}, J = {}", o.sample.n(), o.sample.truncation());
            RunSummary { files: o.files, message: msg, verdict_failed: false }
        }
        Command::Estimate { sample } => {
            let o = commands::estimate(&res, sample.as_deref(), &out)?;
            let msg = format!(
                "m = {}, s = {}, omega held: {}, sigma_min = {:.4e}",
                o.estimate.m, o.estimate.s, o.estimate.omega_held, o.estimate.sigma_min
            );
            RunSummary { files: o.files, message: msg, verdict_failed: false }
        }
        Command::Rates => {
            let o = commands::rates(&res, &out)?;
            let v = &o.verdict;
            let msg = format!(
                "fitted slope {:.4}, theory {:.4}, tolerance {}: {:?}",
                v.fitted_slope, v.theory_slope, v.tolerance, v.status
            );
            let failed = v.status == commands::VerdictStatus::Fail;
            RunSummary { files: o.files, message: msg, verdict_failed: failed }
        }
        Command::Lowerbound => {
            let o = commands::lowerbound(&res, &out)?;
            let r = &o.report;
            let msg = format!(
                "m* = {}, {} sign vectors, inequalities hold: {}, worst risk / delta* = {:.4}",
                r.m_star,
                r.checks.len(),
                r.all_hold,
                r.worst_over_delta_star
            );
            RunSummary { files: o.files, message: msg, verdict_failed: false }
        }
        Command::CheckSideCondition => {
            let o = commands::side_condition(&res, &out)?;
            let msg = format!("side condition: {:?}, max ratios {:?}", o.report.verdict, o.report.max_ratios);
            RunSummary { files: o.files, message: msg, verdict_failed: false }
        }
    };
    Ok(summary)
}
