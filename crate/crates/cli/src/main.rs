use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use flm_cli::{load_config, run, CliError, Command, Overrides};

/// Thresholded Galerkin estimation experiments for the functional linear model.
#[derive(Parser)]
#[command(name = "flm", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Simulate one sample and write it as CSV.
    Simulate(Common),
    /// Estimate the slope (or a derivative) from a stored or fresh sample.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Sample CSV written by `simulate`; a fresh sample is drawn when absent.
        #[arg(long)]
        sample: Option<PathBuf>,
    },
    /// Monte Carlo risks over the n grid and a rate verdict.
    Rates(Common),
    /// Assouad worst-case family checks and risks.
    Lowerbound(Common),
    /// Evaluate the upper-bound side condition over a grid.
    CheckSideCondition {
        #[command(flatten)]
        common: Common,
        /// Moment index k.
        #[arg(long)]
        k: Option<u32>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment manifest (TOML) or a JSON sidecar from an earlier run.
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory (default: config, then $FLM_OUT_DIR, then ./flm-out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    /// Sample size for single-sample commands.
    #[arg(long)]
    n: Option<usize>,
    /// Worker threads for the replications (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Accept a derivative order above the slope smoothness.
    #[arg(long)]
    allow_s_above_p: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    let (common, command, k) = match cli.command {
        Sub::Simulate(c) => (c, Command::Simulate, None),
        Sub::Estimate { common, sample } => (common, Command::Estimate { sample }, None),
        Sub::Rates(c) => (c, Command::Rates, None),
        Sub::Lowerbound(c) => (c, Command::Lowerbound, None),
        Sub::CheckSideCondition { common, k } => (common, Command::CheckSideCondition, k),
    };
    let mut config = load_config(&common.config)?;
    config.apply(&Overrides {
        seed: common.seed,
        replications: common.replications,
        n: common.n,
        k,
        allow_s_above_p: common.allow_s_above_p,
    });

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = common.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().context("building the worker pool")?;
    for w in &flm_cli::resolve(&config)?.warnings {
        eprintln!("warning: {w}");
    }
    let summary = pool.install(|| run(&command, &config, common.out.as_deref()))?;
    println!("{}", summary.message);
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    if summary.verdict_failed {
        eprintln!("verdict: fail");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}
