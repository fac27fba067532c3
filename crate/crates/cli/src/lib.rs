//! Scenario runner for the knowledge-spillover competition game.
//!
//! A run reads one JSON scenario, validates it, expands every default, runs
//! a pipeline from `spillover-core` and writes a JSON report plus CSV
//! tables. Reports are byte-identical for the same config, seed and tool
//! version.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::{LoadError, OutputFormat, ScenarioConfig};
use crate::error::CliError;

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "SPILLOVER_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "spillover", version, about = "Run knowledge-spillover competition scenarios")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a config and report every problem found.
    Validate(CommonArgs),
    /// Knowledge, shares, costs and profits at the configured efforts.
    Simulate(CommonArgs),
    /// Constrained cost minimization, FOCs and price triples.
    Solve(CommonArgs),
    /// Best-response dynamics, deviation check and price triples.
    Equilibrium(CommonArgs),
    /// Supplier/buyer split, supply curve, subsidized profits and flows.
    Subsidy(CommonArgs),
    /// Seeded randomized property campaign.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `sweep.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; beats SPILLOVER_OUT_DIR and `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Worker threads; does not affect results.
    #[arg(long)]
    pub workers: Option<usize>,
}

/// What a finished command produced.
#[derive(Debug)]
pub struct RunSummary {
    pub outcome: Option<Outcome>,
    pub written: Vec<PathBuf>,
    pub exit_code: i32,
}

/// Loads, validates and resolves the config named by `args`.
pub fn prepare(args: &CommonArgs) -> Result<ScenarioConfig, CliError> {
    let (cfg, _) = config::load(&args.config).map_err(|e| match e {
        LoadError::Io { path, source } => CliError::Io { path, source },
        LoadError::Invalid(d) => CliError::Invalid(d),
    })?;
    let seed = args.seed.unwrap_or(cfg.sweep.seed);
    let mut resolved = config::resolve(&cfg, seed);
    if let Some(f) = args.format {
        resolved.output.format = f;
    }
    resolved.output.dir = match (&args.out, std::env::var_os(OUT_DIR_ENV)) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) if !dir.is_empty() => PathBuf::from(dir),
        _ => resolved.output.dir,
    };
    Ok(resolved)
}

pub fn run(cli: &Cli) -> Result<RunSummary, CliError> {
    let (args, workers) = match &cli.command {
        Command::Validate(a) => {
            prepare(a)?;
            return Ok(RunSummary {
                outcome: None,
                written: Vec::new(),
                exit_code: error::EXIT_OK,
            });
        }
        Command::Sweep(s) => (&s.common, s.workers),
        Command::Simulate(a) | Command::Solve(a) | Command::Equilibrium(a) | Command::Subsidy(a) => (a, None),
    };
    let cfg = prepare(args)?;
    let outcome = match &cli.command {
        Command::Simulate(_) => commands::simulate(&cfg)?,
        Command::Solve(_) => commands::solve(&cfg)?,
        Command::Equilibrium(_) => commands::equilibrium(&cfg)?,
        Command::Subsidy(_) => commands::subsidy(&cfg)?,
        Command::Sweep(_) => sweep::sweep(&cfg, workers)?,
        Command::Validate(_) => unreachable!("handled above"),
    };
    let written = output::write_outputs(&cfg.output.dir, &outcome.report, &outcome.tables, cfg.output.format)
        .map_err(|(path, source)| CliError::Io { path, source })?;
    Ok(RunSummary {
        exit_code: outcome.exit_code,
        outcome: Some(outcome),
        written,
    })
}
