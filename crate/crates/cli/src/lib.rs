//! `ccfom` command-line harness: runs the methods, verifies their
//! certificates and writes CSV traces, text reports and SVG plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod svg;
pub mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Overrides, SweepConfig};
use crate::error::{CliError, CliResult, EXIT_CONFIG, EXIT_PASS};

#[derive(Debug, Parser)]
#[command(name = "ccfom", version, about = "Certified runs of subgradient, gradient and accelerated gradient methods")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and verify its certificate chain
    Run(CommonArgs),
    /// Re-verify a stored trace CSV
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Trace CSV written by `run`
        trace: PathBuf,
    },
    /// Run the cartesian product of list-valued config fields
    Sweep(CommonArgs),
    /// Probe the conjectured bound for the proximal accelerated method
    Conjecture(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment file (TOML)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub eps_rel: Option<f64>,
    #[arg(long)]
    pub eps_abs: Option<f64>,
    /// Worker threads for sweeps and probes
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides { eps_rel: self.eps_rel, eps_abs: self.eps_abs }
    }

    fn load(&self) -> CliResult<SweepConfig> {
        let path = self.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
        SweepConfig::load(path, &self.overrides())
    }
}

fn dispatch(cli: &Cli) -> CliResult<i32> {
    match &cli.command {
        Command::Run(args) => {
            let sweep = args.load()?;
            let cfg = sweep.single()?;
            if cfg.method == ccfom::methods::MethodKind::ProxAccelerated {
                let outcome = commands::cmd_conjecture(&sweep, &args.out, args.workers)?;
                println!("{}", outcome.summary);
                return Ok(outcome.exit_code);
            }
            let outcome = commands::cmd_run(&cfg, &args.out)?;
            println!(
                "{} {} {} K={} -> {}",
                outcome.verification.verdict(),
                cfg.method,
                cfg.problem_id,
                cfg.iterations,
                outcome.csv.display()
            );
            for f in outcome.verification.failures().take(5) {
                println!("  {}", f.describe());
            }
            Ok(outcome.exit_code)
        }
        Command::Verify { common, trace } => {
            let outcome = commands::cmd_verify(trace, &common.out, &common.overrides())?;
            println!("{} {} -> {}", outcome.verification.verdict(), trace.display(), outcome.report.display());
            for f in outcome.verification.failures().take(5) {
                println!("  {}", f.describe());
            }
            Ok(outcome.exit_code)
        }
        Command::Sweep(args) => {
            let outcome = commands::cmd_sweep(&args.load()?, &args.out, args.workers)?;
            for cell in &outcome.cells {
                println!("cell {} exit={}", cell.index, cell.exit_code);
            }
            println!("-> {}", outcome.csv.display());
            Ok(outcome.exit_code)
        }
        Command::Conjecture(args) => {
            let outcome = commands::cmd_conjecture(&args.load()?, &args.out, args.workers)?;
            println!("{}", outcome.summary);
            Ok(outcome.exit_code)
        }
    }
}

/// Parses `args` and runs the command; the return value is the process
/// exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
