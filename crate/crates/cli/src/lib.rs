//! Command-line driver: a TOML run configuration, four subcommands and
//! CSV output with a config hash on every table.
//!
//! Exit codes: 0 when every check passes, 1 on a numerical or tolerance
//! failure, 2 on a usage, configuration or output error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{cmd_green_validate, cmd_report, cmd_solve, cmd_sweep, CliError, Outcome};
use crate::config::LoadedConfig;
use crate::output::OutputDir;

#[derive(Debug, Parser)]
#[command(
    name = "perforated",
    version,
    about = "Periodic Dirichlet problem in a perforated plane"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides PERFORATED_OUT_DIR and `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Suppress the stdout summary.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the identities of the periodic Green function.
    GreenValidate,
    /// Solve at one eps and sample the field.
    Solve,
    /// Sweep eps, fit polynomials and compare with the limiting problem.
    Sweep,
    /// Summarize the limiting problem.
    Report,
}

/// Run one subcommand against a loaded config.
pub fn execute(command: Command, cfg: &LoadedConfig, out: &OutputDir) -> Result<Outcome, CliError> {
    match command {
        Command::GreenValidate => cmd_green_validate(cfg, out),
        Command::Solve => cmd_solve(cfg, out),
        Command::Sweep => cmd_sweep(cfg, out),
        Command::Report => cmd_report(cfg, out),
    }
}

pub fn run(cli: &Cli) -> i32 {
    let Some(path) = cli.config.as_deref() else {
        eprintln!("error: --config PATH is required");
        return 2;
    };
    let cfg = match LoadedConfig::from_path(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return 2;
        }
    };
    let out = OutputDir::new(cfg.output_dir(cli.out.as_deref()), &cfg.hash);
    match execute(cli.command, &cfg, &out) {
        Ok(outcome) => {
            if !cli.quiet {
                for line in &outcome.lines {
                    println!("{line}");
                }
                println!("outputs in {}", out.root().display());
            }
            if outcome.passed {
                0
            } else {
                if !cli.quiet {
                    println!("FAILED");
                }
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parse arguments and run; `--help` and `--version` return 0, bad usage 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
