//! Command-line front end for the detector modelling toolkit.
//!
//! Exit codes (stable):
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success                                   |
//! | 2    | command-line usage error                  |
//! | 3    | configuration error                       |
//! | 4    | domain error (input outside model range)  |
//! | 5    | eigensolver did not converge              |
//! | 6    | inconsistent measurement                  |
//! | 7    | I/O error                                 |
//! | 8    | `reproduce-paper`: a check failed         |

// Negated comparisons reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod reproduce;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use wspd_core::{Error, ErrorClass, Result};

use commands::{
    AbsorptanceArgs, Context, CountsArgs, EfficiencyArgs, FpExtractArgs, JitterArgs, OptimizeArgs, PulseArgs, Report,
    SolveModeArgs, SweepArgs,
};
use config::ProjectConfig;
use output::{render_json, Output};
use reproduce::ReproduceArgs;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_DOMAIN: i32 = 4;
pub const EXIT_CONVERGENCE: i32 = 5;
pub const EXIT_INCONSISTENCY: i32 = 6;
pub const EXIT_IO: i32 = 7;
pub const EXIT_CHECK_FAILED: i32 = 8;

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "WSPD_OUTPUT_DIR";

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Config => EXIT_CONFIG,
        ErrorClass::Domain => EXIT_DOMAIN,
        ErrorClass::Convergence => EXIT_CONVERGENCE,
        ErrorClass::Inconsistency => EXIT_INCONSISTENCY,
        ErrorClass::Io => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "wspd", version, about = "Waveguide single-photon detector modelling")]
pub struct Cli {
    /// Project configuration (JSON); the shipped default when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the configuration.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    pub output_dir: Option<PathBuf>,
    /// Machine-readable JSON on standard output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the guided modes of the configured cross-section.
    SolveMode(SolveModeArgs),
    /// Absorptance 1 - exp(-alpha L).
    Absorptance(AbsorptanceArgs),
    /// Kinetic inductance, recovery time, count-rate limit and pulse shape.
    Pulse(PulseArgs),
    /// Facet reflectivity and coupling efficiency from Fabry-Perot fringes.
    FpExtract(FpExtractArgs),
    /// SQE/DQE efficiency chain.
    Efficiency(EfficiencyArgs),
    /// Intrinsic jitter by quadrature deconvolution.
    Jitter(JitterArgs),
    /// Simulated photon-counting power sweep.
    Counts(CountsArgs),
    /// Parameter sweep of modal absorption.
    Sweep(SweepArgs),
    /// Maximize modal absorption subject to the alignment margin.
    Optimize(OptimizeArgs),
    /// Run every reference computation and compare with its target band.
    ReproducePaper(ReproduceArgs),
    /// Print the shipped default configuration.
    DefaultConfig,
}

fn load_config(cli: &Cli) -> Result<ProjectConfig> {
    match &cli.config {
        Some(p) => ProjectConfig::load(p),
        None => Ok(ProjectConfig::shipped()),
    }
}

/// Runs a parsed command line; returns the report to print.
pub fn execute(cli: &Cli) -> Result<Report> {
    if let Command::DefaultConfig = cli.command {
        let value: serde_json::Value = serde_json::from_str(config::DEFAULT_CONFIG)?;
        return Ok(Report::ok(value, config::DEFAULT_CONFIG.to_string()));
    }
    let config = load_config(cli)?;
    let dir = cli.output_dir.clone().unwrap_or_else(|| config.output_dir.clone());
    let out = Output::new(dir, config.digest());
    let mut ctx = Context { config, out };
    match &cli.command {
        Command::SolveMode(a) => commands::solve_mode(&mut ctx, a),
        Command::Absorptance(a) => commands::absorptance_cmd(a),
        Command::Pulse(a) => commands::pulse_cmd(&mut ctx, a),
        Command::FpExtract(a) => commands::fp_extract(a),
        Command::Efficiency(a) => commands::efficiency_cmd(a),
        Command::Jitter(a) => commands::jitter_cmd(a),
        Command::Counts(a) => commands::counts_cmd(&mut ctx, a),
        Command::Sweep(a) => commands::sweep_cmd(&mut ctx, a),
        Command::Optimize(a) => commands::optimize_cmd(&mut ctx, a),
        Command::ReproducePaper(a) => reproduce::reproduce(&mut ctx, a),
        Command::DefaultConfig => unreachable!("handled above"),
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(r) => {
            let text = if cli.json { render_json(&r.value) + "\n" } else { r.human };
            print!("{text}");
            r.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
