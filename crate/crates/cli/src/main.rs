//! subwave: simulate dark-state addressing gates, sweep their error laws,
//! fit power laws, and run the platform case studies from the command line.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{CaseStudyContext, RunContext};

/// Errors carry their exit code: 2 config, 3 compute or IO, 4 failed check.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Run(String),
    Check(String),
}

impl CliError {
    pub fn from_core(e: subwave_core::SubwaveError) -> Self {
        CliError::Run(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) => 3,
            CliError::Check(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Run(m) | CliError::Check(m) => m,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config error",
            CliError::Run(_) => "run error",
            CliError::Check(_) => "check failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn wants_json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn wants_csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Parser)]
#[command(name = "subwave", version, about = "Subwavelength addressing gate toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for result files.
    #[arg(long, default_value = "./out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Worker threads for sweeps; defaults to the logical core count.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the integrator's relative tolerance (absolute becomes
    /// rtol * 1e-3).
    #[arg(long)]
    tol_rel: Option<f64>,
    /// Override the config's evolution mode (unitary, lindblad, loss-only).
    #[arg(long)]
    mode: Option<String>,
    /// Enforce the config's acceptance fields; a miss exits with code 4.
    #[arg(long)]
    check: bool,
}

impl RunArgs {
    fn context(&self) -> RunContext {
        RunContext {
            config_path: self.config.clone(),
            out_dir: self.out.clone(),
            format: self.format,
            workers: self.workers,
            tol_rel: self.tol_rel,
            mode: self.mode.clone(),
            check: self.check,
        }
    }
}

#[derive(Args)]
struct CaseStudyArgs {
    /// Preset name: ca40-ion, nv-solid, rb87-lattice.
    #[arg(long)]
    name: String,
    /// Emitter spacing override, nv-solid only.
    #[arg(long)]
    d_meters: Option<f64>,
    #[arg(long, default_value = "./out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Require the computed optimum near the quoted targets; a miss exits
    /// with code 4.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one gate and report its error budget observables.
    Simulate(RunArgs),
    /// Sweep an error quantity over an axis and fit the power law.
    Sweep(RunArgs),
    /// Fit a power law to an existing CSV table.
    Fit(RunArgs),
    /// Optimize a platform preset and compare against its quoted targets.
    CaseStudy(CaseStudyArgs),
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(args) => commands::cmd_simulate(&args.context()),
        Command::Sweep(args) => commands::cmd_sweep(&args.context()),
        Command::Fit(args) => commands::cmd_fit(&args.context()),
        Command::CaseStudy(args) => commands::cmd_case_study(&CaseStudyContext {
            name: args.name.clone(),
            d_meters: args.d_meters,
            out_dir: args.out.clone(),
            format: args.format,
            check: args.check,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("subwave: {}: {}", e.kind(), e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
