use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod table;

use config::{
    ClassifyBlock, CompareBlock, IntegrateBlock, OutputBlock, PortraitBlock, QubitBlock, RunConfig, SetupBlock,
    SweepBlock, SystemBlock,
};

#[derive(Debug, Parser)]
#[command(name = "ring-ladder", version, about = "Two-ring condensate dynamics and qubit landscape")]
struct Cli {
    /// JSON config file; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps (default: logical cores).
    #[arg(long, global = true, env = "RING_LADDER_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the two-mode equations and write the trajectory.
    Simulate(Simulate),
    /// Classify the regime of one initial condition.
    Classify(Classify),
    /// Compare analytic solutions with the integrator.
    Compare(Compare),
    /// Phase-portrait curves for a list of initial imbalances.
    Portrait(Portrait),
    /// Two-angle qubit potential, its minima and barriers.
    Landscape(Landscape),
    /// Classify along a one-parameter grid.
    Sweep(Sweep),
    /// Ring spacing and reduced parameters from the optical setup.
    SetupParams(SetupParams),
}

#[derive(Debug, Args)]
struct Simulate {
    #[command(flatten)]
    system: SystemBlock,
    #[command(flatten)]
    integrate: IntegrateBlock,
    #[command(flatten)]
    output: OutputBlock,
}

#[derive(Debug, Args)]
struct Classify {
    #[command(flatten)]
    system: SystemBlock,
    #[command(flatten)]
    classify: ClassifyBlock,
    #[command(flatten)]
    output: OutputBlock,
}

#[derive(Debug, Args)]
struct Compare {
    #[command(flatten)]
    system: SystemBlock,
    #[command(flatten)]
    classify: ClassifyBlock,
    #[command(flatten)]
    integrate: IntegrateBlock,
    #[command(flatten)]
    thresholds: CompareBlock,
    /// Run every branch representative and extra case.
    #[arg(long)]
    matrix: bool,
    /// Debug: use the square-root-free elliptic parameter (expected to fail).
    #[arg(long)]
    printed_modulus: bool,
    #[command(flatten)]
    output: OutputBlock,
}

#[derive(Debug, Args)]
struct Portrait {
    #[command(flatten)]
    system: SystemBlock,
    #[command(flatten)]
    portrait: PortraitBlock,
    #[command(flatten)]
    output: OutputBlock,
}

#[derive(Debug, Args)]
struct Landscape {
    #[command(flatten)]
    qubit: QubitBlock,
    /// Also write the minima and barriers as JSON to this file.
    #[arg(long)]
    minima: Option<PathBuf>,
    #[command(flatten)]
    output: OutputBlock,
}

#[derive(Debug, Args)]
struct Sweep {
    #[command(flatten)]
    system: SystemBlock,
    #[command(flatten)]
    classify: ClassifyBlock,
    #[command(flatten)]
    sweep: SweepBlock,
    #[command(flatten)]
    output: OutputBlock,
}

#[derive(Debug, Args)]
struct SetupParams {
    #[command(flatten)]
    setup: SetupBlock,
    #[command(flatten)]
    output: OutputBlock,
}

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum Failure {
    Config(Vec<String>),
    Runtime(String),
    Verification(String),
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure::Config(vec![msg.into()])
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
            Failure::Verification(_) => 4,
        }
    }
}

impl From<ring_ladder::Error> for Failure {
    fn from(e: ring_ladder::Error) -> Self {
        match e {
            ring_ladder::Error::Domain { .. } => Failure::config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

/// Writes to the configured path or standard output.
pub fn emit(output: &OutputBlock, text: &str) -> Result<(), Failure> {
    match &output.path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(Failure::Runtime(format!("cannot write output: {e}")))
                }
                _ => Ok(()),
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let jobs = cli.jobs.or(cfg.jobs);
    match cli.command {
        Command::Simulate(a) => commands::simulate(
            a.system.overlay_from(&cfg.system),
            a.integrate.overlay_from(&cfg.integrate),
            a.output.overlay_from(&cfg.output),
        ),
        Command::Classify(a) => commands::classify(
            a.system.overlay_from(&cfg.system),
            a.classify.overlay_from(&cfg.classify),
            a.output.overlay_from(&cfg.output),
        ),
        Command::Compare(a) => commands::compare(
            a.system.overlay_from(&cfg.system),
            a.classify.overlay_from(&cfg.classify),
            a.integrate.overlay_from(&cfg.integrate),
            a.thresholds.overlay_from(&cfg.compare),
            a.matrix,
            a.printed_modulus,
            a.output.overlay_from(&cfg.output),
        ),
        Command::Portrait(a) => commands::portrait(
            a.system.overlay_from(&cfg.system),
            a.portrait.overlay_from(&cfg.portrait),
            a.output.overlay_from(&cfg.output),
        ),
        Command::Landscape(a) => commands::landscape(
            a.qubit.overlay_from(&cfg.qubit),
            a.minima,
            a.output.overlay_from(&cfg.output),
        ),
        Command::Sweep(a) => commands::sweep(
            a.system.overlay_from(&cfg.system),
            a.classify.overlay_from(&cfg.classify),
            a.sweep.overlay_from(&cfg.sweep),
            jobs,
            a.output.overlay_from(&cfg.output),
        ),
        Command::SetupParams(a) => commands::setup_params(
            a.setup.overlay_from(&cfg.setup),
            cfg.micro,
            a.output.overlay_from(&cfg.output),
        ),
    }
}

trait OverlayFrom: config::Overlay + Clone {
    fn overlay_from(self, file: &Self) -> Self {
        self.overlay(file.clone())
    }
}

impl<T: config::Overlay + Clone> OverlayFrom for T {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(list) => {
                    eprintln!("error: invalid configuration");
                    for v in list {
                        eprintln!("  - {v}");
                    }
                }
                Failure::Runtime(msg) => eprintln!("error: {msg}"),
                Failure::Verification(msg) => eprintln!("verification failed: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}
