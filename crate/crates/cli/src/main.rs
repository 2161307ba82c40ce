mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use frontlab_report::{write_json, ReportError};
use serde_json::json;
use thiserror::Error;

use artifacts::{sha256_hex, Artifacts, InputRecord};
use commands::PlotKind;
use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Output(#[from] ReportError),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Output(_) => "output",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Output(_) => 1,
        }
    }
}

pub fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "frontlab", version, about = "Front speeds in stratified media: sharp and diffuse interface experiments")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Recorded in the manifest; every command is deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Maximal speed and profile of the sharp-interface wave.
    SpeedSharp,
    /// Variational speed and profile of the diffuse wave at the first ε.
    SpeedDiffuse,
    /// Diffuse speeds and level sets over the ε list, against the sharp limit.
    Sweep,
    /// Verdicts on the structural assumptions of the forcing and well.
    CheckAssumptions,
    /// Long-time relaxation of an initial front to the wave.
    Simulate,
    /// Density estimates of the diffuse wave near its interface.
    DensityAudit,
    /// SVG chart of a CSV produced by another command.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "line")]
        kind: PlotKind,
        /// Abscissa column.
        #[arg(long)]
        x: Option<String>,
        /// Ordinate columns.
        #[arg(long)]
        y: Vec<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SpeedSharp => "speed-sharp",
            Command::SpeedDiffuse => "speed-diffuse",
            Command::Sweep => "sweep",
            Command::CheckAssumptions => "check-assumptions",
            Command::Simulate => "simulate",
            Command::DensityAudit => "density-audit",
            Command::Plot { .. } => "plot",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.workers == 0 {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build_global()
        .map_err(numerical)?;
    let mut out = Artifacts::new(&cli.out);
    if let Command::Plot { input, kind, x, y } = &cli.command {
        let bytes = std::fs::read(input).map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
        commands::plot(input, *kind, x.as_deref(), y, &mut out)?;
        let record = InputRecord {
            role: "table",
            path: input.display().to_string(),
            sha256: sha256_hex(&bytes),
        };
        out.finish("plot.manifest.json", "plot", vec![record], cli.seed)?;
    } else {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("{} needs --config", cli.command.name())))?;
        let (cfg, bytes) = ExperimentConfig::load(path)?;
        let record = InputRecord {
            role: "config",
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        };
        match cli.command {
            Command::SpeedSharp => commands::speed_sharp(&cfg, &mut out)?,
            Command::SpeedDiffuse => commands::speed_diffuse(&cfg, &mut out)?,
            Command::Sweep => commands::sweep(&cfg, cli.workers, &mut out)?,
            Command::CheckAssumptions => commands::check_assumptions(&cfg, &mut out)?,
            Command::Simulate => commands::simulate(&cfg, &mut out)?,
            Command::DensityAudit => commands::density_audit(&cfg, &mut out)?,
            Command::Plot { .. } => unreachable!(),
        }
        out.finish("manifest.json", cli.command.name(), vec![record], cli.seed)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let record = json!({
                "command": cli.command.name(),
                "kind": e.kind(),
                "exit_code": e.exit_code(),
                "message": e.to_string(),
            });
            if let Err(w) = write_json(&cli.out.join("error.json"), &record) {
                eprintln!("error: could not write the error record: {w}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
