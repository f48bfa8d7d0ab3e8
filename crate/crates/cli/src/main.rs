//! Command-line front end for the phase-transport laboratory.
//!
//! Subcommands reproduce the reconstruction experiments end to end: beam
//! generation, TIE solves under a catalog of boundary conditions,
//! characteristic tracing, viscosity marching, the hybrid pipeline, and
//! plot-ready reporting. Every run writes a `manifest.json`, failures
//! included, so experiments stay auditable.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::manifest::RunManifest;

/// Exit codes: 0 success, 2 invalid configuration, 3 solver failure, 4 I/O.
#[derive(Debug)]
pub enum AppError {
    InvalidConfig(String),
    Solver(String),
    Io(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::InvalidConfig(_) => 2,
            AppError::Solver(_) => 3,
            AppError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::InvalidConfig(m) | AppError::Solver(m) | AppError::Io(m) => m,
        }
    }
}

impl From<phaselab::FieldError> for AppError {
    fn from(e: phaselab::FieldError) -> Self {
        use phaselab::FieldError::*;
        match e {
            Io { .. } | Malformed { .. } => AppError::Io(e.to_string()),
            _ => AppError::InvalidConfig(e.to_string()),
        }
    }
}

impl From<phaselab::TieError> for AppError {
    fn from(e: phaselab::TieError) -> Self {
        match e {
            phaselab::TieError::NotConverged { .. } => AppError::Solver(e.to_string()),
            phaselab::TieError::Field(f) => f.into(),
            _ => AppError::InvalidConfig(e.to_string()),
        }
    }
}

impl From<phaselab::MarchError> for AppError {
    fn from(e: phaselab::MarchError) -> Self {
        use phaselab::MarchError::*;
        match e {
            NotConverged { .. } | StepRejected { .. } | NonPositivePsi(_) => {
                AppError::Solver(e.to_string())
            }
            Field(f) => f.into(),
            _ => AppError::InvalidConfig(e.to_string()),
        }
    }
}

impl From<phaselab::TpeError> for AppError {
    fn from(e: phaselab::TpeError) -> Self {
        match e {
            phaselab::TpeError::Field(f) => f.into(),
            _ => AppError::InvalidConfig(e.to_string()),
        }
    }
}

impl From<phaselab::viscosity::HybridError> for AppError {
    fn from(e: phaselab::viscosity::HybridError) -> Self {
        match e {
            phaselab::viscosity::HybridError::Tie(t) => t.into(),
            phaselab::viscosity::HybridError::March(m) => m.into(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "phaselab",
    version,
    about = "Phase retrieval from intensity transport: TIE and TPE experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an analytic beam: writes I.fld and phi.fld (stacks with --zlist)
    Beam(commands::beam::BeamCmd),
    /// Reconstruct a phase slice by solving the transport of intensity equation
    Tie(commands::tie::TieCmd),
    /// Trace characteristic curves of the transport of phase equation
    #[command(name = "tpe-char")]
    TpeChar(commands::tpe_char::TpeCharCmd),
    /// March the viscosity-regularized phase equation in z
    #[command(name = "tpe-visc")]
    TpeVisc(commands::tpe_visc::TpeViscCmd),
    /// TIE slice reconstruction followed by a viscosity march
    Hybrid(commands::hybrid::HybridCmd),
    /// Plot-ready CSV exports, error summaries, convergence tables
    Report(commands::report::ReportCmd),
}

/// Flags shared by every subcommand.
#[derive(Args, Debug)]
pub struct CommonOpts {
    /// Output directory (default phaselab-out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Nodes per grid side (default 129)
    #[arg(long)]
    grid: Option<usize>,
    /// Domain as xmin,xmax,ymin,ymax (default 0,1,0,1)
    #[arg(long)]
    domain: Option<String>,
    /// Relative solver tolerance (default 1e-10)
    #[arg(long)]
    tol: Option<f64>,
    /// Optional key = value config file; flags win over file entries
    #[arg(long)]
    config: Option<PathBuf>,
}

impl CommonOpts {
    /// Output directory before the config file is consulted; used when a
    /// command fails so early that resolution never happened.
    pub fn fallback_out(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from("phaselab-out"))
    }
}

/// Shared mutable state while a command runs.
pub struct Context {
    pub manifest: RunManifest,
    pub out: Option<PathBuf>,
    pub started: Instant,
}

impl Context {
    fn new(command: &str) -> Self {
        Self {
            manifest: RunManifest::new(command),
            out: None,
            started: Instant::now(),
        }
    }

    fn out_dir(&mut self) -> Result<PathBuf, AppError> {
        let dir = self
            .out
            .clone()
            .ok_or_else(|| AppError::InvalidConfig("output directory not resolved".into()))?;
        std::fs::create_dir_all(&dir)
            .map_err(|e| AppError::Io(format!("creating {}: {e}", dir.display())))?;
        Ok(dir)
    }

    /// Write a field under the output directory and record it.
    pub fn write_field(
        &mut self,
        name: &str,
        field: &phaselab::ScalarField2D,
    ) -> Result<(), AppError> {
        let dir = self.out_dir()?;
        field.write_fld(dir.join(name)).map_err(AppError::from)?;
        self.manifest.add_file(name);
        Ok(())
    }

    /// Write a text artifact under the output directory and record it.
    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), AppError> {
        let dir = self.out_dir()?;
        std::fs::write(dir.join(name), text)
            .map_err(|e| AppError::Io(format!("writing {name}: {e}")))?;
        self.manifest.add_file(name);
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, fallback_out, result, mut ctx) = match cli.command {
        Command::Beam(cmd) => run_one("beam", cmd.common.fallback_out(), |ctx| cmd.run(ctx)),
        Command::Tie(cmd) => run_one("tie", cmd.common.fallback_out(), |ctx| cmd.run(ctx)),
        Command::TpeChar(cmd) => run_one("tpe-char", cmd.common.fallback_out(), |ctx| cmd.run(ctx)),
        Command::TpeVisc(cmd) => run_one("tpe-visc", cmd.common.fallback_out(), |ctx| cmd.run(ctx)),
        Command::Hybrid(cmd) => run_one("hybrid", cmd.common.fallback_out(), |ctx| cmd.run(ctx)),
        Command::Report(cmd) => run_one("report", cmd.common.fallback_out(), |ctx| cmd.run(ctx)),
    };

    let code = match &result {
        Ok(()) => 0u8,
        Err(e) => {
            eprintln!("phaselab {name}: error: {}", e.message());
            ctx.manifest.error = Some(e.message().to_string());
            e.exit_code()
        }
    };
    // The manifest is written even on failure so the run stays auditable.
    let out = ctx.out.clone().unwrap_or(fallback_out);
    let started = ctx.started;
    if let Err(e) = ctx.manifest.write(&out, started) {
        eprintln!("phaselab {name}: could not write manifest: {}", e.message());
        if code == 0 {
            return ExitCode::from(e.exit_code());
        }
    }
    ExitCode::from(code)
}

type RunOutcome = (&'static str, PathBuf, Result<(), AppError>, Context);

fn run_one(
    name: &'static str,
    fallback_out: PathBuf,
    f: impl FnOnce(&mut Context) -> Result<(), AppError>,
) -> RunOutcome {
    let mut ctx = Context::new(name);
    let result = f(&mut ctx);
    (name, fallback_out, result, ctx)
}
