//! Batch driver for the `qdyn` experiments: configuration, seeding and
//! CSV/JSON result files.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Overrides, RunConfig};
pub use error::{CliError, CliResult};
use output::{csv_bytes, json_bytes, write_atomic, Meta};

#[derive(Debug, Parser)]
#[command(name = "qdyn", version, about = "Fermionic chain dynamics experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Shots per sampled circuit (default 10000).
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    /// Device calibration TOML (default: bundled 7-qubit H device).
    #[arg(long, global = true)]
    pub device: Option<PathBuf>,
    /// Output directory (default: out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Sample with the device noise model.
    #[arg(long, global = true)]
    pub noise: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Site occupations versus time for each Trotter step count.
    TrotterSweep,
    /// Gate counts, estimated fidelity and duration per pipeline and step count.
    FidelityReport,
    /// Ranked chain placements on the device.
    Layout,
    /// Readout mitigation of a sampled GHZ state.
    GhzMitigate,
    /// Eigenvalue spectrum from the FFT of the return amplitude.
    Spectrum,
    /// Probe-qubit spectroscopy sweep.
    Spectroscopy,
    /// Slater determinant of the lowest chain orbitals.
    SlaterPrep,
    /// Truncated-Taylor LCU evolution.
    LcuEvolve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::TrotterSweep => "trotter-sweep",
            Command::FidelityReport => "fidelity-report",
            Command::Layout => "layout",
            Command::GhzMitigate => "ghz-mitigate",
            Command::Spectrum => "spectrum",
            Command::Spectroscopy => "spectroscopy",
            Command::SlaterPrep => "slater-prep",
            Command::LcuEvolve => "lcu-evolve",
        }
    }
}

/// Resolves the configuration (file, then flags) and validates it.
pub fn resolve_config(common: &CommonArgs) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&Overrides {
        seed: common.seed,
        shots: common.shots,
        device: common.device.clone(),
        out: common.out.clone(),
        workers: common.workers,
        noise: common.noise,
    });
    cfg.validate()?;
    Ok(cfg)
}

/// Runs `command` and returns the files written.
pub fn execute(command: Command, cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        pool = pool.num_threads(w);
    }
    pool.build()?.install(|| dispatch(command, cfg))
}

fn dispatch(command: Command, cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let name = command.name();
    let meta = Meta::new(name, cfg.hash(name), cfg.seed);
    let dir = &cfg.out;
    let written = match command {
        Command::TrotterSweep => {
            vec![write_atomic(
                dir,
                "trotter_sweep.csv",
                &csv_bytes(&meta, &commands::trotter_sweep(cfg)?)?,
            )?]
        }
        Command::FidelityReport => {
            vec![write_atomic(
                dir,
                "fidelity_report.csv",
                &csv_bytes(&meta, &commands::fidelity_rows(cfg)?)?,
            )?]
        }
        Command::Layout => vec![write_atomic(
            dir,
            "layouts.csv",
            &csv_bytes(&meta, &commands::layout_rows(cfg)?)?,
        )?],
        Command::GhzMitigate => {
            vec![write_atomic(
                dir,
                "ghz_mitigate.json",
                &json_bytes(&meta, &commands::ghz_report(cfg)?)?,
            )?]
        }
        Command::Spectrum => {
            let (rows, peaks) = commands::spectrum(cfg)?;
            vec![
                write_atomic(dir, "spectrum.csv", &csv_bytes(&meta, &rows)?)?,
                write_atomic(dir, "spectrum_peaks.json", &json_bytes(&meta, &peaks)?)?,
            ]
        }
        Command::Spectroscopy => {
            vec![write_atomic(
                dir,
                "spectroscopy.csv",
                &csv_bytes(&meta, &commands::spectroscopy_rows(cfg)?)?,
            )?]
        }
        Command::SlaterPrep => {
            let (rows, _) = commands::slater_rows(cfg)?;
            vec![write_atomic(
                dir,
                "slater_prep.csv",
                &csv_bytes(&meta, &rows)?,
            )?]
        }
        Command::LcuEvolve => {
            vec![write_atomic(
                dir,
                "lcu_evolve.json",
                &json_bytes(&meta, &commands::lcu_report(cfg)?)?,
            )?]
        }
    };
    Ok(written)
}
