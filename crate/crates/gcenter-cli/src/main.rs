//! `gcenter`: simulation and analysis toolkit for the rotational
//! photophysics of the silicon G center.
//!
//! Every subcommand writes its artifacts (CSV/JSON/SVG) plus a
//! `manifest.json` with SHA-256 checksums into the output directory, prints
//! the JSON report to stdout, and exits 0. Failures print a JSON error object
//! to stderr and exit with a code identifying the failure class: 2 usage,
//! 3 io, 4 input schema, 5 numerical.

mod commands;
mod error;
mod io;
mod svg;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use commands::*;
use error::{AppError, AppResult};
use io::ArtifactSet;

#[derive(Parser)]
#[command(name = "gcenter", version, about = "G-center rotational photophysics toolkit")]
struct Cli {
    /// Output directory for artifacts (default: $GCENTER_OUT or ./gcenter-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Load all command parameters from a JSON file, ignoring parameter flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the effective parameters as JSON (reloadable via --config).
    #[arg(long = "emit-config", global = true)]
    emit_config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rotational fine-structure quartet of an unperturbed emitter.
    Quartet(QuartetParams),
    /// Solve the sixfold rotational potential on a ring grid.
    Pes(PesParams),
    /// Polarization emission diagram for a set of occupied sites.
    Diagram(DiagramParams),
    /// Broadened zero-phonon-line spectrum of a site-energy model.
    Spectrum(SpectrumParams),
    /// Distinct ensemble lines under uniaxial strain.
    Ensemble(EnsembleParams),
    /// Monte Carlo photon stream: site statistics and accumulated spectrum.
    Roulette(RouletteParams),
    /// Photon-stream second-order correlation histogram.
    G2(G2Params),
    /// Infer the site partition from polarization-resolved spectra.
    Classify(ClassifyParams),
    /// Calibrate the kinetic scale to a target tunneling splitting.
    Calibrate(CalibrateParams),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Quartet(_) => "quartet",
            Command::Pes(_) => "pes",
            Command::Diagram(_) => "diagram",
            Command::Spectrum(_) => "spectrum",
            Command::Ensemble(_) => "ensemble",
            Command::Roulette(_) => "roulette",
            Command::G2(_) => "g2",
            Command::Classify(_) => "classify",
            Command::Calibrate(_) => "calibrate",
        }
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| {
        std::env::var_os("GCENTER_OUT")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("gcenter-out"))
    })
}

/// Resolve parameters (flags vs --config), optionally emit them, run the
/// command, and write the manifest.
fn execute<P, F>(cli: &Cli, cli_params: &P, run: F) -> AppResult<serde_json::Value>
where
    P: Serialize + DeserializeOwned + Clone,
    F: FnOnce(&P, &mut ArtifactSet) -> AppResult<serde_json::Value>,
{
    let params: P = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| AppError::Schema(format!("{}: {e}", path.display())))?
        }
        None => cli_params.clone(),
    };
    let config_json = serde_json::to_value(&params)?;
    if let Some(path) = &cli.emit_config {
        fs::write(path, format!("{:#}\n", config_json))
            .map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
    }
    let mut arts = ArtifactSet::new(&out_dir(cli))?;
    let report = run(&params, &mut arts)?;
    arts.finish(cli.command.name(), config_json)?;
    Ok(report)
}

fn dispatch(cli: &Cli) -> AppResult<serde_json::Value> {
    match &cli.command {
        Command::Quartet(p) => execute(cli, p, run_quartet),
        Command::Pes(p) => execute(cli, p, run_pes),
        Command::Diagram(p) => execute(cli, p, run_diagram),
        Command::Spectrum(p) => execute(cli, p, run_spectrum),
        Command::Ensemble(p) => execute(cli, p, run_ensemble),
        Command::Roulette(p) => execute(cli, p, run_roulette),
        Command::G2(p) => execute(cli, p, run_g2),
        Command::Classify(p) => execute(cli, p, run_classify),
        Command::Calibrate(p) => execute(cli, p, run_calibrate),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let err = AppError::Usage(e.to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match dispatch(&cli) {
        Ok(report) => {
            println!("{report:#}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
