//! Command-line front end for the DRAG readout simulator.

mod commands;
mod failure;
mod run_config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "drag-readout",
    version,
    about = "Simulate DRAG-shaped dispersive readout pulses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone, Debug, Default)]
pub struct Common {
    /// Strict JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named preset instead of a config file.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory (default: out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the noise seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the probe envelope with and without DRAG.
    Waveform,
    /// Spectra of both pulses and the notch depth.
    Spectrum,
    /// Paired Ramsey plateau scans and fitted decay constants.
    Ramsey,
    /// Excited-population maps over amplitude and detuning.
    DephasingMap,
    /// Dephasing crosstalk matrix of a frequency plan.
    Crosstalk {
        /// Pick one notch per pulse greedily before reporting.
        #[arg(long)]
        select_notches: bool,
    },
    /// Run the built-in acceptance suite.
    Selftest,
    /// List the available presets.
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = &cli.common;
    let result = match cli.command {
        Command::Waveform => commands::waveform(c),
        Command::Spectrum => commands::spectrum(c),
        Command::Ramsey => commands::ramsey(c),
        Command::DephasingMap => commands::dephasing_map(c),
        Command::Crosstalk { select_notches } => commands::crosstalk(c, select_notches),
        Command::Selftest => commands::selftest(c),
        Command::Presets => commands::presets(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
