//! Command-line front end for the SiV spectroscopy models: simulations to
//! CSV/JSON/SVG and fits to JSON.

pub mod config;
pub mod error;
pub mod fitcmd;
pub mod output;
pub mod simulate;
pub mod svg;
pub mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{Format, Simulation};
use error::{EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK};
use fitcmd::{parse_assignment, parse_bound, FitArgs, FitModel};
use simulate::SimulateArgs;

#[derive(Debug, Parser)]
#[command(name = "sivspec", version, about = "Silicon-vacancy ensemble spectroscopy: simulate and fit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation described by a config file.
    Simulate {
        #[arg(value_enum)]
        what: Simulation,
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Also write an SVG per data file.
        #[arg(long)]
        plot: bool,
        /// Overrides noise.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit a model to a spectrum or a point table.
    Fit {
        #[arg(value_enum)]
        model: FitModel,
        #[arg(long = "in")]
        input: PathBuf,
        /// Result JSON path (an SVG with --plot goes next to it).
        #[arg(long)]
        out: PathBuf,
        /// Starting value, name=value.
        #[arg(long, value_parser = parse_assignment)]
        init: Vec<(String, f64)>,
        /// Fixed value, name=value.
        #[arg(long, value_parser = parse_assignment)]
        fix: Vec<(String, f64)>,
        /// Bounds, name=lo,hi.
        #[arg(long, value_parser = parse_bound)]
        bound: Vec<(String, (f64, f64))>,
        /// Zero-based data row indices to leave out.
        #[arg(long, num_args = 1..)]
        exclude: Vec<usize>,
        /// Number of Voigt components for multipeak.
        #[arg(long, default_value_t = 4)]
        peaks: usize,
        /// Powers of T for tpoly, comma separated from {1, 3, 5, 7}.
        #[arg(long, value_delimiter = ',', default_value = "3")]
        terms: Vec<u32>,
        /// Temperature for the phonon model, K.
        #[arg(long)]
        temperature: Option<f64>,
        /// Config with a [strain] section supplying the phonon temperature.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Add a constant offset to the phonon model.
        #[arg(long)]
        with_offset: bool,
        #[arg(long)]
        plot: bool,
    },
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Simulate { what, config, out, format, plot, seed } => {
            match simulate::simulate(&SimulateArgs { what, config, out, format, plot, seed }) {
                Ok(report) => {
                    for w in &report.warnings {
                        eprintln!("warning: {w}");
                    }
                    for f in &report.files {
                        println!("{f}");
                    }
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::Fit { model, input, out, init, fix, bound, exclude, peaks, terms, temperature, config, with_offset, plot } => {
            let args = FitArgs { model, input, out, init, fix, bound, exclude, peaks, terms, temperature, config, with_offset, plot };
            match fitcmd::fit(&args) {
                Ok(r) if r.converged => EXIT_OK,
                Ok(r) => {
                    eprintln!("warning: fit did not converge: {}", r.diagnostic.as_deref().unwrap_or("no diagnostic"));
                    EXIT_NOT_CONVERGED
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
    }
}
