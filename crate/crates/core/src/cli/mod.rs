//! The `dascusum` command-line front end.
//!
//! ```text
//! dascusum detect   [INPUT] [--detector das] [--threshold B] [--window W] ...
//! dascusum tune     --arl GAMMA --sym-div S [--window W | --w-floor F --w-max M] [--tsv]
//! dascusum simulate --study {calibration|point} [--trials N] [--seed S] ...
//! dascusum curve    --study {window|threshold} [--windows 5:60] [--thresholds 0.6,0.8] ...
//! ```
//!
//! Every option can also come from a `key=value` file given with `--config`;
//! flags win over the file. [`run`] takes explicit streams so the whole front
//! end can be driven from tests.

mod commands;
pub mod config;
pub mod io;

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::detectors::DetectorKind;
use crate::error::{Error, Result};
pub use config::ConfigFile;
pub use io::{fmt_num, ingest_csv};

#[derive(Debug, Parser)]
#[command(name = "dascusum", version, about = "Symmetric data-adaptive CUSUM change detection")]
pub struct Cli {
    /// key=value configuration file; command-line flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a detector over an `index,value` CSV stream and list the changes
    Detect(DetectArgs),
    /// Window, drift and threshold for a target run length
    Tune(TuneArgs),
    /// Monte Carlo run-length estimates
    Simulate(StudyArgs),
    /// Plot-ready delay curves
    Curve(StudyArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct DetectorArgs {
    /// cusum, adaptive, glr or das
    #[arg(long)]
    pub detector: Option<DetectorKind>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub drift: Option<f64>,
    /// Target average run length used for default threshold and drift
    #[arg(long)]
    pub arl: Option<f64>,
    /// Smallest symmetric KL divergence worth detecting
    #[arg(long = "sym-div")]
    pub sym_div: Option<f64>,
    #[arg(long = "glr-lookback")]
    pub glr_lookback: Option<usize>,
    #[arg(long = "glr-min-segment")]
    pub glr_min_segment: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mean0: Option<f64>,
    #[arg(long)]
    pub var0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mean1: Option<f64>,
    #[arg(long)]
    pub var1: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    /// CSV file; standard input when omitted or `-`
    pub input: Option<PathBuf>,
    /// Write the change-point CSV here instead of standard output
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub arl: Option<f64>,
    #[arg(long = "sym-div")]
    pub sym_div: Option<f64>,
    /// Fix the window instead of searching for the best one
    #[arg(long)]
    pub window: Option<usize>,
    /// Override the equivalence factor
    #[arg(long)]
    pub delta0: Option<f64>,
    #[arg(long = "w-floor")]
    pub w_floor: Option<usize>,
    #[arg(long = "w-max")]
    pub w_max: Option<usize>,
    /// Tab-separated key/value output
    #[arg(long)]
    pub tsv: bool,
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    /// simulate: calibration | point; curve: window | threshold
    #[arg(long)]
    pub study: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma list or inclusive range `lo:hi`
    #[arg(long)]
    pub windows: Option<String>,
    /// Comma list
    #[arg(long, allow_hyphen_values = true)]
    pub thresholds: Option<String>,
    /// Comma list of target run lengths
    #[arg(long)]
    pub arls: Option<String>,
    /// Censoring horizon for run-length trials
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[command(flatten)]
    pub params: ParamArgs,
}

/// Parse `args` (including the program name) and execute the command.
/// Help and version output go to `stdout` and count as success.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            write!(stdout, "{}", e.render())?;
            return Ok(());
        }
        Err(e) => {
            let msg = e.render().to_string();
            return Err(Error::Usage(msg.trim_start_matches("error: ").trim_end().to_string()));
        }
    };
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match &cli.command {
        Command::Detect(a) => commands::detect(a, &cfg, stdin, stdout, stderr),
        Command::Tune(a) => commands::tune(a, &cfg, stdout),
        Command::Simulate(a) => commands::simulate(a, &cfg, stdout, stderr),
        Command::Curve(a) => commands::curve(a, &cfg, stdout, stderr),
    }
}

/// Process exit status for an error: 2 for usage problems, 1 otherwise.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Usage(_) => 2,
        _ => 1,
    }
}
