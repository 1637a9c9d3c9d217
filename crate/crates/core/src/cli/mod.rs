//! The `decolab` command-line tool.
//!
//! Exit status: 0 on success, 1 on usage or parse errors, 2 when a fit does
//! not converge.

mod commands;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{Format, RunConfig};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "decolab",
    version,
    about = "Decoherence by photon scattering: curves, simulation, fitting"
)]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write results here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// |β_total| and phase versus separation for a photon-number distribution.
    BetaCurve(BetaCurveArgs),
    /// Contrast versus mean photon number at fixed separations.
    ContrastVsN(ContrastVsNArgs),
    /// Monte Carlo phase-diffusion ensemble.
    Simulate(SimulateArgs),
    /// Fit a curve file.
    Fit(FitArgs),
    /// Dephasing master equation on a position grid.
    MasterEq(MasterEqArgs),
}

/// Photon-number distribution, exactly one of these.
#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct PnArgs {
    /// Poisson statistics with mean NBAR.
    #[arg(long, value_name = "NBAR")]
    pub poisson: Option<f64>,
    /// Truncated Gaussian with mean NBAR and width SIGMA_N.
    #[arg(long, num_args = 2, value_names = ["NBAR", "SIGMA_N"], allow_negative_numbers = true)]
    pub gaussian: Option<Vec<f64>>,
    /// Exactly one scattered photon.
    #[arg(long)]
    pub single_photon: bool,
    /// Exactly N scattered photons.
    #[arg(long, value_name = "N")]
    pub fixed: Option<usize>,
    /// Simulate the counts of atoms crossing the configured beam.
    #[arg(long)]
    pub beam: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BetaCurveArgs {
    #[command(flatten)]
    pub pn: PnArgs,
    /// Largest separation, in wavelengths.
    #[arg(long, default_value_t = 1.4)]
    pub dmax: f64,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Detector momentum acceptance (units of k₀); selects the Gaussian limit.
    #[arg(long)]
    pub kappa_d: Option<f64>,
    /// Use the Gaussian many-photon form even without a detector restriction.
    #[arg(long)]
    pub gaussian_limit: bool,
    /// Value written to the contrast_err column.
    #[arg(long, default_value_t = 0.01)]
    pub contrast_err: f64,
    /// Standard deviation of Gaussian noise added to the contrast.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Atoms drawn when --beam is used.
    #[arg(long, default_value_t = 1_000_000)]
    pub beam_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContrastModel {
    /// Gaussian many-photon form with κ′.
    GaussianLimit,
    /// Exact sum over Poisson photon numbers.
    Exact,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ContrastVsNArgs {
    /// Separations in wavelengths, comma separated.
    #[arg(long = "d", value_delimiter = ',', required = true, num_args = 1..)]
    pub d: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    pub nbar_max: f64,
    #[arg(long, default_value_t = 51)]
    pub points: usize,
    /// Fixed photon-number spread; Poisson (√n̄) when absent.
    #[arg(long)]
    pub sigma_n: Option<f64>,
    #[arg(long)]
    pub kappa_d: Option<f64>,
    #[arg(long, value_enum, default_value_t = ContrastModel::GaussianLimit)]
    pub model: ContrastModel,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub pn: PnArgs,
    #[arg(long, default_value_t = 1.4)]
    pub dmax: f64,
    #[arg(long, default_value_t = 15)]
    pub points: usize,
    /// Explicit separations, overriding --dmax/--points.
    #[arg(long = "d", value_delimiter = ',', num_args = 1..)]
    pub d: Option<Vec<f64>>,
    #[arg(long)]
    pub atoms: Option<usize>,
    #[arg(long)]
    pub kappa_d: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub beam_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    /// |β_total| with truncated-Gaussian photon statistics: n_bar, sigma_n.
    Decoherence,
    /// Gaussian contrast decay: kappa_prime.
    Gaussian,
    /// Linear phase slope.
    Phase,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = FitModel::Decoherence)]
    pub model: FitModel,
    #[arg(long)]
    pub nbar0: Option<f64>,
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long)]
    pub kappa0: Option<f64>,
    /// Fit the contrast normalization C₀ in the Gaussian model.
    #[arg(long)]
    pub free_amplitude: bool,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Exponential,
    Rk4,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MasterEqArgs {
    /// Diffusion constant D, units of k₀/√time.
    #[arg(long, default_value_t = 0.2)]
    pub diffusion: f64,
    #[arg(long, default_value_t = 1.0)]
    pub time: f64,
    /// Grid size.
    #[arg(long, default_value_t = 65, allow_negative_numbers = true)]
    pub points: i64,
    /// Grid extent in wavelengths.
    #[arg(long, default_value_t = 2.0)]
    pub extent: f64,
    /// Peak separation of the initial state, in wavelengths.
    #[arg(long, default_value_t = 0.5)]
    pub separation: f64,
    /// rms width of each peak, in wavelengths.
    #[arg(long, default_value_t = 0.05)]
    pub width: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = Scheme::Exponential)]
    pub scheme: Scheme,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    NotConverged(String),
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// What a command produced.
pub struct Report {
    pub text: String,
    pub converged: bool,
}

/// Command-line settings merged over the configuration file.
pub struct Context {
    pub config: RunConfig,
    pub format: Format,
}

fn build_context(cli: &Cli, default_format: Format) -> Result<Context, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.simulation.seed = seed;
    }
    if let Some(path) = &cli.output {
        config.output.path = Some(path.clone());
    }
    let format = cli
        .format
        .or_else(|| cli.config.as_ref().map(|_| config.output.format));
    let format = format.unwrap_or(default_format);
    config.output.format = format;
    Ok(Context { config, format })
}

fn write_output(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

/// Parses `args` and runs the command. Returns the process exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let default_format = match cli.command {
        Command::Fit(_) => Format::Json,
        _ => Format::Csv,
    };
    let result = build_context(&cli, default_format).and_then(|mut ctx| {
        let report = match &cli.command {
            Command::BetaCurve(a) => commands::beta_curve(&mut ctx, a),
            Command::ContrastVsN(a) => commands::contrast_vs_n(&mut ctx, a),
            Command::Simulate(a) => commands::simulate(&mut ctx, a),
            Command::Fit(a) => commands::fit(&mut ctx, a),
            Command::MasterEq(a) => commands::master_eq(&mut ctx, a),
        }?;
        write_output(&report.text, ctx.config.output.path.as_deref())
            .map_err(|e| CliError::Usage(format!("cannot write output: {e}")))?;
        if report.converged {
            Ok(())
        } else {
            Err(CliError::NotConverged("fit did not converge".into()))
        }
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            EXIT_NOT_CONVERGED
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("DECOLAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

pub fn main() -> ExitCode {
    configure_threads();
    ExitCode::from(run(std::env::args_os()))
}
