//! `superdir` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod commands;
mod error;
mod format;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "superdir", version, about = "Superdirective beamforming for compact uniform linear arrays")]
struct Cli {
    /// Worker threads; defaults to SUPERDIR_THREADS, then to the core count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the normalized radiated-power matrix Z.
    Impedance(ImpedanceArgs),
    /// Maximum-directivity excitation for one configuration.
    Beamform(BeamformArgs),
    /// Directivity and gain over a range of spacings, as CSV.
    Sweep(SweepArgs),
    /// Spherical wave expansion of sampled far fields.
    #[command(subcommand)]
    Swe(SweCommand),
    /// Coupling matrix estimation and synthetic test fields.
    #[command(subcommand)]
    Coupling(CouplingCommand),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PatternArg {
    Isotropic,
    #[value(alias = "hertzian")]
    HertzianDipole,
    #[value(alias = "half-wave", alias = "dipole")]
    HalfWaveDipole,
}

impl PatternArg {
    fn config_name(self) -> &'static str {
        match self {
            PatternArg::Isotropic => "isotropic",
            PatternArg::HertzianDipole => "hertzian-dipole",
            PatternArg::HalfWaveDipole => "half-wave-dipole",
        }
    }
}

#[derive(Debug, Args)]
pub struct ArrayArgs {
    /// Number of elements M.
    #[arg(long, default_value_t = 2)]
    antennas: usize,
    /// Element spacing in wavelengths.
    #[arg(long, default_value_t = 0.05)]
    spacing: f64,
    /// Element pattern.
    #[arg(long, value_enum, default_value = "isotropic")]
    pattern: PatternArg,
}

#[derive(Debug, Args)]
pub struct QuadratureArgs {
    /// Gauss-Legendre nodes in cos(theta).
    #[arg(long, default_value_t = superdir::quadrature::DEFAULT_THETA_NODES)]
    quadrature_theta: usize,
    /// Uniform nodes in phi.
    #[arg(long, default_value_t = superdir::quadrature::DEFAULT_PHI_NODES)]
    quadrature_phi: usize,
}

#[derive(Debug, Args)]
pub struct ImpedanceArgs {
    #[command(flatten)]
    array: ArrayArgs,
    #[command(flatten)]
    quadrature: QuadratureArgs,
    /// Also integrate with a doubled rule and fail if any entry moves by
    /// more than this tolerance.
    #[arg(long)]
    certify: Option<f64>,
    /// Write `row,col,value` CSV here instead of printing a table.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BeamformArgs {
    #[command(flatten)]
    array: ArrayArgs,
    /// Steering polar angle in degrees (0 = endfire).
    #[arg(long, default_value_t = 0.0)]
    theta0: f64,
    /// Steering azimuth in degrees.
    #[arg(long, default_value_t = 0.0)]
    phi0: f64,
    /// `identity`, a coupling CSV path (`file:` prefix optional) or
    /// `synthetic[:gamma=..,beta=..,asymmetry=..,estimate]`.
    #[arg(long, default_value = "identity")]
    coupling: String,
    /// Radiation efficiency of each element, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    efficiency: f64,
    /// Diagonal loading added to Z before solving.
    #[arg(long, default_value_t = 0.0)]
    loading: f64,
    /// Truncation degree when the coupling is estimated from fields.
    #[arg(long)]
    truncation: Option<usize>,
    #[command(flatten)]
    quadrature: QuadratureArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `key = value` configuration file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of elements M.
    #[arg(long)]
    antennas: Option<usize>,
    /// Element pattern.
    #[arg(long, value_enum)]
    pattern: Option<PatternArg>,
    /// `start:stop:steps` in wavelengths, or a single spacing.
    #[arg(long)]
    spacing: Option<String>,
    /// Steering polar angle in degrees.
    #[arg(long)]
    theta0: Option<f64>,
    /// Steering azimuth in degrees.
    #[arg(long)]
    phi0: Option<f64>,
    /// Radiation efficiency of each element, in (0, 1].
    #[arg(long)]
    efficiency: Option<f64>,
    /// Coupling source, as for `beamform`.
    #[arg(long)]
    coupling: Option<String>,
    /// Gauss-Legendre nodes in cos(theta).
    #[arg(long)]
    quadrature_theta: Option<usize>,
    /// Uniform nodes in phi.
    #[arg(long)]
    quadrature_phi: Option<usize>,
    /// Truncation degree when the coupling is estimated from fields.
    #[arg(long)]
    truncation: Option<usize>,
    /// Diagonal loading added to Z before solving.
    #[arg(long)]
    loading: Option<f64>,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum SweCommand {
    /// Fit expansion coefficients to a field CSV.
    Fit(SweFitArgs),
}

/// Ways to choose the truncation degree N.
#[derive(Debug, Args)]
pub struct TruncationArgs {
    /// Truncation degree N.
    #[arg(long, conflicts_with_all = ["radius", "radius_m"])]
    truncation: Option<usize>,
    /// Enclosing radius in wavelengths; N = ceil(2 pi r) + 10.
    #[arg(long, conflicts_with = "radius_m")]
    radius: Option<f64>,
    /// Enclosing radius in meters, converted with --frequency.
    #[arg(long)]
    radius_m: Option<f64>,
    /// Frequency in Hz for meter-denominated radii.
    #[arg(long, default_value_t = 845e6)]
    frequency: f64,
}

#[derive(Debug, Args)]
pub struct SweFitArgs {
    /// Field samples (`theta_deg,phi_deg,re_etheta,im_etheta,re_ephi,im_ephi`).
    input: PathBuf,
    #[command(flatten)]
    truncation: TruncationArgs,
    /// Coefficient CSV destination; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CouplingCommand {
    /// Estimate C from isolated and active element fields.
    Estimate(EstimateArgs),
    /// Write synthetic isolated/active fields for a known coupling fixture.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Isolated element field CSVs, one per element in order.
    #[arg(long, num_args = 1.., required = true)]
    isolated: Vec<PathBuf>,
    /// Active element field CSVs, one per element in order.
    #[arg(long, num_args = 1.., required = true)]
    active: Vec<PathBuf>,
    #[command(flatten)]
    truncation: TruncationArgs,
    /// Element spacing in wavelengths; sets N from the array size when no
    /// truncation or radius is given.
    #[arg(long)]
    spacing: Option<f64>,
    /// Coupling CSV destination; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    array: ArrayArgs,
    /// Magnitude decay per element of separation, in (0, 1).
    #[arg(long, default_value_t = 0.3)]
    gamma: f64,
    /// Phase lag per element of separation, in radians.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Relative boost of entries above the diagonal.
    #[arg(long, default_value_t = 0.0)]
    asymmetry: f64,
    /// Degree whose default grid the fields are sampled on.
    #[arg(long)]
    truncation: Option<usize>,
    /// Directory for `isolated_<k>.csv`, `active_<k>.csv` and `coupling_true.csv`.
    #[arg(long)]
    out_dir: PathBuf,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("SUPERDIR_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("SUPERDIR_THREADS=`{v}` is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            return Err(CliError::Usage("thread count must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Impedance(args) => commands::impedance(&args),
        Command::Beamform(args) => commands::beamform(&args),
        Command::Sweep(args) => commands::sweep(&args),
        Command::Swe(SweCommand::Fit(args)) => commands::swe_fit(&args),
        Command::Coupling(CouplingCommand::Estimate(args)) => commands::coupling_estimate(&args),
        Command::Coupling(CouplingCommand::Synth(args)) => commands::coupling_synth(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
