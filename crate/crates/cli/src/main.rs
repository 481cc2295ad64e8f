use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use urb_core::twirling::GammaNorm;
use urb_core::UrbError;

mod commands;
mod grid;

use grid::MGrid;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NON_CONVERGENCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "urb",
    version,
    about = "Randomized benchmarking analysis: twirl quality, decay simulation, fitting and bound checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the gamma bounds of a scheme's gate ensemble.
    Gamma(SchemeArgs),
    /// Simulate a decay experiment and write the CSV table.
    Simulate(SimulateArgs),
    /// Fit a single exponential to a decay table.
    Fit(FitArgs),
    /// Check the spectral split, the perturbation corollary and the decay bound.
    Verify(VerifyArgs),
    /// Run everything and write one JSON report.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SchemeArgs {
    #[arg(long)]
    scheme: PathBuf,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SampleArgs {
    /// Sequence lengths, e.g. `1,2,4,8` or `1..20`.
    #[arg(long, default_value = "1,2,4,8,16,32")]
    m_grid: MGrid,
    /// Random sequences per length.
    #[arg(long, default_value_t = 300)]
    sequences: usize,
    #[arg(long, default_value_t = 100)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    scheme: PathBuf,
    #[command(flatten)]
    sample: SampleArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Decay table written by `simulate`.
    #[arg(long)]
    data: PathBuf,
    /// Scheme whose measured epsilon enters the robustness bound.
    #[arg(long)]
    scheme: Option<PathBuf>,
    #[arg(long, default_value_t = urb_core::schemes::DEFAULT_M_CUTOFF)]
    m_cutoff: u32,
    /// JSON record of the fit.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    scheme: PathBuf,
    #[arg(long, default_value = "diamond-bound", value_parser = parse_norm)]
    norm: GammaNorm,
    /// Lengths at which the decay bound is checked.
    #[arg(long, default_value = "1..50")]
    m_grid: MGrid,
    #[arg(long, default_value_t = urb_core::schemes::DEFAULT_M_CUTOFF)]
    m_cutoff: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    scheme: PathBuf,
    #[command(flatten)]
    sample: SampleArgs,
    #[arg(long, default_value = "diamond-bound", value_parser = parse_norm)]
    norm: GammaNorm,
    #[arg(long, default_value_t = urb_core::schemes::DEFAULT_M_CUTOFF)]
    m_cutoff: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_norm(s: &str) -> Result<GammaNorm, String> {
    s.parse()
        .map_err(|_| format!("unknown norm '{s}' (expected so, tr-estimate or diamond-bound)"))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<UrbError>() {
        Some(UrbError::NonConvergence { .. }) => EXIT_NON_CONVERGENCE,
        Some(_) => EXIT_VALIDATION,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gamma(a) => commands::gamma(&a.scheme, a.out.as_deref()),
        Command::Simulate(a) => commands::simulate(&a.scheme, &a.sample.into(), a.out.as_deref()),
        Command::Fit(a) => commands::fit(&a.data, a.scheme.as_deref(), a.m_cutoff, a.out.as_deref()),
        Command::Verify(a) => commands::verify(&a.scheme, a.norm, &a.m_grid.0, a.m_cutoff, a.out.as_deref()),
        Command::Report(a) => commands::report(&a.scheme, &a.sample.into(), a.norm, a.m_cutoff, a.out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

impl From<SampleArgs> for commands::Sampling {
    fn from(a: SampleArgs) -> Self {
        commands::Sampling {
            m_grid: a.m_grid.0,
            sequences: a.sequences,
            shots: a.shots,
            seed: a.seed,
        }
    }
}
