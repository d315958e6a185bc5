//! `infolattice` command-line tool.
//!
//! Exit codes: 0 success, 1 bad input, 2 numerical failure, 3 partial ensemble.

mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "infolattice",
    version,
    about = "Information lattices of one-dimensional quantum states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Information lattice of a state file.
    Lattice(LatticeArgs),
    /// Ground or midspectrum state of a disordered Kitaev chain.
    Kitaev(KitaevArgs),
    /// Disorder sweep from a JSON config.
    Ensemble(EnsembleArgs),
    /// Plot-ready CSV from lattices or ensemble profiles.
    Plotdata(PlotArgs),
    /// Write a product, GHZ, Bell-pair or Haar-random state file.
    MakeState(MakeStateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Dense,
    Mps,
}

#[derive(Args, Serialize)]
pub struct LatticeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "dense")]
    pub input_format: InputFormat,
    #[arg(long)]
    pub out: PathBuf,
    /// Check that the lattice sums to L log2 d.
    #[arg(long)]
    pub check_sum_rule: bool,
    /// FIFO cache capacity for the MPS provider.
    #[arg(long, default_value_t = infolattice::mps::DEFAULT_CACHE_CAPACITY)]
    pub cache: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KitaevState {
    Ground,
    Midspectrum,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendArg {
    Auto,
    Dense,
    Gaussian,
}

#[derive(Args, Serialize)]
pub struct KitaevArgs {
    #[arg(value_enum)]
    pub state: KitaevState,
    #[arg(long = "L", required_unless_present = "realization")]
    pub sites: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub g: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "auto")]
    pub backend: BackendArg,
    /// Realization JSON to use instead of sampling couplings.
    #[arg(long)]
    pub realization: Option<PathBuf>,
    #[arg(long)]
    pub out_state: Option<PathBuf>,
    #[arg(long)]
    pub out_lattice: Option<PathBuf>,
    /// Summary JSON (printed to stdout when omitted).
    #[arg(long)]
    pub out_summary: Option<PathBuf>,
    #[arg(long)]
    pub out_realization: Option<PathBuf>,
    /// Ground-state covariance CSV (gaussian backend).
    #[arg(long)]
    pub out_covariance: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// JSON-lines record file.
    #[arg(long)]
    pub out: PathBuf,
    /// Aggregate CSV (default: next to --out with `.aggregate.csv`).
    #[arg(long)]
    pub aggregate: Option<PathBuf>,
    #[arg(long, env = "INFOLATTICE_JOBS")]
    pub jobs: Option<usize>,
    /// Keep existing records in --out and compute only the missing ones.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    PerScale,
    LatticeHeatmap,
    AlphaFit,
}

#[derive(Args, Serialize)]
pub struct PlotArgs {
    #[arg(long, conflicts_with = "profiles", required_unless_present = "profiles")]
    pub lattice: Option<PathBuf>,
    /// Ensemble record files holding per-scale profiles.
    #[arg(long, num_args = 1..)]
    pub profiles: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub ell_min: usize,
    /// Defaults to the apex of the central triangle.
    #[arg(long)]
    pub ell_max: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Product,
    Ghz,
    Bell,
    Haar,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StateFormat {
    Binary,
    Json,
    Mps,
}

#[derive(Args, Serialize)]
pub struct MakeStateArgs {
    #[arg(value_enum)]
    pub kind: StateKind,
    #[arg(long = "L")]
    pub sites: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "binary")]
    pub format: StateFormat,
    #[arg(long, default_value_t = 1 << 10)]
    pub chi_max: usize,
    #[arg(long, default_value_t = 0.0)]
    pub trunc_eps: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Lattice(a) => commands::lattice(&a),
        Command::Kitaev(a) => commands::kitaev(&a),
        Command::Ensemble(a) => commands::ensemble(&a),
        Command::Plotdata(a) => plot::plotdata(&a),
        Command::MakeState(a) => commands::make_state(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("infolattice: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
