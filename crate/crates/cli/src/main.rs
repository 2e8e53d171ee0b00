//! `rpe`: run, verify, cost and spectrum commands for the repeated phase
//! estimation simulator.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "rpe", version, about = "Repeated phase estimation of Schrödinger ground state energies")]
struct Cli {
    /// Worker threads for parallel sections (a hint; default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the staged algorithm for a config file; writes report.json and stages.csv.
    Run(RunArgs),
    /// Run a verification suite by name, or `all`.
    Verify(VerifyArgs),
    /// Tabulate parameters and exponential counts over a sweep of mesh widths.
    Cost(CostArgs),
    /// Dump eigenvalues and eigenvectors of the Hamiltonian for a config as CSV.
    Spectrum(SpectrumArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// JSON config file.
    pub config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Overrides `output.formats`.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Print the resolved config (CSV potentials inlined) and exit.
    #[arg(long)]
    pub dump_config: bool,
    /// Write per-stage post-measurement states and outcome distributions.
    #[arg(long)]
    pub dump_states: bool,
    /// Write the product-formula plans of every stage (trotter backend).
    #[arg(long)]
    pub dump_plans: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
    Both,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Suite name or `all`.
    pub suite: String,
    /// Overrides the suite's default trial count.
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write one JSON report per suite and summary.csv here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Energy,
    #[value(alias = "state-prep")]
    State,
}

#[derive(Args)]
pub struct CostArgs {
    #[arg(long)]
    pub d: usize,
    /// Potential bound `C`; the sweep uses a radial quadratic reaching it.
    #[arg(long = "c", short = 'C', allow_negative_numbers = true)]
    pub c: f64,
    /// Largest target error; the sweep starts at the mesh it selects.
    #[arg(long)]
    pub eps: f64,
    /// Smallest target error (default: `--eps`, a single row).
    #[arg(long)]
    pub eps_min: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,
    /// Suzuki order parameters; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub k: Vec<u32>,
    #[arg(long, value_enum, default_value = "energy")]
    pub mode: ModeArg,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Print CSV instead of an aligned table.
    #[arg(long)]
    pub csv: bool,
    /// Build actual plans when the grid dimension is at most this.
    #[arg(long, default_value_t = 32)]
    pub plan_max_dim: usize,
    /// Per-power exponential cap when planning.
    #[arg(long, default_value_t = 100_000_000)]
    pub max_exponentials: u64,
}

#[derive(Args)]
pub struct SpectrumArgs {
    pub config: PathBuf,
    /// Fraction `s` of the potential; default 1 (the full Hamiltonian).
    #[arg(long, default_value_t = 1.0)]
    pub stage_fraction: f64,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: --threads ignored: {e}");
        }
    }
    let result = match cli.command {
        Command::Run(a) => commands::run(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Cost(a) => commands::cost(&a),
        Command::Spectrum(a) => commands::spectrum(&a),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
