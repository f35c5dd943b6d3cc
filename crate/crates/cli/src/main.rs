//! `retrodict`: batch characterization of detector POVMs.

mod commands;
mod settings;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::spec::StateSpec;

#[derive(Parser, Debug)]
#[command(
    name = "retrodict",
    version,
    about = "Retrodictive characterization of photodetector POVMs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a detector model as a POVM file.
    Model(ModelArgs),
    /// Check a POVM file and print its validation report.
    Validate(ValidateArgs),
    /// Projectivity, ideality, fidelity and detectivity for every outcome.
    Characterize(CharacterizeArgs),
    /// Wigner function of one outcome's retrodicted state.
    Wigner(WignerArgs),
    /// Heralded-state fidelity scan over TMSV squeezing parameters.
    Herald(HeraldArgs),
    /// Bayesian posterior over a probe ensemble for one outcome.
    Retrodict(RetrodictArgs),
    /// Write a probe ensemble file.
    Ensemble(EnsembleArgs),
    /// Recheck the estimator identities stored in a report.
    VerifyReport(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    IdealPnr,
    LossyPnr,
    Apd,
    ScaledProjector,
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    pub kind: ModelKind,
    #[arg(long)]
    pub dim: usize,
    /// Detection efficiency.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Dark-count probability.
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    /// Projector target for scaled-projector.
    #[arg(long)]
    pub target: Option<StateSpec>,
    /// Ideality of the scaled projector.
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    pub povm: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    pub p_min: f64,
    #[arg(long, default_value_t = 6.0, allow_hyphen_values = true)]
    pub p_max: f64,
    #[arg(long, default_value_t = 201)]
    pub nx: usize,
    #[arg(long, default_value_t = 201)]
    pub np: usize,
}

#[derive(Args, Debug)]
pub struct CharacterizeArgs {
    pub povm: PathBuf,
    /// Target state, repeatable: fock:n, coherent:re,im or squeezed:r.
    #[arg(long = "target")]
    pub targets: Vec<StateSpec>,
    #[arg(long)]
    pub pi_min: Option<f64>,
    #[arg(long)]
    pub zeta_min: Option<f64>,
    /// Also compute phase-space non-classicality rows.
    #[arg(long)]
    pub phase_space: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Report path; the report goes to stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct WignerArgs {
    pub povm: PathBuf,
    #[arg(long)]
    pub outcome: String,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Grid output path (comma-separated x,p,W rows).
    #[arg(long, short)]
    pub out: PathBuf,
    /// Non-classicality report path; defaults to `<out>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct HeraldArgs {
    pub povm: PathBuf,
    #[arg(long)]
    pub outcome: String,
    /// Comma-separated squeezing parameters in [0, 1).
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambdas: Vec<f64>,
    /// Fock truncation; must equal the POVM dimension when given.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RetrodictArgs {
    pub povm: PathBuf,
    #[arg(long)]
    pub outcome: String,
    #[arg(long)]
    pub ensemble: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub dim: usize,
    /// Uniform ensemble over Fock states 0..N.
    #[arg(long, conflicts_with = "states")]
    pub fock: Option<usize>,
    /// Member state, repeatable.
    #[arg(long = "state")]
    pub states: Vec<StateSpec>,
    /// Priors in the order of `--state`; uniform when omitted.
    #[arg(long = "prior", requires = "states")]
    pub priors: Vec<f64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub report: PathBuf,
    /// POVM file whose digest the report must carry.
    #[arg(long)]
    pub povm: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = settings::tolerances_from_env().and_then(|tol| match cli.command {
        Command::Model(a) => commands::model(&a),
        Command::Validate(a) => commands::validate(&a, &tol),
        Command::Characterize(a) => commands::characterize(&a, &tol),
        Command::Wigner(a) => commands::wigner(&a, &tol),
        Command::Herald(a) => commands::herald(&a, &tol),
        Command::Retrodict(a) => commands::retrodict(&a, &tol),
        Command::Ensemble(a) => commands::ensemble(&a),
        Command::VerifyReport(a) => commands::verify_report(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
