//! `netbell`: independence certificates and nonlinear Bell inequalities for
//! quantum networks.

mod commands;
mod format;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use netbell_core::Error;

#[derive(Parser, Debug)]
#[command(name = "netbell", version, about = "Nonlinear Bell inequalities for multi-source quantum networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certify independent parties and state the inequality.
    Analyze { input: String },
    /// Evaluate F at the given or default angles.
    Evaluate { input: String },
    /// Maximize F over the angles and compare with the closed form.
    Optimize { input: String },
    /// Critical visibilities of a Werner-state network.
    Visibility { input: String },
    /// Largest classical F over local hidden variable models.
    Lhv { input: String },
    /// List gallery networks, or print one as JSON.
    Gallery { name: Option<String> },
    /// Cross-validate the engines on a network.
    Check { input: String },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Factorized,
    FullTensor,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(clap::Args, Debug)]
pub struct Options {
    /// Comma-separated angles in [0, π/2], one per independent party.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub angles: Option<Vec<f64>>,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Factorized)]
    pub mode: Mode,
    /// Hidden-state alphabet size per source.
    #[arg(long, global = true, default_value_t = 2)]
    pub d: usize,
    /// Strategy-measure pairs evaluated by the classical search.
    #[arg(long, global = true, default_value_t = netbell_core::lhv::DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Rotated matching attempts before falling back to subset search.
    #[arg(long, global = true, default_value_t = netbell_core::independence::DEFAULT_RETRIES)]
    pub retries: usize,
    /// Largest Hilbert-space dimension for the full-tensor path.
    #[arg(long = "dim-cap", global = true, default_value_t = netbell_core::quantum::DEFAULT_DIM_CAP)]
    pub dim_cap: usize,
    /// Agreement tolerance used by `check`.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Points in the CSV angle sweep.
    #[arg(long, global = true, default_value_t = 91)]
    pub points: usize,
}

/// Failure of a command, with its exit status.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Io(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(Error::ResourceLimit(_)) => 3,
            Failure::Core(Error::Numerical(_)) => 1,
            Failure::Core(_) | Failure::Io(_) | Failure::Usage(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Io(m) | Failure::Usage(m) => m.clone(),
        }
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("NETBELL_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring NETBELL_THREADS={v}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match commands::run(&cli) {
        Ok(report) => {
            print!("{}", report.output);
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
