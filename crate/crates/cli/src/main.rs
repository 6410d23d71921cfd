mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use beg::BegError;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "beg", version, about = "Mean-field Blume-Emery-Griffiths model toolkit")]
pub struct Cli {
    /// key=value file; flags take precedence over its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// csv or json
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "K")]
    pub k: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Sample K_c(β) and the region boundaries on a β grid
    PhaseDiagram {
        #[arg(long)]
        beta_min: Option<f64>,
        #[arg(long)]
        beta_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Exact law of (S, M) and the moments of W
    ExactLaw {
        #[command(flatten)]
        model: ModelArgs,
        /// Compare with the exhaustive 3^n sum (n <= 12)
        #[arg(long)]
        check_bruteforce: bool,
        /// Save the law as CSV for later runs
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Density ∝ exp(−(b1 x² + b2 x⁴ + b3 x⁶)), given directly or built for a case
    LimitDensity {
        #[arg(long)]
        b1: Option<f64>,
        #[arg(long)]
        b2: Option<f64>,
        #[arg(long)]
        b3: Option<f64>,
        #[arg(long)]
        case: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        grid_points: Option<usize>,
        #[arg(long)]
        half_width: Option<f64>,
    },
    /// Exact Kolmogorov distance between W and a reference CDF
    Kolmogorov {
        #[command(flatten)]
        model: ModelArgs,
        /// Load the law from a file written by `exact-law --save`
        #[arg(long)]
        law: Option<PathBuf>,
        /// normal, self or density
        #[arg(long)]
        against: Option<String>,
        /// Normal standard deviation; defaults to sqrt(E[W²])
        #[arg(long)]
        sd: Option<f64>,
        #[arg(long)]
        b1: Option<f64>,
        #[arg(long)]
        b2: Option<f64>,
        #[arg(long)]
        b3: Option<f64>,
    },
    /// Stein bound terms for one case at one n
    SteinBound {
        #[arg(long)]
        case: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        /// Grid step for the Stein constants
        #[arg(long)]
        grid_step: Option<f64>,
    },
    /// Ladder scan of d_K with a log-log fit
    RateScan {
        #[arg(long)]
        case: Option<String>,
        /// Run all 42 cases and write the summary table
        #[arg(long)]
        all: bool,
        /// Also evaluate the Stein bounds at every point
        #[arg(long)]
        bounds: bool,
        /// Comma-separated n values replacing the default ladder
        #[arg(long)]
        ladder: Option<String>,
    },
    /// Heat-bath Markov chain estimates
    Mcmc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        sweeps: Option<u64>,
        #[arg(long)]
        burn_in: Option<u64>,
        #[arg(long)]
        trace_every: Option<u64>,
        #[arg(long)]
        pmf: bool,
    },
    /// List the 42 cases
    CaseCatalog,
}

#[derive(Debug)]
pub enum CliError {
    Beg(BegError),
    Io(String),
}

impl From<BegError> for CliError {
    fn from(e: BegError) -> Self {
        CliError::Beg(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.kind().to_string();
            let detail = e.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            eprintln!("{}", serde_json::json!({ "error": "usage", "message": format!("{message}: {detail}") }));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, message, code) = match e {
                CliError::Beg(e) => (e.kind(), e.to_string(), if e.is_validation() { 2 } else { 3 }),
                CliError::Io(m) => ("io", m, 3),
            };
            eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
            ExitCode::from(code)
        }
    }
}
