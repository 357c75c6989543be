//! `subadd`: command-line front end to the subadditivity laboratory.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "subadd",
    version,
    about = "Exact divergences and subadditivity checks on graphical models"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct GlobalOpts {
    /// Write the main output here and a manifest next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for grid sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Gap tolerance: a cell violates when `gap < -tol`.
    #[arg(long, global = true, default_value_t = subadd_core::lab::GAP_TOL)]
    pub tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// f-divergence between two discrete models.
    Divergence {
        /// Generator tag: kl, rkl, skl, js, h2, tv, chi2, rchi2 or alpha:<a>.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
    },
    /// Wasserstein distance between two discrete models.
    Wasserstein {
        /// Order of the distance.
        #[arg(long)]
        p: f64,
        #[arg(long)]
        pdist: PathBuf,
        #[arg(long)]
        qdist: PathBuf,
        /// Include the optimal coupling and its duals.
        #[arg(long)]
        plan: bool,
    },
    /// Closed-form W2 between two Gaussians.
    W2Gaussian {
        #[arg(long)]
        pdist: PathBuf,
        #[arg(long)]
        qdist: PathBuf,
    },
    /// Local neighborhoods of a Bayes-net or MRF.
    Decompose {
        #[arg(long)]
        model: PathBuf,
        /// parents, truncated, cliques or bfs.
        #[arg(long)]
        mode: String,
        /// Nodes to contract, applied left to right.
        #[arg(long, value_delimiter = ',')]
        contract: Vec<usize>,
    },
    /// Sweep an example family over an N×N grid and report the gap.
    Verify {
        /// h1, h2 or counter.
        #[arg(long)]
        example: String,
        /// Measure tag (w2 for the counter-example).
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        grid: usize,
        #[arg(long, default_value = "parents")]
        mode: String,
    },
    /// Compare f-divergences with their χ² approximation on a perturbed Gaussian.
    LocalApprox {
        /// Perturbation sizes in [0, 1).
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.005,0.0025")]
        eps: Vec<f64>,
        /// Generator tags; default is every smooth generator.
        #[arg(long, value_delimiter = ',')]
        kind: Vec<String>,
    },
    /// Check the linear bounds on random Bayes-net pairs drawn from `--seed`.
    RandomCheck {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 4)]
        max_nodes: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
