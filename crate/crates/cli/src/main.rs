//! `mixrate`: estimation, moment problems, verification and Monte Carlo
//! benchmarks for finite mixtures under the Wasserstein loss.
//!
//! Exit status is 0 on success, 1 when a checked invariant is breached and
//! 2 on usage errors (bad flags, unreadable or malformed input).

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "mixrate", version, about = "Finite mixture estimation under the Wasserstein loss")]
pub struct Cli {
    /// Worker threads (default: hardware parallelism).
    #[arg(long, global = true, env = "MIXRATE_THREADS")]
    pub threads: Option<usize>,

    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimum sup-distance estimate of the mixing distribution.
    Estimate(EstimateArgs),
    /// Adaptive order selection (same as `estimate --auto-order`).
    SelectOrder(SelectOrderArgs),
    /// Truncated moment problems.
    #[command(subcommand)]
    Moments(MomentsCommand),
    /// Two distributions sharing all but their last moment.
    Adversarial(AdversarialArgs),
    /// Monte Carlo experiments.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Numerical checks, each printing a JSON report.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Transportation distance between two mixing distributions in JSON.
    Wasserstein {
        a: PathBuf,
        b: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    #[arg(long, default_value = "gaussian")]
    pub family: String,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    pub theta_lo: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub theta_hi: f64,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Sample file: one number per line, or a CSV file (see `--column`).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Zero-based CSV column holding the observations.
    #[arg(long, default_value_t = 0)]
    pub column: usize,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Nelder-Mead starts per order (default 20 + 10 m).
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Number of components.
    #[arg(long, required_unless_present = "auto_order", conflicts_with = "auto_order")]
    pub m: Option<usize>,
    /// Choose the number of components from the data.
    #[arg(long)]
    pub auto_order: bool,
    #[arg(long, default_value_t = mixrate::estimate::DEFAULT_KAPPA)]
    pub kappa: f64,
    #[arg(long, default_value_t = mixrate::DEFAULT_M_MAX)]
    pub m_max: usize,
}

#[derive(Debug, Args)]
pub struct SelectOrderArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value_t = mixrate::estimate::DEFAULT_KAPPA)]
    pub kappa: f64,
    #[arg(long, default_value_t = mixrate::DEFAULT_M_MAX)]
    pub m_max: usize,
}

#[derive(Debug, Subcommand)]
pub enum MomentsCommand {
    /// Recover a `d`-atom distribution from the moments `[1, mu_1, ...]`.
    Solve {
        /// JSON array of moments starting with 1.
        moments: String,
        /// Number of atoms (default: half the number of moments).
        #[arg(long)]
        d: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct AdversarialArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long)]
    pub eps: f64,
    /// Last free moment of the first member.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub u1: f64,
    /// Last free moment of the second member.
    #[arg(long, default_value_t = 12.0, allow_hyphen_values = true)]
    pub u2: f64,
    /// Base moments `[1, mu_1, ..., mu_{2d-2}]` as JSON.
    #[arg(long)]
    pub base: Option<String>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub center: f64,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Estimation rate over a grid of sample sizes (TOML config).
    Rate {
        #[arg(long)]
        config: PathBuf,
        /// CSV of the raw rows (default: stdout).
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// JSON with the per-n summary and the fitted slope.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Sup-CDF distance against Wasserstein distance for moment-matched pairs.
    Ratio {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1e-3)]
        eps_lo: f64,
        #[arg(long, default_value_t = 1e-1)]
        eps_hi: f64,
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        u1: f64,
        #[arg(long, default_value_t = 12.0, allow_hyphen_values = true)]
        u2: f64,
        #[arg(long)]
        base: Option<String>,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Empirical exceedance frequencies next to the DKW bound.
    Dkw(DkwArgs),
}

#[derive(Debug, Args)]
pub struct DkwArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    /// Comma-separated thresholds.
    #[arg(long, value_delimiter = ',', default_value = "0.03,0.05,0.1")]
    pub z: Vec<f64>,
    /// Mixing distribution JSON file (default: a single atom at 0).
    #[arg(long)]
    pub mixing: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Closed-form moment-map Jacobian against finite differences.
    Jacobian {
        /// Comma-separated weights; random instances when omitted.
        #[arg(long, value_delimiter = ',', requires = "h")]
        pi: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "pi")]
        h: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Smallest singular value of the CDF-derivative matrix and, with
    /// `--multiplicities`, the confluent Vandermonde rank.
    Identifiability {
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        thetas: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        multiplicities: Option<Vec<usize>>,
        #[arg(long)]
        allow_duplicates: bool,
        #[command(flatten)]
        family: FamilyArgs,
    },
    /// DKW coverage; fails when a frequency exceeds bound + 3 standard errors.
    Dkw(DkwArgs),
    /// Local asymptotic normality simulation.
    Lan {
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        u: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 2000)]
        reps: usize,
        /// Order of the local alternative family.
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// `G0` as a JSON file (default: a single atom at 0).
        #[arg(long)]
        g0: Option<PathBuf>,
        #[arg(long)]
        base: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        family: FamilyArgs,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Breach(msg)) => {
            eprintln!("invariant breached: {msg}");
            ExitCode::from(1)
        }
        Err(commands::Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            eprintln!("run `mixrate --help` for usage");
            ExitCode::from(2)
        }
    }
}
