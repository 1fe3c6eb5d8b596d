use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use seqagg::cli::{self, LemmaCheckArgs};
use seqagg::config::{FALLBACK_SEED, SEED_ENV};
use seqagg::montecarlo::DEFAULT_K_MAX;

#[derive(Parser)]
#[command(name = "seqagg", version, about = "Oracle-inequality experiments in the Gaussian sequence model")]
struct Cli {
    /// Default seed for configs and checks that do not set one.
    #[arg(long, global = true, env = SEED_ENV, default_value_t = FALLBACK_SEED)]
    default_seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a config; write results.csv, results.json, manifest.json.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regret budgets for a given r/sigma^2 and model count.
    Bounds {
        #[arg(long = "r", allow_negative_numbers = true)]
        r_over_sigma2: f64,
        #[arg(long = "m")]
        count: usize,
    },
    /// Evaluate Psi(r) and its minimizer.
    Psi {
        #[arg(required = true, allow_negative_numbers = true)]
        r: Vec<f64>,
    },
    /// Monte Carlo check of a maximal inequality against 1/alpha.
    LemmaCheck {
        #[arg(long)]
        which: String,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        /// Mean vector for the linear statistic, e.g. poly:beta=1,n=100.
        #[arg(long)]
        mu: Option<String>,
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        kmax: usize,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let args = match Cli::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { cli::EXIT_USAGE as u8 } else { 0 });
        }
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let code = match args.command {
        Command::Simulate { config, out: dir } => {
            cli::cmd_simulate(&config, &dir, args.default_seed, &mut out, &mut err)
        }
        Command::Bounds { r_over_sigma2, count } => cli::cmd_bounds(r_over_sigma2, count, &mut out, &mut err),
        Command::Psi { r } => cli::cmd_psi(&r, &mut out, &mut err),
        Command::LemmaCheck { which, alpha, mu, kmax, reps, seed } => {
            let a = LemmaCheckArgs {
                which,
                alpha,
                mu,
                k_max: kmax,
                replicates: reps,
                seed: seed.unwrap_or(args.default_seed),
            };
            cli::cmd_lemma_check(&a, &mut out, &mut err)
        }
    };
    ExitCode::from(code as u8)
}
