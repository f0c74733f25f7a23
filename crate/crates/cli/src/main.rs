//! `liushrink`: simulation grids, asymptotic risk curves, noncentral
//! chi-square queries and the bootstrap data analysis.

mod analyze;
mod config;
mod dist;
mod failure;
mod output;
mod risk;
mod simulate;

use clap::{Parser, Subcommand};

use failure::{Category, Failure};
use output::Precision;

#[derive(Parser, Debug)]
#[command(name = "liushrink", version, about = "Liu-type pretest and Stein shrinkage estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo relative MSE over a grid of design cells.
    Simulate(simulate::Args),
    /// Closed-form asymptotic risk curves over a noncentrality grid.
    Risk(risk::Args),
    /// Noncentral chi-square distribution functions and moments.
    Dist(dist::Args),
    /// Sub-model selection and bootstrap prediction error on a data set.
    Analyze(analyze::Args),
}

/// Options shared by the commands that write files.
#[derive(clap::Args, Debug, Clone)]
pub struct RunOpts {
    /// Master seed; overrides any seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads. Never changes any output byte.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, default_value = "six")]
    pub precision: Precision,
}

/// Runs `f` on a pool of `jobs` workers, or on the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Failure::new(Category::Usage, "--jobs must be >= 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Failure::new(Category::Usage, e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate(a) => simulate::run(&a),
        Command::Risk(a) => risk::run(&a),
        Command::Dist(a) => dist::run(&a),
        Command::Analyze(a) => analyze::run(&a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let text = e.render().to_string();
            eprint!("error[{}]: {}", Category::Usage.name(), text.strip_prefix("error: ").unwrap_or(&text));
            std::process::exit(Category::Usage.exit_code());
        }
    };
    if let Err(f) = dispatch(cli) {
        eprintln!("{f}");
        std::process::exit(f.category.exit_code());
    }
}
