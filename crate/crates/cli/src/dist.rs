use liushrink::distributions::{chisq_quantile, inv_moment, ncchisq_cdf, ncchisq_pdf, ncchisq_sf, trunc_inv_moment, Side};

use crate::failure::Failure;
use crate::output::{fmt_num, Precision};

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(subcommand)]
    pub what: Query,
    #[arg(long, value_enum, default_value = "six", global = true)]
    pub precision: Precision,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum SideArg {
    AtMost,
    Above,
}

#[derive(clap::Subcommand, Debug)]
pub enum Query {
    /// P(X <= x) for a noncentral chi-square.
    Cdf {
        #[arg(long)]
        v: u32,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long)]
        x: f64,
    },
    /// P(X > x).
    Sf {
        #[arg(long)]
        v: u32,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long)]
        x: f64,
    },
    /// Density at x.
    Pdf {
        #[arg(long)]
        v: u32,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long)]
        x: f64,
    },
    /// E[X^-j] for j in {1, 2}.
    InvMoment {
        #[arg(long)]
        v: u32,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        j: u32,
    },
    /// E[X^-j I(X <= c)] or E[X^-j I(X > c)].
    TruncInvMoment {
        #[arg(long)]
        v: u32,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 1)]
        j: u32,
        #[arg(long)]
        c: f64,
        #[arg(long, value_enum, default_value = "at-most")]
        side: SideArg,
    },
    /// Upper-alpha point of the central chi-square.
    Quantile {
        #[arg(long)]
        v: u32,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
}

pub fn run(args: &Args) -> Result<(), Failure> {
    let value = match args.what {
        Query::Cdf { v, delta, x } => ncchisq_cdf(v, delta, x)?,
        Query::Sf { v, delta, x } => ncchisq_sf(v, delta, x)?,
        Query::Pdf { v, delta, x } => ncchisq_pdf(v, delta, x)?,
        Query::InvMoment { v, delta, j } => inv_moment(v, delta, j)?,
        Query::TruncInvMoment { v, delta, j, c, side } => {
            let side = match side {
                SideArg::AtMost => Side::AtMost,
                SideArg::Above => Side::Above,
            };
            trunc_inv_moment(v, delta, j, c, side)?
        }
        Query::Quantile { v, alpha } => chisq_quantile(v, alpha)?,
    };
    println!("{}", fmt_num(value, args.precision));
    Ok(())
}
