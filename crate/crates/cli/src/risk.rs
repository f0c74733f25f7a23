use std::path::PathBuf;
use std::time::Instant;

use liushrink::asymptotics::{equicorrelation, kappa_for_noncentrality, risk_curve, AsymptoticInputs, Asymptotics, SymbolForm};
use liushrink::linalg::{Mat, Vector};
use liushrink::simulation::true_beta;
use serde::Serialize;

use crate::config::parse_estimators;
use crate::failure::Failure;
use crate::output::{fmt_num, manifest_path, no_seed, resolve_out, write_atomic, RunManifest, Table};
use crate::RunOpts;

/// Asymptotic risk curves under an equicorrelated design limit, with the
/// local alternative moved along the all-ones direction and `W = I`.
#[derive(clap::Args, Debug, Clone, Serialize)]
pub struct Args {
    #[arg(long, default_value_t = 3)]
    pub p1: usize,
    #[arg(long, default_value_t = 5)]
    pub p2: usize,
    /// Equicorrelation of the design limit.
    #[arg(long, default_value_t = 0.3)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Liu parameter.
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Largest noncentrality on the grid.
    #[arg(long, default_value_t = 30.0)]
    pub delta_max: f64,
    /// Number of equally spaced grid points from 0.
    #[arg(long, default_value_t = 61)]
    pub steps: usize,
    /// Definitions of the design symbols: `consistent` or `as-printed`.
    #[arg(long, value_enum, default_value_t = FormArg::Consistent)]
    pub form: FormArg,
    #[arg(long, value_delimiter = ',', default_value = "LFM,LSM,LPT,LS,LPS")]
    pub estimators: Vec<String>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunOpts,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormArg {
    Consistent,
    AsPrinted,
}

impl From<FormArg> for SymbolForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Consistent => SymbolForm::Consistent,
            FormArg::AsPrinted => SymbolForm::AsPrinted,
        }
    }
}

pub fn run(args: &Args) -> Result<(), Failure> {
    let started = Instant::now();
    let kinds = parse_estimators(&args.estimators)?;
    if args.steps < 2 || !(args.delta_max > 0.0) {
        return Err(Failure::config("need steps >= 2 and delta-max > 0"));
    }
    if !(0.0..1.0).contains(&args.rho) {
        return Err(Failure::config(format!("rho = {} outside [0, 1)", args.rho)));
    }
    let p = args.p1 + args.p2;
    let base = AsymptoticInputs {
        c: equicorrelation(p, args.rho),
        p1: args.p1,
        kappa: Vector::zeros(args.p2),
        sigma2: args.sigma2,
        d: args.d,
        beta: true_beta(args.p1, args.p2, 0.0),
        w: Mat::identity(args.p1, args.p1),
        form: args.form.into(),
    };
    let grid: Vec<f64> = (0..args.steps).map(|i| args.delta_max * i as f64 / (args.steps - 1) as f64).collect();
    let dir = Vector::from_element(args.p2, 1.0);
    let points = risk_curve(&base, &dir, &grid, &kinds, args.alpha)?;

    let prec = args.run.precision;
    let mut t = Table::new(&["noncentrality", "estimator", "risk", "quadratic_bias"].map(String::from))?;
    let mut current: Option<(f64, Asymptotics)> = None;
    for pt in &points {
        if current.as_ref().map(|c| c.0) != Some(pt.noncentrality) {
            let kappa = kappa_for_noncentrality(&base.c, base.p1, base.sigma2, &dir, pt.noncentrality, base.form)?;
            let mut inp = base.clone();
            inp.beta.rows_mut(args.p1, args.p2).copy_from(&kappa);
            inp.kappa = kappa;
            current = Some((pt.noncentrality, Asymptotics::from_inputs(&inp, args.alpha)?));
        }
        let qb = current.as_ref().map(|c| c.1.quadratic_bias(pt.kind)).transpose()?.unwrap_or(f64::NAN);
        t.row(&[fmt_num(pt.noncentrality, prec), pt.kind.to_string(), fmt_num(pt.risk, prec), fmt_num(qb, prec)])?;
    }
    let out = resolve_out(&args.out);
    write_atomic(&out, &t.into_bytes()?)?;
    let seed = no_seed();
    RunManifest::new("risk", seed, args, "direction = 1, W = I, beta1 = 1, beta2 = kappa", vec![out.display().to_string()], args.run.jobs, started)
        .write(&manifest_path(&out))
}
