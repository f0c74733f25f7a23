//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string so the page needs no generated
//! TypeScript types; failures come back as a thrown error. The `*_json`
//! functions hold the logic and also run on native targets.

use liushrink::asymptotics::{equicorrelation, risk_curve as curve, AsymptoticInputs, SymbolForm};
use liushrink::distributions::{chisq_quantile, ncchisq_cdf, ncchisq_pdf};
use liushrink::estimators::{fit_shrinkage, Estimator, ShrinkageConfig};
use liushrink::linalg::{Mat, Vector};
use liushrink::model::PartitionSpec;
use liushrink::rng;
use liushrink::simulation::{generate_design, true_beta};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn to_js<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn fail(e: liushrink::Error) -> String {
    e.to_string()
}

#[derive(Serialize)]
struct Series {
    estimator: String,
    risk: Vec<f64>,
}

#[derive(Serialize)]
struct RiskCurves {
    noncentrality: Vec<f64>,
    series: Vec<Series>,
}

/// Asymptotic risks of LFM, LSM, LPT, LS and LPS against the noncentrality,
/// for an equicorrelated design limit with `W = I` and `sigma2 = 1`.
pub fn risk_curves_json(p1: usize, p2: usize, rho: f64, d: f64, alpha: f64, delta_max: f64, steps: usize, printed: bool) -> Result<String, String> {
    if steps < 2 || !(delta_max > 0.0) || !(0.0..1.0).contains(&rho) {
        return Err("need steps >= 2, delta_max > 0 and 0 <= rho < 1".to_string());
    }
    let kinds: Vec<Estimator> = Estimator::SHRINKAGE.into_iter().filter(|k| p2 >= 3 || !k.needs_p2_at_least_3()).collect();
    let p = p1 + p2;
    let base = AsymptoticInputs {
        c: equicorrelation(p, rho),
        p1,
        kappa: Vector::zeros(p2),
        sigma2: 1.0,
        d,
        beta: true_beta(p1, p2, 0.0),
        w: Mat::identity(p1, p1),
        form: if printed { SymbolForm::AsPrinted } else { SymbolForm::Consistent },
    };
    let grid: Vec<f64> = (0..steps).map(|i| delta_max * i as f64 / (steps - 1) as f64).collect();
    let points = curve(&base, &Vector::from_element(p2, 1.0), &grid, &kinds, alpha).map_err(fail)?;
    let series = kinds
        .iter()
        .map(|&k| Series { estimator: k.label().to_string(), risk: points.iter().filter(|pt| pt.kind == k).map(|pt| pt.risk).collect() })
        .collect();
    to_js(&RiskCurves { noncentrality: grid, series })
}

#[derive(Serialize)]
struct Density {
    x: Vec<f64>,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
    critical: f64,
}

/// Noncentral chi-square density and distribution function on `[0, x_max]`,
/// with the central upper-`alpha` point for reference.
pub fn chi_square_json(v: u32, delta: f64, x_max: f64, steps: usize, alpha: f64) -> Result<String, String> {
    if steps < 2 || !(x_max > 0.0) {
        return Err("need steps >= 2 and x_max > 0".to_string());
    }
    let x: Vec<f64> = (0..steps).map(|i| x_max * i as f64 / (steps - 1) as f64).collect();
    let pdf = x.iter().map(|&t| ncchisq_pdf(v, delta, t)).collect::<Result<Vec<_>, _>>().map_err(fail)?;
    let cdf = x.iter().map(|&t| ncchisq_cdf(v, delta, t)).collect::<Result<Vec<_>, _>>().map_err(fail)?;
    let critical = chisq_quantile(v, alpha).map_err(fail)?;
    to_js(&Density { x, pdf, cdf, critical })
}

#[derive(Serialize)]
struct FitRow {
    estimator: String,
    beta1: Vec<f64>,
    loss: f64,
}

#[derive(Serialize)]
struct Demo {
    beta1: Vec<f64>,
    d: f64,
    l_n: f64,
    critical: f64,
    stein_factor: f64,
    fits: Vec<FitRow>,
}

/// One simulated data set under the benchmark design, fitted with every
/// shrinkage estimator; reports `beta1` estimates and their squared errors.
pub fn shrinkage_demo_json(n: usize, p1: usize, p2: usize, rho: f64, delta_star: f64, seed: u64) -> Result<String, String> {
    if p1 == 0 || p2 < 3 || n <= p1 + p2 {
        return Err("need p1 >= 1, p2 >= 3 and n > p1 + p2".to_string());
    }
    let mut g = rng::stream(seed, &[0x7765_6264]);
    let x = generate_design(n, p1 + p2, rho, &mut g).map_err(fail)?;
    let beta = true_beta(p1, p2, delta_star);
    let noise = generate_design(n, 1, 0.0, &mut g).map_err(fail)?;
    let y = &x * &beta + noise.column(0);
    let spec = PartitionSpec::leading(p1, p2);
    let fit = fit_shrinkage(&x, &y, &spec, &ShrinkageConfig::default()).map_err(fail)?;
    let truth = beta.rows(0, p1).into_owned();
    let fits = Estimator::SHRINKAGE
        .into_iter()
        .chain([Estimator::Lse, Estimator::RidgeFm])
        .map(|k| {
            let b = fit.beta1(k)?;
            Ok(FitRow { estimator: k.label().to_string(), loss: (&b - &truth).norm_squared(), beta1: b.iter().copied().collect() })
        })
        .collect::<Result<Vec<_>, liushrink::Error>>()
        .map_err(fail)?;
    let q = p2 as f64 - 2.0;
    to_js(&Demo { beta1: truth.iter().copied().collect(), d: fit.d, l_n: fit.l_n, critical: fit.critical, stein_factor: 1.0 - q / fit.l_n, fits })
}

#[wasm_bindgen]
pub fn risk_curves(p1: usize, p2: usize, rho: f64, d: f64, alpha: f64, delta_max: f64, steps: usize, printed: bool) -> Result<String, JsError> {
    risk_curves_json(p1, p2, rho, d, alpha, delta_max, steps, printed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn chi_square(v: u32, delta: f64, x_max: f64, steps: usize, alpha: f64) -> Result<String, JsError> {
    chi_square_json(v, delta, x_max, steps, alpha).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn shrinkage_demo(n: usize, p1: usize, p2: usize, rho: f64, delta_star: f64, seed: u64) -> Result<String, JsError> {
    shrinkage_demo_json(n, p1, p2, rho, delta_star, seed).map_err(|e| JsError::new(&e))
}
