//! Real-data pipeline: sub-model choice by stepwise AIC, bootstrap with
//! K-fold cross-validated prediction error, coefficient summaries, and
//! covariate correlations.
//!
//! Each bootstrap replicate resamples raw rows, then standardizes inside
//! every training fold. Predictions add back the training response mean.

use std::path::Path;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::estimators::{fit_shrinkage, lse, Estimator, ShrinkageConfig};
use crate::linalg::{Mat, Vector};
use crate::model::{Dataset, PartitionSpec, StandardizationTransform};
use crate::penalized::{cv_tune, default_grid, default_pilot, fold_assignment, PenaltyMethod};
use crate::rng;
use crate::simulation::PenalizedSettings;

/// Resample draws tried before a replicate is declared degenerate.
pub const MAX_RESAMPLE_ATTEMPTS: usize = 10;

pub fn load_table(path: &Path, response: &str) -> Result<Dataset> {
    Dataset::load_csv(path, response)
}

/// `n log(RSS / n) + 2k`, `k` counting the intercept.
fn aic(x: &Mat, y: &Vector, cols: &[usize]) -> Result<f64> {
    let n = x.nrows();
    let mut design = Mat::from_element(n, cols.len() + 1, 1.0);
    for (k, &j) in cols.iter().enumerate() {
        design.set_column(k + 1, &x.column(j));
    }
    let b = lse(&design, y)?;
    let rss = (y - &design * b).norm_squared();
    let nf = n as f64;
    Ok(nf * (rss / nf).ln() + 2.0 * (cols.len() + 1) as f64)
}

/// Bidirectional stepwise AIC from the full model. The retained covariates
/// form the main block, the dropped ones the nuisance block. If every
/// covariate is dropped the single best one is kept.
pub fn select_submodel(dataset: &Dataset) -> Result<PartitionSpec> {
    let (x, y) = (dataset.x(), dataset.y());
    let p = dataset.p();
    if p == 0 {
        return Err(Error::InvalidInput("no covariates".into()));
    }
    if dataset.n() <= p + 1 {
        return Err(Error::InvalidInput(format!("n = {} too small for {} covariates plus intercept", dataset.n(), p)));
    }
    let mut current: Vec<usize> = (0..p).collect();
    let mut best = aic(x, y, &current)?;
    loop {
        let mut step: Option<(f64, Vec<usize>)> = None;
        let mut consider = |cand: Vec<usize>| -> Result<()> {
            let a = aic(x, y, &cand)?;
            if a < step.as_ref().map_or(best, |s| s.0) {
                step = Some((a, cand));
            }
            Ok(())
        };
        for k in 0..current.len() {
            let mut cand = current.clone();
            cand.remove(k);
            consider(cand)?;
        }
        for j in (0..p).filter(|j| !current.contains(j)) {
            let mut cand = current.clone();
            cand.push(j);
            cand.sort_unstable();
            consider(cand)?;
        }
        match step {
            Some((a, cand)) => {
                best = a;
                current = cand;
            }
            None => break,
        }
    }
    if current.is_empty() {
        let mut single = (f64::INFINITY, 0);
        for j in 0..p {
            let a = aic(x, y, &[j])?;
            if a < single.0 {
                single = (a, j);
            }
        }
        current.push(single.1);
    }
    let nuisance = (0..p).filter(|j| !current.contains(j)).collect();
    Ok(PartitionSpec::new(current, nuisance))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BootstrapConfig {
    pub b: usize,
    pub folds: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    pub sub_model: PartitionSpec,
    /// Inner CV and grid for the penalized estimators.
    pub penalized: PenalizedSettings,
    /// Fit the standardization on the whole resample instead of the
    /// training fold; used only to check that the guard matters.
    pub leakage_audit: bool,
}

/// Estimators reported for the real-data example, LFM first.
pub const DEFAULT_SET: [Estimator; 10] = [
    Estimator::Lfm,
    Estimator::Lsm,
    Estimator::Lpt,
    Estimator::Ls,
    Estimator::Lps,
    Estimator::Lse,
    Estimator::RidgeFm,
    Estimator::Lasso,
    Estimator::AdaptiveLasso,
    Estimator::Scad,
];

impl BootstrapConfig {
    pub fn new(sub_model: PartitionSpec, seed: u64) -> Self {
        Self { b: 1000, folds: 10, seed, estimators: DEFAULT_SET.to_vec(), sub_model, penalized: PenalizedSettings::default(), leakage_audit: false }
    }

    pub fn validate(&self, n: usize, p: usize) -> Result<()> {
        if self.b == 0 {
            return Err(Error::InvalidInput("B must be >= 1".into()));
        }
        if self.folds < 2 || self.folds > n {
            return Err(Error::InvalidInput(format!("folds = {} outside [2, n = {n}]", self.folds)));
        }
        self.sub_model.validate(p)?;
        if self.sub_model.p2() == 0 {
            return Err(Error::InvalidInput("sub-model keeps every covariate; nothing to shrink".into()));
        }
        Ok(())
    }
}

/// Bootstrap prediction-error summary, one entry per estimator (LFM first).
#[derive(Debug, Clone, PartialEq)]
pub struct PEResult {
    pub estimators: Vec<Estimator>,
    /// `"(intercept)"` followed by the covariate names.
    pub coef_names: Vec<String>,
    pub mean_pe: Vec<f64>,
    pub rpe: Vec<f64>,
    /// Minimum, quartiles and maximum of the replicate PEs.
    pub quantiles: Vec<[f64; 5]>,
    pub pe_samples: Vec<Vec<f64>>,
    /// Fit on the original data: intercept then standardized slopes.
    pub estimate: Vec<Vector>,
    pub boot_mean: Vec<Vector>,
    pub bias: Vec<Vector>,
    pub se: Vec<Vector>,
    pub redraws: usize,
}

impl PEResult {
    pub fn index(&self, kind: Estimator) -> Option<usize> {
        self.estimators.iter().position(|&k| k == kind)
    }
    pub fn rpe_of(&self, kind: Estimator) -> Option<f64> {
        self.index(kind).map(|i| self.rpe[i])
    }
}

fn penalized_full(kind: Estimator, x: &Mat, y: &Vector, pen: &PenalizedSettings, seed: u64) -> Result<Vector> {
    let method = match kind {
        Estimator::Lasso => PenaltyMethod::Lasso,
        Estimator::AdaptiveLasso => PenaltyMethod::AdaptiveLasso,
        _ => PenaltyMethod::Scad,
    };
    let pilot = match method {
        PenaltyMethod::AdaptiveLasso => Some(default_pilot(x, y)?),
        _ => None,
    };
    let grid = default_grid(method, x, y, pilot.as_ref(), &pen.penalty, pen.grid_len, pen.grid_ratio);
    let folds = pen.folds.min(x.nrows());
    Ok(cv_tune(method, x, y, &grid, folds, seed, &pen.penalty)?.1)
}

/// Intercept and standardized slopes for every estimator on one dataset,
/// using `tf` for the standardization.
fn fit_coefficients(
    data: &Dataset,
    tf: &StandardizationTransform,
    kinds: &[Estimator],
    spec: &PartitionSpec,
    cfg: &ShrinkageConfig,
    pen: &PenalizedSettings,
    seed: u64,
) -> Result<Vec<Vector>> {
    let xs = tf.apply_x(data.x());
    let yc = tf.apply_y(data.y());
    let fit = fit_shrinkage(&xs, &yc, spec, cfg)?;
    let mut out = Vec::with_capacity(kinds.len());
    for &k in kinds {
        let slopes = if k.is_penalized() { penalized_full(k, &xs, &yc, pen, seed)? } else { fit.full(k)? };
        let mut c = Vector::zeros(slopes.len() + 1);
        c[0] = tf.y_mean;
        c.rows_mut(1, slopes.len()).copy_from(&slopes);
        out.push(c);
    }
    Ok(out)
}

struct Replicate {
    pe: Vec<f64>,
    coef: Vec<Vector>,
    redraws: usize,
}

fn has_constant_column(d: &Dataset) -> bool {
    let x = d.x();
    (0..x.ncols()).any(|j| {
        let c = x.column(j);
        c.iter().all(|&v| v == c[0])
    })
}

/// Mean squared K-fold CV prediction error per estimator on one resample.
fn cv_prediction_error(data: &Dataset, cfg: &BootstrapConfig, shrink: &ShrinkageConfig, fold_seed: u64, inner_seed: u64) -> Result<Vec<f64>> {
    let n = data.n();
    let labels = fold_assignment(n, cfg.folds, fold_seed)?;
    let kinds = &cfg.estimators;
    let mut sse = vec![0.0; kinds.len()];
    let audit_tf = if cfg.leakage_audit { Some(StandardizationTransform::fit(data)?) } else { None };
    for f in 0..cfg.folds {
        let train_idx: Vec<usize> = (0..n).filter(|&i| labels[i] != f).collect();
        let test_idx: Vec<usize> = (0..n).filter(|&i| labels[i] == f).collect();
        if test_idx.is_empty() {
            continue;
        }
        let train = data.rows(&train_idx);
        let test = data.rows(&test_idx);
        let tf = match &audit_tf {
            Some(t) => t.clone(),
            None => StandardizationTransform::fit(&train)?,
        };
        let coefs = fit_coefficients(&train, &tf, kinds, &cfg.sub_model, shrink, &cfg.penalized, inner_seed ^ f as u64)?;
        let xs = tf.apply_x(test.x());
        for (k, c) in coefs.iter().enumerate() {
            let slopes = c.rows(1, c.len() - 1);
            let pred = (&xs * slopes).add_scalar(tf.y_mean);
            sse[k] += (test.y() - pred).norm_squared();
        }
    }
    Ok(sse.into_iter().map(|s| s / n as f64).collect())
}

fn replicate(data: &Dataset, cfg: &BootstrapConfig, shrink: &ShrinkageConfig, r: usize) -> Result<Replicate> {
    let n = data.n();
    let mut last = None;
    for attempt in 0..MAX_RESAMPLE_ATTEMPTS {
        let mut g = rng::stream(cfg.seed, &[r as u64, attempt as u64]);
        let idx: Vec<usize> = (0..n).map(|_| rand::Rng::random_range(&mut g, 0..n)).collect();
        let fold_seed = rand::RngCore::next_u64(&mut g);
        let inner_seed = rand::RngCore::next_u64(&mut g);
        let sample = data.rows(&idx);
        if has_constant_column(&sample) {
            last = Some(Error::DegenerateColumn("bootstrap resample".into()));
            continue;
        }
        let attempt_fit = || -> Result<Replicate> {
            let pe = cv_prediction_error(&sample, cfg, shrink, fold_seed, inner_seed)?;
            let tf = StandardizationTransform::fit(&sample)?;
            let coef = fit_coefficients(&sample, &tf, &cfg.estimators, &cfg.sub_model, shrink, &cfg.penalized, inner_seed)?;
            Ok(Replicate { pe, coef, redraws: attempt })
        };
        match attempt_fit() {
            Ok(rep) => return Ok(rep),
            Err(e @ (Error::DegenerateColumn(_) | Error::Singular(_))) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidInput(format!(
        "bootstrap replicate {r}: no usable resample in {MAX_RESAMPLE_ATTEMPTS} attempts ({})",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn bootstrap_pe(dataset: &Dataset, cfg: &BootstrapConfig, shrink: &ShrinkageConfig) -> Result<PEResult> {
    cfg.validate(dataset.n(), dataset.p())?;
    let mut kinds = vec![Estimator::Lfm];
    kinds.extend(cfg.estimators.iter().copied().filter(|&k| k != Estimator::Lfm));
    let cfg = BootstrapConfig { estimators: kinds.clone(), ..cfg.clone() };
    if cfg.sub_model.p2() < 3 && kinds.iter().any(|k| k.needs_p2_at_least_3()) {
        return Err(Error::Unsupported(format!("LS/LPS requested with p2 = {}", cfg.sub_model.p2())));
    }

    let tf = StandardizationTransform::fit(dataset)?;
    let estimate = fit_coefficients(dataset, &tf, &kinds, &cfg.sub_model, shrink, &cfg.penalized, cfg.seed)?;

    let run = |r: usize| replicate(dataset, &cfg, shrink, r);
    #[cfg(feature = "parallel")]
    let reps: Vec<Result<Replicate>> = {
        use rayon::prelude::*;
        (0..cfg.b).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let reps: Vec<Result<Replicate>> = (0..cfg.b).map(run).collect();
    let reps = reps.into_iter().collect::<Result<Vec<_>>>()?;

    let k = kinds.len();
    let dim = dataset.p() + 1;
    let bf = cfg.b as f64;
    let mut pe_samples = vec![Vec::with_capacity(cfg.b); k];
    let mut sum = vec![Vector::zeros(dim); k];
    let mut sq = vec![Vector::zeros(dim); k];
    let mut redraws = 0;
    for rep in &reps {
        redraws += rep.redraws;
        for i in 0..k {
            pe_samples[i].push(rep.pe[i]);
            sum[i] += &rep.coef[i];
            sq[i] += rep.coef[i].component_mul(&rep.coef[i]);
        }
    }
    let mean_pe: Vec<f64> = pe_samples.iter().map(|s| s.iter().sum::<f64>() / bf).collect();
    let rpe = mean_pe.iter().map(|m| m / mean_pe[0]).collect();
    let quantiles = pe_samples
        .iter()
        .map(|s| {
            let mut v = s.clone();
            v.sort_by(|a, b| a.total_cmp(b));
            [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile(&v, q))
        })
        .collect();
    let boot_mean: Vec<Vector> = sum.iter().map(|s| s / bf).collect();
    let se = (0..k)
        .map(|i| {
            let denom = (bf - 1.0).max(1.0);
            (&sq[i] - boot_mean[i].component_mul(&boot_mean[i]) * bf).map(|v| (v.max(0.0) / denom).sqrt())
        })
        .collect();
    let bias = (0..k).map(|i| &boot_mean[i] - &estimate[i]).collect();
    let mut coef_names = vec!["(intercept)".to_string()];
    coef_names.extend(dataset.names().iter().cloned());
    Ok(PEResult { estimators: kinds, coef_names, mean_pe, rpe, quantiles, pe_samples, estimate, boot_mean, bias, se, redraws })
}

/// Pairwise Pearson correlations of the covariates with two-sided t-test
/// p-values.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    pub names: Vec<String>,
    pub r: Mat,
    pub p_value: Mat,
    pub level: f64,
}

impl CorrelationTable {
    pub fn significant(&self, i: usize, j: usize) -> bool {
        self.p_value[(i, j)] < self.level
    }
}

pub fn correlation_matrix(dataset: &Dataset) -> Result<CorrelationTable> {
    let n = dataset.n();
    if n < 3 {
        return Err(Error::InvalidInput(format!("n = {n} < 3")));
    }
    let x = dataset.x();
    let p = x.ncols();
    let mut z = x.clone();
    for j in 0..p {
        let mut c = z.column_mut(j);
        let m = c.mean();
        c.add_scalar_mut(-m);
        let s = c.norm();
        if !(s > 0.0) {
            return Err(Error::DegenerateColumn(dataset.names()[j].clone()));
        }
        c /= s;
    }
    let mut r = z.tr_mul(&z);
    let t = StudentsT::new(0.0, 1.0, (n - 2) as f64).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut pv = Mat::zeros(p, p);
    for i in 0..p {
        r[(i, i)] = 1.0;
        for j in 0..p {
            let rij = r[(i, j)].clamp(-1.0, 1.0);
            r[(i, j)] = rij;
            let q = 1.0 - rij * rij;
            pv[(i, j)] = if q <= 0.0 {
                0.0
            } else {
                let stat = rij.abs() * ((n - 2) as f64 / q).sqrt();
                (2.0 * t.sf(stat)).min(1.0)
            };
        }
    }
    Ok(CorrelationTable { names: dataset.names().to_vec(), r, p_value: pv, level: 0.05 })
}
