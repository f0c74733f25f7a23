//! Monte Carlo engine: equicorrelated Gaussian designs, responses under a
//! chosen coefficient vector, per-replicate fits of every requested
//! estimator, and MSE / relative-MSE aggregation.
//!
//! Replicate `r` of a cell draws from its own generator keyed by the master
//! seed, the cell key and `r`. Results are gathered in replicate order and
//! reduced serially, so the worker count never changes the output.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::asymptotics::equicorrelation;
use crate::error::{Error, Result};
use crate::estimators::{fit_shrinkage, Estimator, ShrinkageConfig};
use crate::linalg::{cholesky, select_entries, Mat, Vector};
use crate::model::{condition_number, PartitionSpec};
use crate::penalized::{cv_tune, default_grid, default_pilot, PenaltyConfig, PenaltyMethod};
use crate::rng;

/// Share of failed replicates above which a cell is abandoned.
pub const MAX_FAILURE_SHARE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimulationCell {
    pub n: usize,
    pub p1: usize,
    pub p2: usize,
    pub rho: f64,
    pub delta_star: f64,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
}

impl SimulationCell {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidInput("reps must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidInput(format!("rho = {} outside [0, 1)", self.rho)));
        }
        if self.p1 == 0 || self.p2 == 0 {
            return Err(Error::InvalidInput("p1 and p2 must be >= 1".into()));
        }
        if self.n <= self.p1 + self.p2 {
            return Err(Error::InvalidInput(format!("n = {} must exceed p = {}", self.n, self.p1 + self.p2)));
        }
        if !(self.delta_star >= 0.0 && self.delta_star.is_finite()) {
            return Err(Error::InvalidInput(format!("delta_star = {} must be >= 0", self.delta_star)));
        }
        if self.p2 < 3 && self.estimators.iter().any(|e| e.needs_p2_at_least_3()) {
            return Err(Error::Unsupported(format!("LS/LPS requested with p2 = {}", self.p2)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha = {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }

    fn key(&self) -> [u64; 5] {
        [self.n as u64, self.p1 as u64, self.p2 as u64, self.rho.to_bits(), self.delta_star.to_bits()]
    }

    pub fn label(&self) -> String {
        format!("n={} p1={} p2={} rho={} delta*={}", self.n, self.p1, self.p2, self.rho, self.delta_star)
    }
}

/// Settings for the penalized comparison estimators inside a replicate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PenalizedSettings {
    pub penalty: PenaltyConfig,
    pub folds: usize,
    pub grid_len: usize,
    pub grid_ratio: f64,
}

impl Default for PenalizedSettings {
    fn default() -> Self {
        Self { penalty: PenaltyConfig::default(), folds: 10, grid_len: 30, grid_ratio: 1e-3 }
    }
}

/// `(1^{p1}, delta_star, 0^{p2-1})`
pub fn true_beta(p1: usize, p2: usize, delta_star: f64) -> Vector {
    let mut b = Vector::zeros(p1 + p2);
    for j in 0..p1 {
        b[j] = 1.0;
    }
    if p2 > 0 {
        b[p1] = delta_star;
    }
    b
}

/// Upper factor `A` with `A'A = Sigma` for the equicorrelation matrix.
pub fn design_factor(p: usize, rho: f64) -> Result<Mat> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidInput(format!("rho = {rho} outside [0, 1)")));
    }
    Ok(cholesky(&equicorrelation(p, rho), "Sigma_x")?.l().transpose())
}

fn standard_normal_matrix(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Mat {
    let mut z = Mat::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            z[(i, j)] = StandardNormal.sample(rng);
        }
    }
    z
}

/// `n x p` rows drawn from `N(0, (1 - rho) I + rho 11')`.
pub fn generate_design(n: usize, p: usize, rho: f64, rng: &mut ChaCha8Rng) -> Result<Mat> {
    let a = design_factor(p, rho)?;
    Ok(standard_normal_matrix(n, p, rng) * a)
}

/// Main-block estimates of every requested estimator on one dataset.
pub fn fit_all(
    x: &Mat,
    y: &Vector,
    spec: &PartitionSpec,
    kinds: &[Estimator],
    cfg: &ShrinkageConfig,
    pen: &PenalizedSettings,
    cv_seed: u64,
) -> Result<(Vec<Vector>, f64, f64)> {
    let fit = fit_shrinkage(x, y, spec, cfg)?;
    let mut out = Vec::with_capacity(kinds.len());
    for &k in kinds {
        let b = if k.is_penalized() {
            let method = match k {
                Estimator::Lasso => PenaltyMethod::Lasso,
                Estimator::AdaptiveLasso => PenaltyMethod::AdaptiveLasso,
                _ => PenaltyMethod::Scad,
            };
            let pilot = match method {
                PenaltyMethod::AdaptiveLasso => Some(default_pilot(x, y)?),
                _ => None,
            };
            let grid = default_grid(method, x, y, pilot.as_ref(), &pen.penalty, pen.grid_len, pen.grid_ratio);
            let (_, full) = cv_tune(method, x, y, &grid, pen.folds, cv_seed, &pen.penalty)?;
            select_entries(&full, &spec.main_idx)
        } else {
            fit.beta1(k)?
        };
        out.push(b);
    }
    Ok((out, fit.l_n, fit.critical))
}

/// One successful replicate.
#[derive(Debug, Clone)]
struct Draw {
    errors: Vec<Vector>,
    cn: f64,
    rejected: bool,
}

/// Sums over replicates, reduced in replicate order.
#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub estimators: Vec<Estimator>,
    pub completed: usize,
    pub failed: usize,
    pub loss_sum: Vec<f64>,
    pub loss_sq_sum: Vec<f64>,
    /// Sum of `loss_k * loss_ref` with the first estimator as reference.
    pub loss_cross_sum: Vec<f64>,
    pub error_sum: Vec<Vector>,
    pub error_outer_sum: Vec<Mat>,
    pub cn_sum: f64,
    pub rejections: usize,
}

impl CellStats {
    fn new(kinds: &[Estimator], p1: usize) -> Self {
        let k = kinds.len();
        Self {
            estimators: kinds.to_vec(),
            completed: 0,
            failed: 0,
            loss_sum: vec![0.0; k],
            loss_sq_sum: vec![0.0; k],
            loss_cross_sum: vec![0.0; k],
            error_sum: vec![Vector::zeros(p1); k],
            error_outer_sum: vec![Mat::zeros(p1, p1); k],
            cn_sum: 0.0,
            rejections: 0,
        }
    }

    fn push(&mut self, d: &Draw, w: &Mat) {
        let losses: Vec<f64> = d.errors.iter().map(|e| e.dot(&(w * e))).collect();
        for (k, e) in d.errors.iter().enumerate() {
            self.loss_sum[k] += losses[k];
            self.loss_sq_sum[k] += losses[k] * losses[k];
            self.loss_cross_sum[k] += losses[k] * losses[0];
            self.error_sum[k] += e;
            self.error_outer_sum[k] += e * e.transpose();
        }
        self.cn_sum += d.cn;
        self.rejections += d.rejected as usize;
        self.completed += 1;
    }

    pub fn mean_loss(&self, k: usize) -> f64 {
        self.loss_sum[k] / self.completed as f64
    }

    /// Standard error of the mean loss.
    pub fn loss_se(&self, k: usize) -> f64 {
        let m = self.completed as f64;
        if m < 2.0 {
            return 0.0;
        }
        let mean = self.mean_loss(k);
        let var = (self.loss_sq_sum[k] / m - mean * mean).max(0.0) * m / (m - 1.0);
        (var / m).sqrt()
    }

    /// Ratio of mean losses to the reference and its delta-method SE.
    pub fn ratio(&self, k: usize) -> (f64, f64) {
        let m = self.completed as f64;
        let (a, b) = (self.mean_loss(k), self.mean_loss(0));
        let r = a / b;
        if k == 0 {
            return (1.0, 0.0);
        }
        if m < 2.0 {
            return (r, 0.0);
        }
        let var_a = (self.loss_sq_sum[k] / m - a * a).max(0.0);
        let var_b = (self.loss_sq_sum[0] / m - b * b).max(0.0);
        let cov = self.loss_cross_sum[k] / m - a * b;
        let v = (var_a + r * r * var_b - 2.0 * r * cov).max(0.0) / (b * b) / (m - 1.0);
        (r, v.sqrt())
    }

    pub fn mean_error(&self, k: usize) -> Vector {
        &self.error_sum[k] / self.completed as f64
    }

    /// Mean of `e e'` over replicates.
    pub fn second_moment(&self, k: usize) -> Mat {
        &self.error_outer_sum[k] / self.completed as f64
    }
}

/// The replicate loop shared by every simulation entry point.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    n: usize,
    rho: f64,
    beta: &Vector,
    spec: &PartitionSpec,
    reps: usize,
    seed: u64,
    key: &[u64],
    kinds: &[Estimator],
    cfg: &ShrinkageConfig,
    pen: &PenalizedSettings,
    weight: &Mat,
) -> Result<CellStats> {
    let p = beta.len();
    spec.validate(p)?;
    let a = design_factor(p, rho)?;
    let beta1 = select_entries(beta, &spec.main_idx);
    let one = |r: usize| -> Option<Draw> {
        for attempt in 0..2u64 {
            let mut words = key.to_vec();
            words.extend([r as u64, attempt]);
            let mut g = rng::stream(seed, &words);
            let x = standard_normal_matrix(n, p, &mut g) * &a;
            let eps = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut g));
            let y = &x * beta + eps;
            let cv_seed = g.next_u64();
            let cn = match condition_number(&x) {
                Ok(c) => c.value,
                Err(_) => continue,
            };
            if let Ok((fits, l_n, crit)) = fit_all(&x, &y, spec, kinds, cfg, pen, cv_seed) {
                let errors = fits.into_iter().map(|b| b - &beta1).collect();
                return Some(Draw { errors, cn, rejected: l_n > crit });
            }
        }
        None
    };
    #[cfg(feature = "parallel")]
    let draws: Vec<Option<Draw>> = {
        use rayon::prelude::*;
        (0..reps).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let draws: Vec<Option<Draw>> = (0..reps).map(one).collect();

    let mut stats = CellStats::new(kinds, spec.p1());
    for d in &draws {
        match d {
            Some(d) => stats.push(d, weight),
            None => stats.failed += 1,
        }
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RmseRow {
    pub n: usize,
    pub p1: usize,
    pub p2: usize,
    pub rho: f64,
    pub delta_star: f64,
    pub reps: usize,
    pub failed: usize,
    pub estimators: Vec<Estimator>,
    pub mse: Vec<f64>,
    pub mse_se: Vec<f64>,
    pub rmse: Vec<f64>,
    pub rmse_se: Vec<f64>,
    pub mean_cn: f64,
    pub rejection_rate: f64,
}

impl RmseRow {
    pub fn index(&self, kind: Estimator) -> Option<usize> {
        self.estimators.iter().position(|&k| k == kind)
    }
    pub fn rmse_of(&self, kind: Estimator) -> Option<f64> {
        self.index(kind).map(|i| self.rmse[i])
    }
    pub fn rmse_se_of(&self, kind: Estimator) -> Option<f64> {
        self.index(kind).map(|i| self.rmse_se[i])
    }
}

/// Requested estimators with LFM moved to the front as the reference.
fn with_reference(kinds: &[Estimator]) -> Vec<Estimator> {
    let mut out = vec![Estimator::Lfm];
    for &k in kinds {
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

fn check_failures(label: String, stats: &CellStats, reps: usize) -> Result<()> {
    if stats.failed as f64 > MAX_FAILURE_SHARE * reps as f64 || stats.completed == 0 {
        return Err(Error::CellAborted { cell: label, failed: stats.failed, reps });
    }
    Ok(())
}

/// Relative MSE of `beta1` estimates against LFM for one design cell.
pub fn run_cell(cell: &SimulationCell, cfg: &ShrinkageConfig, pen: &PenalizedSettings) -> Result<RmseRow> {
    cell.validate()?;
    let cfg = ShrinkageConfig { alpha: cell.alpha, ..*cfg };
    cfg.validate()?;
    let kinds = with_reference(&cell.estimators);
    let beta = true_beta(cell.p1, cell.p2, cell.delta_star);
    let spec = PartitionSpec::leading(cell.p1, cell.p2);
    let w = Mat::identity(cell.p1, cell.p1);
    let stats = simulate(cell.n, cell.rho, &beta, &spec, cell.reps, cell.seed, &cell.key(), &kinds, &cfg, pen, &w)?;
    check_failures(cell.label(), &stats, cell.reps)?;
    let k = kinds.len();
    let (mut rmse, mut rmse_se) = (Vec::with_capacity(k), Vec::with_capacity(k));
    for i in 0..k {
        let (r, s) = stats.ratio(i);
        rmse.push(r);
        rmse_se.push(s);
    }
    Ok(RmseRow {
        n: cell.n,
        p1: cell.p1,
        p2: cell.p2,
        rho: cell.rho,
        delta_star: cell.delta_star,
        reps: cell.reps,
        failed: stats.failed,
        mse: (0..k).map(|i| stats.mean_loss(i)).collect(),
        mse_se: (0..k).map(|i| stats.loss_se(i)).collect(),
        rmse,
        rmse_se,
        mean_cn: stats.cn_sum / stats.completed as f64,
        rejection_rate: stats.rejections as f64 / stats.completed as f64,
        estimators: kinds,
    })
}

pub fn run_grid(cells: &[SimulationCell], cfg: &ShrinkageConfig, pen: &PenalizedSettings) -> Result<Vec<RmseRow>> {
    if cells.is_empty() {
        return Err(Error::InvalidInput("empty simulation grid".into()));
    }
    cells.iter().map(|c| run_cell(c, cfg, pen)).collect()
}

/// Estimators compared against the penalized family.
pub const COMPARISON_SET: [Estimator; 9] = [
    Estimator::Lse,
    Estimator::RidgeFm,
    Estimator::Lsm,
    Estimator::Lpt,
    Estimator::Ls,
    Estimator::Lps,
    Estimator::Lasso,
    Estimator::AdaptiveLasso,
    Estimator::Scad,
];

pub fn compare_penalized(cell: &SimulationCell, cfg: &ShrinkageConfig, pen: &PenalizedSettings) -> Result<RmseRow> {
    let cell = SimulationCell { estimators: COMPARISON_SET.to_vec(), ..cell.clone() };
    run_cell(&cell, cfg, pen)
}

/// Large-`n` check under `beta2 = kappa / sqrt(n)`, `beta1 = 1`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LocalAlternativeCell {
    pub n: usize,
    pub p1: usize,
    pub rho: f64,
    pub kappa: Vec<f64>,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
}

/// Per-estimator `n E[(b - beta1)' W (b - beta1)]`, `sqrt(n) E[b - beta1]`
/// and `n E[(b - beta1)(b - beta1)']`, with Monte Carlo errors.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalAlternativeResult {
    pub estimators: Vec<Estimator>,
    pub scaled_risk: Vec<f64>,
    pub scaled_risk_se: Vec<f64>,
    pub scaled_bias: Vec<Vector>,
    pub scaled_bias_se: Vec<Vector>,
    pub scaled_second_moment: Vec<Mat>,
    pub failed: usize,
}

pub fn run_local_alternative(
    cell: &LocalAlternativeCell,
    kinds: &[Estimator],
    cfg: &ShrinkageConfig,
    weight: &Mat,
) -> Result<LocalAlternativeResult> {
    let p2 = cell.kappa.len();
    let p = cell.p1 + p2;
    let rn = (cell.n as f64).sqrt();
    let mut beta = true_beta(cell.p1, p2, 0.0);
    for (k, v) in cell.kappa.iter().enumerate() {
        beta[cell.p1 + k] = v / rn;
    }
    let spec = PartitionSpec::leading(cell.p1, p2);
    let cfg = ShrinkageConfig { alpha: cell.alpha, ..*cfg };
    let mut key = vec![0x10ca1u64, cell.n as u64, cell.p1 as u64, p as u64, cell.rho.to_bits()];
    key.extend(cell.kappa.iter().map(|v| v.to_bits()));
    let stats = simulate(cell.n, cell.rho, &beta, &spec, cell.reps, cell.seed, &key, kinds, &cfg, &PenalizedSettings::default(), weight)?;
    check_failures(format!("local alternative n={}", cell.n), &stats, cell.reps)?;
    let nf = cell.n as f64;
    let m = stats.completed as f64;
    let mut scaled_bias = Vec::new();
    let mut scaled_bias_se = Vec::new();
    let mut scaled_second_moment = Vec::new();
    for k in 0..kinds.len() {
        let mean = stats.mean_error(k);
        let second = stats.second_moment(k);
        let var = Vector::from_fn(cell.p1, |i, _| (second[(i, i)] - mean[i] * mean[i]).max(0.0) * m / (m - 1.0));
        scaled_bias.push(&mean * rn);
        scaled_bias_se.push(var.map(|v| (v / m).sqrt() * rn));
        scaled_second_moment.push(second * nf);
    }
    Ok(LocalAlternativeResult {
        estimators: kinds.to_vec(),
        scaled_risk: (0..kinds.len()).map(|k| nf * stats.mean_loss(k)).collect(),
        scaled_risk_se: (0..kinds.len()).map(|k| nf * stats.loss_se(k)).collect(),
        scaled_bias,
        scaled_bias_se,
        scaled_second_moment,
        failed: stats.failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_layout() {
        assert_eq!(true_beta(2, 3, 2.0).as_slice(), &[1.0, 1.0, 2.0, 0.0, 0.0]);
        let b0 = true_beta(5, 15, 0.0);
        assert_eq!(b0.sum(), 5.0);
        for &ds in &[0.25, 1.0, 2.75, 4.0] {
            assert!(((true_beta(5, 15, ds) - &b0).norm() - ds).abs() < 1e-15);
        }
    }

    #[test]
    fn factor_reproduces_sigma() {
        let a = design_factor(6, 0.6).unwrap();
        let s = a.transpose() * &a;
        assert!((s - equicorrelation(6, 0.6)).amax() < 1e-14);
        assert!(design_factor(3, 1.0).is_err());
    }

    #[test]
    fn single_replicate_is_reproducible() {
        let cell = SimulationCell {
            n: 40,
            p1: 3,
            p2: 4,
            rho: 0.3,
            delta_star: 0.5,
            reps: 1,
            alpha: 0.05,
            seed: 11,
            estimators: Estimator::SHRINKAGE.to_vec(),
        };
        let cfg = ShrinkageConfig::default();
        let pen = PenalizedSettings::default();
        let a = run_cell(&cell, &cfg, &pen).unwrap();
        let b = run_cell(&cell, &cfg, &pen).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rmse[0], 1.0);
    }
}
