//! Lasso, adaptive lasso and SCAD by cyclic coordinate descent, with
//! k-fold cross-validated penalty selection.
//!
//! The loss is the plain residual sum of squares `sum (y - X b)^2`:
//! lasso minimizes `RSS + lambda sum |b_j|`, the adaptive lasso
//! `RSS + lambda sum w_j |b_j|`, and SCAD `RSS + 2n sum p(|b_j|)` with the
//! usual clipped penalty `p`, so the SCAD `lambda` lives on the coefficient
//! scale. When `X'X = n I` the SCAD solution is the classical three-branch
//! thresholding of the least-squares coefficient.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::estimators::{gcv_ridge_lambda, lse, ridge};
use crate::linalg::{log_grid, select_rows, Mat, Vector};
use crate::model::{condition_number, MULTICOLLINEARITY_THRESHOLD};
use crate::rng;

/// Adaptive-lasso weights for zero pilot coefficients are capped here.
pub const MAX_ADAPTIVE_WEIGHT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PenaltyConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub a: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self { lambda: 0.0, gamma: 1.0, a: 3.7, max_iter: 100_000, tol: 1e-7 }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidInput(format!("lambda = {} must be >= 0", self.lambda)));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidInput(format!("gamma = {} must be > 0", self.gamma)));
        }
        if !(self.a > 2.0) {
            return Err(Error::InvalidInput(format!("SCAD shape a = {} must exceed 2", self.a)));
        }
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidInput("max_iter and tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PenaltyMethod {
    Lasso,
    AdaptiveLasso,
    Scad,
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
enum Penalty {
    /// Per-coordinate L1 weights `lambda_j`.
    L1(Vec<f64>),
    Scad {
        lambda: f64,
        a: f64,
        n: f64,
    },
}

impl Penalty {
    /// Minimizer of `v b^2 - 2 z b + pen(b)` for coordinate `j`.
    fn update(&self, j: usize, z: f64, v: f64) -> f64 {
        match self {
            Penalty::L1(w) => soft_threshold(z, 0.5 * w[j]) / v,
            &Penalty::Scad { lambda, a, n } => scad_update(z / n, v / n, lambda, a),
        }
    }

    fn value(&self, beta: &Vector) -> f64 {
        match self {
            Penalty::L1(w) => beta.iter().zip(w).map(|(b, w)| w * b.abs()).sum(),
            &Penalty::Scad { lambda, a, n } => beta.iter().map(|b| 2.0 * n * scad_penalty(b.abs(), lambda, a)).sum(),
        }
    }

    /// Largest stationarity violation given `g_j = 2 x_j' r`.
    fn kkt(&self, beta: &Vector, grad: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for (j, (&b, &g)) in beta.iter().zip(grad).enumerate() {
            let viol = match self {
                Penalty::L1(w) => {
                    if b == 0.0 {
                        (g.abs() - w[j]).max(0.0)
                    } else {
                        (g - w[j] * b.signum()).abs()
                    }
                }
                &Penalty::Scad { lambda, a, n } => {
                    if b == 0.0 {
                        (g.abs() - 2.0 * n * lambda).max(0.0)
                    } else {
                        (g - 2.0 * n * scad_derivative(b.abs(), lambda, a) * b.signum()).abs()
                    }
                }
            };
            worst = worst.max(viol);
        }
        worst
    }
}

/// Exact minimizer of `v b^2 - 2 z b + 2 p(|b|)` over each SCAD piece.
/// When `v <= 1/(a-1)` the middle piece is concave, so its ends are tried
/// instead of its stationary point.
fn scad_update(z: f64, v: f64, lambda: f64, a: f64) -> f64 {
    let az = z.abs();
    let s = z.signum();
    let f = |t: f64| v * t * t - 2.0 * az * t + 2.0 * scad_penalty(t, lambda, a);
    let curv = v - 1.0 / (a - 1.0);
    let mut cands = [(az - lambda).max(0.0) / v, lambda, a * lambda, (az / v).max(a * lambda), lambda];
    cands[0] = cands[0].min(lambda);
    if curv > 0.0 {
        cands[4] = ((az - a * lambda / (a - 1.0)) / curv).clamp(lambda, a * lambda);
    }
    let best = cands.iter().copied().fold((0.0, f(0.0)), |(bt, bf), t| {
        let ft = f(t);
        if ft < bf {
            (t, ft)
        } else {
            (bt, bf)
        }
    });
    s * best.0
}

pub fn scad_penalty(t: f64, lambda: f64, a: f64) -> f64 {
    if t <= lambda {
        lambda * t
    } else if t <= a * lambda {
        (2.0 * a * lambda * t - t * t - lambda * lambda) / (2.0 * (a - 1.0))
    } else {
        0.5 * (a + 1.0) * lambda * lambda
    }
}

pub fn scad_derivative(t: f64, lambda: f64, a: f64) -> f64 {
    if t <= lambda {
        lambda
    } else if t <= a * lambda {
        (a * lambda - t) / (a - 1.0)
    } else {
        0.0
    }
}

/// Penalized objective at `beta`.
pub fn objective(method: PenaltyMethod, x: &Mat, y: &Vector, beta: &Vector, lambda: f64, weights: Option<&[f64]>, cfg: &PenaltyConfig) -> f64 {
    let pen = penalty_for(method, x.nrows(), x.ncols(), lambda, weights, cfg);
    (y - x * beta).norm_squared() + pen.value(beta)
}

fn penalty_for(method: PenaltyMethod, n: usize, p: usize, lambda: f64, weights: Option<&[f64]>, cfg: &PenaltyConfig) -> Penalty {
    match method {
        PenaltyMethod::Lasso => Penalty::L1(vec![lambda; p]),
        PenaltyMethod::AdaptiveLasso => {
            let w = weights.map_or_else(|| vec![1.0; p], |w| w.to_vec());
            Penalty::L1(w.iter().map(|w| lambda * w).collect())
        }
        PenaltyMethod::Scad => Penalty::Scad { lambda, a: cfg.a, n: n as f64 },
    }
}

/// Solver trace, useful for diagnostics and tests.
#[derive(Debug, Clone)]
pub struct CdResult {
    pub beta: Vector,
    pub sweeps: usize,
    pub kkt_residual: f64,
    pub objective_trace: Vec<f64>,
}

fn coordinate_descent(x: &Mat, y: &Vector, pen: &Penalty, start: Option<&Vector>, cfg: &PenaltyConfig, trace: bool) -> Result<CdResult> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("X has {} rows, y has {}", x.nrows(), y.len())));
    }
    let p = x.ncols();
    let norms: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
    let mut beta = start.cloned().unwrap_or_else(|| Vector::zeros(p));
    let mut r = y - x * &beta;
    let mut objective_trace = Vec::new();
    if trace {
        objective_trace.push(r.norm_squared() + pen.value(&beta));
    }
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut max_change = 0.0_f64;
        for j in 0..p {
            let v = norms[j];
            if v == 0.0 {
                beta[j] = 0.0;
                continue;
            }
            let col = x.column(j);
            let old = beta[j];
            let z = col.dot(&r) + v * old;
            let new = pen.update(j, z, v);
            if new != old {
                r.axpy(old - new, &col, 1.0);
                beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if trace {
            objective_trace.push(r.norm_squared() + pen.value(&beta));
        }
        if max_change < cfg.tol {
            break;
        }
        if sweeps >= cfg.max_iter {
            let grad: Vec<f64> = x.column_iter().map(|c| 2.0 * c.dot(&r)).collect();
            return Err(Error::NoConvergence { iterations: sweeps, kkt_residual: pen.kkt(&beta, &grad) });
        }
    }
    let grad: Vec<f64> = x.column_iter().map(|c| 2.0 * c.dot(&r)).collect();
    Ok(CdResult { kkt_residual: pen.kkt(&beta, &grad), beta, sweeps, objective_trace })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("penalty {lambda} must be finite and >= 0")))
    }
}

pub fn lasso(x: &Mat, y: &Vector, lambda: f64, cfg: &PenaltyConfig) -> Result<Vector> {
    check_lambda(lambda)?;
    cfg.validate()?;
    Ok(coordinate_descent(x, y, &penalty_for(PenaltyMethod::Lasso, x.nrows(), x.ncols(), lambda, None, cfg), None, cfg, false)?.beta)
}

/// `1 / |pilot_j|^gamma`, capped at [`MAX_ADAPTIVE_WEIGHT`].
pub fn adaptive_weights(pilot: &Vector, gamma: f64) -> Vec<f64> {
    pilot.iter().map(|b| (1.0 / b.abs().powf(gamma)).min(MAX_ADAPTIVE_WEIGHT)).collect()
}

pub fn adaptive_lasso(x: &Mat, y: &Vector, lambda: f64, pilot: &Vector, cfg: &PenaltyConfig) -> Result<Vector> {
    check_lambda(lambda)?;
    cfg.validate()?;
    if pilot.len() != x.ncols() {
        return Err(Error::Dimension(format!("pilot length {} for p = {}", pilot.len(), x.ncols())));
    }
    let w = adaptive_weights(pilot, cfg.gamma);
    let pen = penalty_for(PenaltyMethod::AdaptiveLasso, x.nrows(), x.ncols(), lambda, Some(&w), cfg);
    Ok(coordinate_descent(x, y, &pen, None, cfg, false)?.beta)
}

pub fn scad(x: &Mat, y: &Vector, lambda: f64, cfg: &PenaltyConfig) -> Result<Vector> {
    check_lambda(lambda)?;
    cfg.validate()?;
    Ok(coordinate_descent(x, y, &penalty_for(PenaltyMethod::Scad, x.nrows(), x.ncols(), lambda, None, cfg), None, cfg, false)?.beta)
}

/// Full solver output, including per-sweep objective values.
pub fn solve_traced(method: PenaltyMethod, x: &Mat, y: &Vector, lambda: f64, pilot: Option<&Vector>, cfg: &PenaltyConfig) -> Result<CdResult> {
    check_lambda(lambda)?;
    cfg.validate()?;
    let w = pilot.map(|p| adaptive_weights(p, cfg.gamma));
    let pen = penalty_for(method, x.nrows(), x.ncols(), lambda, w.as_deref(), cfg);
    coordinate_descent(x, y, &pen, None, cfg, true)
}

/// Least squares when `X'X` is well conditioned, GCV ridge otherwise.
pub fn default_pilot(x: &Mat, y: &Vector) -> Result<Vector> {
    match condition_number(x) {
        Ok(cn) if cn.value <= MULTICOLLINEARITY_THRESHOLD => lse(x, y),
        _ => ridge(x, y, gcv_ridge_lambda(x, y)?),
    }
}

/// Smallest penalty that zeroes every coefficient.
pub fn lambda_max(method: PenaltyMethod, x: &Mat, y: &Vector, weights: Option<&[f64]>) -> f64 {
    let xty = x.tr_mul(y);
    match method {
        PenaltyMethod::Lasso => 2.0 * xty.amax(),
        PenaltyMethod::AdaptiveLasso => {
            let w = weights.map_or_else(|| vec![1.0; xty.len()], |w| w.to_vec());
            xty.iter().zip(&w).map(|(c, w)| 2.0 * c.abs() / w).fold(0.0, f64::max)
        }
        PenaltyMethod::Scad => xty.amax() / x.nrows() as f64,
    }
}

/// `len` log-spaced penalties from `lambda_max` down to `lambda_max * ratio`.
pub fn default_grid(method: PenaltyMethod, x: &Mat, y: &Vector, pilot: Option<&Vector>, cfg: &PenaltyConfig, len: usize, ratio: f64) -> Vec<f64> {
    let w = pilot.map(|p| adaptive_weights(p, cfg.gamma));
    let hi = lambda_max(method, x, y, w.as_deref()).max(f64::MIN_POSITIVE);
    log_grid(hi * ratio, hi, len)
}

/// Fits along `grid` from the largest penalty down with warm starts;
/// returns coefficients in the grid's own order.
fn path(method: PenaltyMethod, x: &Mat, y: &Vector, grid: &[f64], pilot: Option<&Vector>, cfg: &PenaltyConfig) -> Result<Vec<Vector>> {
    let w = pilot.map(|p| adaptive_weights(p, cfg.gamma));
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));
    let mut out = vec![Vector::zeros(x.ncols()); grid.len()];
    let mut warm: Option<Vector> = None;
    for i in order {
        let pen = penalty_for(method, x.nrows(), x.ncols(), grid[i], w.as_deref(), cfg);
        let fit = coordinate_descent(x, y, &pen, warm.as_ref(), cfg, false)?;
        warm = Some(fit.beta.clone());
        out[i] = fit.beta;
    }
    Ok(out)
}

/// Seeded fold labels: a random permutation dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::InvalidInput(format!("{folds} folds leave some fold empty with n = {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::stream(seed, &[n as u64, folds as u64]));
    let mut label = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        label[i] = pos % folds;
    }
    Ok(label)
}

/// Cross-validated penalty choice and the refit on all rows.
///
/// Ties in mean squared prediction error keep the earliest grid entry.
/// The adaptive-lasso pilot comes from [`default_pilot`], refitted on each
/// training fold.
pub fn cv_tune(method: PenaltyMethod, x: &Mat, y: &Vector, grid: &[f64], folds: usize, seed: u64, cfg: &PenaltyConfig) -> Result<(f64, Vector)> {
    cfg.validate()?;
    if grid.is_empty() {
        return Err(Error::InvalidInput("penalty grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidInput(format!("grid value {bad} is not a valid penalty")));
    }
    let n = x.nrows();
    let labels = fold_assignment(n, folds, seed)?;
    let mut sse = vec![0.0; grid.len()];
    for f in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| labels[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| labels[i] == f).collect();
        let (xt, yt) = (select_rows(x, &train), Vector::from_iterator(train.len(), train.iter().map(|&i| y[i])));
        let xv = select_rows(x, &test);
        let yv = Vector::from_iterator(test.len(), test.iter().map(|&i| y[i]));
        let pilot = match method {
            PenaltyMethod::AdaptiveLasso => Some(default_pilot(&xt, &yt)?),
            _ => None,
        };
        for (k, b) in path(method, &xt, &yt, grid, pilot.as_ref(), cfg)?.iter().enumerate() {
            sse[k] += (&yv - &xv * b).norm_squared();
        }
    }
    let mut best = 0;
    for k in 1..grid.len() {
        if sse[k] < sse[best] {
            best = k;
        }
    }
    let lambda = grid[best];
    let beta = match method {
        PenaltyMethod::Lasso => lasso(x, y, lambda, cfg)?,
        PenaltyMethod::AdaptiveLasso => adaptive_lasso(x, y, lambda, &default_pilot(x, y)?, cfg)?,
        PenaltyMethod::Scad => scad(x, y, lambda, cfg)?,
    };
    Ok((lambda, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn orthonormal() -> (Mat, Vector) {
        // Columns of a scaled 4x4 Hadamard matrix.
        let h = Mat::from_row_slice(4, 3, &[1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0, -1.0]) * 0.5;
        let y = Vector::from_vec(vec![3.0, -1.0, 0.4, 2.2]);
        (h, y)
    }

    #[test]
    fn lasso_soft_thresholds_orthonormal_design() {
        let (x, y) = orthonormal();
        let b_ls = x.tr_mul(&y);
        let cfg = PenaltyConfig { tol: 1e-12, ..Default::default() };
        for &lam in &[0.3, 1.0, 2.5] {
            let b = lasso(&x, &y, lam, &cfg).unwrap();
            for j in 0..3 {
                assert_relative_eq!(b[j], soft_threshold(b_ls[j], lam / 2.0), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lasso_zero_above_threshold() {
        let (x, y) = orthonormal();
        let lmax = lambda_max(PenaltyMethod::Lasso, &x, &y, None);
        let b = lasso(&x, &y, lmax, &PenaltyConfig::default()).unwrap();
        assert!(b.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn scad_matches_threshold_rule_on_orthonormal_design() {
        let (h, y) = orthonormal();
        // X'X = n I
        let x = h * 2.0;
        let b_ls = x.tr_mul(&y) / 4.0;
        let cfg = PenaltyConfig { tol: 1e-12, ..Default::default() };
        let a = cfg.a;
        for &lam in &[0.2, 0.5, 0.9, 1.4, 2.1] {
            let b = scad(&x, &y, lam, &cfg).unwrap();
            for j in 0..3 {
                let z: f64 = b_ls[j];
                let expected = if z.abs() <= 2.0 * lam {
                    soft_threshold(z, lam)
                } else if z.abs() <= a * lam {
                    ((a - 1.0) * z - z.signum() * a * lam) / (a - 2.0)
                } else {
                    z
                };
                assert_relative_eq!(b[j], expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn adaptive_lasso_weighted_thresholds() {
        let (x, y) = orthonormal();
        let b_ls = x.tr_mul(&y);
        let pilot = Vector::from_vec(vec![2.0, -0.5, 0.0]);
        let cfg = PenaltyConfig { tol: 1e-12, ..Default::default() };
        let b = adaptive_lasso(&x, &y, 0.4, &pilot, &cfg).unwrap();
        let w = adaptive_weights(&pilot, 1.0);
        assert_eq!(w[2], MAX_ADAPTIVE_WEIGHT);
        for j in 0..3 {
            assert_relative_eq!(b[j], soft_threshold(b_ls[j], 0.4 * w[j] / 2.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn folds_cover_rows_evenly() {
        let labels = fold_assignment(23, 5, 9).unwrap();
        let mut counts = [0; 5];
        for l in &labels {
            counts[*l] += 1;
        }
        assert!(counts.iter().all(|&c| c == 4 || c == 5));
        assert_eq!(labels, fold_assignment(23, 5, 9).unwrap());
        assert!(fold_assignment(3, 5, 9).is_err());
        assert!(fold_assignment(10, 1, 9).is_err());
    }

    #[test]
    fn cv_grid_edge_cases() {
        let (x, y) = orthonormal();
        let x = Mat::from_fn(8, 3, |i, j| x[(i % 4, j)] * if i < 4 { 1.0 } else { 0.9 });
        let y = Vector::from_fn(8, |i, _| y[i % 4] + 0.1 * i as f64);
        let cfg = PenaltyConfig::default();
        let (l, _) = cv_tune(PenaltyMethod::Lasso, &x, &y, &[0.7], 2, 3, &cfg).unwrap();
        assert_eq!(l, 0.7);
        let (l, _) = cv_tune(PenaltyMethod::Lasso, &x, &y, &[0.7, 0.7], 2, 3, &cfg).unwrap();
        assert_eq!(l, 0.7);
        assert!(cv_tune(PenaltyMethod::Lasso, &x, &y, &[], 2, 3, &cfg).is_err());
    }

    #[test]
    fn scad_coordinate_step_is_global() {
        let (lambda, a) = (0.4, 3.7);
        for &v in &[0.1, 0.3, 1.0 / 2.7, 0.5, 1.0, 2.0] {
            for k in -40..=40 {
                let z = k as f64 * 0.05;
                let f = |t: f64| v * t * t - 2.0 * z * t + 2.0 * scad_penalty(t.abs(), lambda, a);
                let b = scad_update(z, v, lambda, a);
                let grid_min = (-8000..=8000).map(|i| f(i as f64 * 1e-3)).fold(f64::INFINITY, f64::min);
                assert!(f(b) <= grid_min + 1e-9, "v={v} z={z}: f({b}) = {} > {grid_min}", f(b));
            }
        }
    }
}
