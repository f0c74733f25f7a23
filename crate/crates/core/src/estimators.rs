//! Closed-form estimators: least squares, ridge, Liu (joint, sub-model and
//! main-block), the full-vs-sub test statistic, and the pretest, Stein and
//! positive-part combinations.

use std::fmt;
use std::str::FromStr;

use nalgebra::SymmetricEigen;

use crate::distributions::chisq_quantile;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, log_grid, lu_solve, select_entries, spd_solve, Mat, Vector};
use crate::model::{PartitionSpec, PartitionedDesign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Estimator {
    Lse,
    RidgeFm,
    RidgeSm,
    Lfm,
    Lsm,
    Lpt,
    Ls,
    Lps,
    Lasso,
    AdaptiveLasso,
    Scad,
}

impl Estimator {
    pub const SHRINKAGE: [Estimator; 5] = [Self::Lfm, Self::Lsm, Self::Lpt, Self::Ls, Self::Lps];
    pub const PENALIZED: [Estimator; 3] = [Self::Lasso, Self::AdaptiveLasso, Self::Scad];

    pub fn label(self) -> &'static str {
        match self {
            Self::Lse => "LSE",
            Self::RidgeFm => "RFM",
            Self::RidgeSm => "RSM",
            Self::Lfm => "LFM",
            Self::Lsm => "LSM",
            Self::Lpt => "LPT",
            Self::Ls => "LS",
            Self::Lps => "LPS",
            Self::Lasso => "Lasso",
            Self::AdaptiveLasso => "aLasso",
            Self::Scad => "SCAD",
        }
    }

    pub fn is_penalized(self) -> bool {
        Self::PENALIZED.contains(&self)
    }

    /// Kinds that combine LFM and LSM through the test statistic.
    pub fn uses_test(self) -> bool {
        matches!(self, Self::Lpt | Self::Ls | Self::Lps)
    }

    /// Kinds that need at least three nuisance columns.
    pub fn needs_p2_at_least_3(self) -> bool {
        matches!(self, Self::Ls | Self::Lps)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "lse" | "ols" => Self::Lse,
            "rfm" | "ridge" | "ridgefm" => Self::RidgeFm,
            "rsm" | "ridgesm" => Self::RidgeSm,
            "lfm" => Self::Lfm,
            "lsm" => Self::Lsm,
            "lpt" => Self::Lpt,
            "ls" => Self::Ls,
            "lps" => Self::Lps,
            "lasso" => Self::Lasso,
            "alasso" | "adaptive_lasso" | "adaptivelasso" => Self::AdaptiveLasso,
            "scad" => Self::Scad,
            other => return Err(Error::InvalidInput(format!("unknown estimator {other:?}"))),
        })
    }
}

/// A tuning constant that is either pinned or chosen from the data.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Tuning {
    Auto,
    Fixed(f64),
}

/// Which least-squares estimate of the main block the joint Liu
/// estimator of `beta1` shrinks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Beta1Source {
    /// Sub-model least squares `(X1'X1)^{-1} X1'y`.
    AsPrinted,
    /// Main block of the full least-squares fit, `(X1'M2X1)^{-1} X1'M2y`.
    PartialLse,
}

/// How the joint Liu estimate of `beta1` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LfmForm {
    /// Main block of `(X'X + I)^{-1}(X'X + dI) b_lse`.
    FullBlock,
    /// [`liu_full_beta1`] with the `M2L` weighting; unstable for `d < 1`
    /// when `X2'X2` is large, since `X1'M2L X1` is then indefinite.
    Partitioned,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ShrinkageConfig {
    pub d: Tuning,
    pub d1: Tuning,
    pub lambda_r: Tuning,
    pub lambda_r1: Tuning,
    pub alpha: f64,
    pub beta1_source: Beta1Source,
    pub lfm_form: LfmForm,
}

impl Default for ShrinkageConfig {
    fn default() -> Self {
        Self {
            d: Tuning::Auto,
            d1: Tuning::Auto,
            lambda_r: Tuning::Auto,
            lambda_r1: Tuning::Auto,
            alpha: 0.05,
            beta1_source: Beta1Source::PartialLse,
            lfm_form: LfmForm::FullBlock,
        }
    }
}

impl ShrinkageConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("d", self.d), ("d1", self.d1)] {
            if let Tuning::Fixed(v) = t {
                check_d(v).map_err(|_| Error::InvalidInput(format!("{name} = {v} outside (0, 1]")))?;
            }
        }
        for (name, t) in [("lambda_r", self.lambda_r), ("lambda_r1", self.lambda_r1)] {
            if let Tuning::Fixed(v) = t {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidInput(format!("{name} = {v} must be finite and >= 0")));
                }
            }
        }
        check_alpha(self.alpha)
    }
}

fn check_d(d: f64) -> Result<()> {
    if d > 0.0 && d <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("Liu parameter d = {d} outside (0, 1]")))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("ridge penalty {lambda} must be finite and >= 0")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha = {alpha} outside (0, 1)")))
    }
}

fn check_rows(x: &Mat, y: &Vector) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("X has {} rows, y has {}", x.nrows(), y.len())));
    }
    Ok(())
}

/// Least squares via Householder QR.
pub fn lse(x: &Mat, y: &Vector) -> Result<Vector> {
    check_rows(x, y)?;
    let p = x.ncols();
    if p > x.nrows() {
        return Err(Error::Singular("X'X (p > n)".into()));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if r.diagonal().iter().any(|v| v.abs() <= 1e-13 * scale) || scale == 0.0 {
        return Err(Error::Singular("X'X".into()));
    }
    let qty = qr.q().tr_mul(y);
    r.solve_upper_triangular(&qty).ok_or_else(|| Error::Singular("X'X".into()))
}

/// `(X'X + lambda I)^{-1} X'y`
pub fn ridge(x: &Mat, y: &Vector, lambda: f64) -> Result<Vector> {
    check_rows(x, y)?;
    check_lambda(lambda)?;
    let mut g = x.tr_mul(x);
    for i in 0..g.nrows() {
        g[(i, i)] += lambda;
    }
    spd_solve(&g, &x.tr_mul(y), "X'X + lambda I")
}

/// `(G + I)^{-1} (G + dI) b = b - (1 - d)(G + I)^{-1} b`; exact identity at `d = 1`.
fn liu_shrink(g: &Mat, b: &Vector, d: f64, what: &str) -> Result<Vector> {
    if d == 1.0 {
        return Ok(b.clone());
    }
    let mut gi = g.clone();
    for i in 0..gi.nrows() {
        gi[(i, i)] += 1.0;
    }
    let correction = match cholesky(&gi, what) {
        Ok(ch) => ch.solve(b),
        Err(_) => lu_solve(&gi, b, what)?,
    };
    Ok(b - correction * (1.0 - d))
}

/// `(X'X + I)^{-1} (X'X + dI) b_lse`
pub fn liu_full(x: &Mat, y: &Vector, d: f64) -> Result<Vector> {
    check_d(d)?;
    let b = lse(x, y)?;
    liu_shrink(&x.tr_mul(x), &b, d, "X'X + I")
}

/// Sub-model Liu estimate of `beta1`, ignoring `X2`.
pub fn liu_sub_beta1(pd: &PartitionedDesign, y: &Vector, d1: f64) -> Result<Vector> {
    check_d(d1)?;
    check_rows(pd.x1(), y)?;
    let b1 = pd.solve_g11(&pd.x1().tr_mul(y));
    liu_shrink(pd.g11(), &b1, d1, "X1'X1 + I")
}

/// `X1'M2 X1` and `X1'M2 y` from the gram blocks; requires `X2'X2` invertible.
fn partial_normal_equations(pd: &PartitionedDesign, y: &Vector) -> Result<(Mat, Vector)> {
    let x1y = pd.x1().tr_mul(y);
    if pd.p2() == 0 {
        return Ok((pd.g11().clone(), x1y));
    }
    let x2y = pd.x2().tr_mul(y);
    let ch = cholesky(pd.g22(), "X2'X2")?;
    let a = pd.g11() - pd.g12() * ch.solve(&pd.g12().transpose());
    let rhs = x1y - pd.g12() * ch.solve(&x2y);
    Ok((a, rhs))
}

/// Main block of the full least-squares fit (Frisch-Waugh form).
pub fn partial_lse_beta1(pd: &PartitionedDesign, y: &Vector) -> Result<Vector> {
    check_rows(pd.x1(), y)?;
    let (a, rhs) = partial_normal_equations(pd, y)?;
    spd_solve(&a, &rhs, "X1'M2X1")
}

/// `(X1'M2L X1 + I)^{-1} (X1'M2L X1 + dI) b1`, with
/// `M2L = I - X2 (X2'X2 + I)^{-1} (X2'X2 + dI) X2'`.
///
/// `M2L` is not a projector for `d < 1`, so `X1'M2L X1` may be indefinite;
/// the shrink is solved by LU when Cholesky fails.
pub fn liu_full_beta1(pd: &PartitionedDesign, y: &Vector, d: f64, source: Beta1Source) -> Result<Vector> {
    check_d(d)?;
    check_rows(pd.x1(), y)?;
    let b1 = match source {
        Beta1Source::AsPrinted => pd.solve_g11(&pd.x1().tr_mul(y)),
        Beta1Source::PartialLse => partial_lse_beta1(pd, y)?,
    };
    let a = if pd.p2() == 0 {
        pd.g11().clone()
    } else {
        let mut g22i = pd.g22().clone();
        for i in 0..g22i.nrows() {
            g22i[(i, i)] += 1.0;
        }
        let g21 = pd.g12().transpose();
        // (G22 + I)^{-1}(G22 + dI) G21 = G21 - (1 - d)(G22 + I)^{-1} G21
        let inner = &g21 - crate::linalg::spd_solve_mat(&g22i, &g21, "X2'X2 + I")? * (1.0 - d);
        pd.g11() - pd.g12() * inner
    };
    liu_shrink(&a, &b1, d, "X1'M2X1 + I")
}

/// `(X1'M2R X1 + lambda I)^{-1} X1'M2R y` with `M2R = I - X2 (X2'X2 + lambda I)^{-1} X2'`.
pub fn ridge_full_beta1(pd: &PartitionedDesign, y: &Vector, lambda: f64) -> Result<Vector> {
    check_lambda(lambda)?;
    check_rows(pd.x1(), y)?;
    let x1y = pd.x1().tr_mul(y);
    let (mut a, rhs) = if pd.p2() == 0 {
        (pd.g11().clone(), x1y)
    } else {
        let mut g22l = pd.g22().clone();
        for i in 0..g22l.nrows() {
            g22l[(i, i)] += lambda;
        }
        let ch = cholesky(&g22l, "X2'X2 + lambda I")?;
        let a = pd.g11() - pd.g12() * ch.solve(&pd.g12().transpose());
        let rhs = x1y - pd.g12() * ch.solve(&pd.x2().tr_mul(y));
        (a, rhs)
    };
    for i in 0..a.nrows() {
        a[(i, i)] += lambda;
    }
    spd_solve(&a, &rhs, "X1'M2X1 + lambda I")
}

/// `(X1'X1 + lambda1 I)^{-1} X1'y`
pub fn ridge_sub_beta1(x1: &Mat, y: &Vector, lambda1: f64) -> Result<Vector> {
    ridge(x1, y, lambda1)
}

/// Residual variance `|y - X b|^2 / (n - p)`.
pub fn sigma2_hat(x: &Mat, y: &Vector, beta: &Vector) -> Result<f64> {
    check_rows(x, y)?;
    let (n, p) = (x.nrows(), x.ncols());
    if n <= p {
        return Err(Error::InvalidInput(format!("n = {n} must exceed p = {p}")));
    }
    if beta.len() != p {
        return Err(Error::Dimension(format!("coefficient length {} for p = {p}", beta.len())));
    }
    let r = y - x * beta;
    Ok(r.norm_squared() / (n - p) as f64)
}

/// Wald statistic for `beta2 = 0`:
/// `b2' (X2'M1X2) b2 / sigma2` with `b2 = (X2'M1X2)^{-1} X2'M1 y`.
///
/// The gram is unscaled, so under the null this is asymptotically
/// chi-square with `p2` degrees of freedom.
pub fn test_statistic(pd: &PartitionedDesign, y: &Vector, sigma2: f64) -> Result<f64> {
    check_rows(pd.x1(), y)?;
    if pd.p2() == 0 {
        return Err(Error::InvalidInput("test statistic needs a nonempty nuisance block".into()));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidInput(format!("sigma2 = {sigma2} must be positive")));
    }
    let x2m1y = pd.x2().tr_mul(y) - pd.g12().transpose() * pd.solve_g11(&pd.x1().tr_mul(y));
    let b2 = spd_solve(pd.g22_1(), &x2m1y, "X2'M1X2")?;
    Ok((x2m1y.dot(&b2) / sigma2).max(0.0))
}

/// Returns `lsm` when `l_n <= critical`, otherwise `lfm`.
pub fn pretest_at(lfm: &Vector, lsm: &Vector, l_n: f64, critical: f64) -> Vector {
    if l_n <= critical {
        lsm.clone()
    } else {
        lfm.clone()
    }
}

/// Pretest choice with the upper-`alpha` chi-square(`p2`) critical value.
pub fn pretest(lfm: &Vector, lsm: &Vector, l_n: f64, p2: usize, alpha: f64) -> Result<Vector> {
    check_alpha(alpha)?;
    if p2 == 0 {
        return Err(Error::InvalidInput("pretest needs p2 >= 1".into()));
    }
    Ok(pretest_at(lfm, lsm, l_n, chisq_quantile(p2 as u32, alpha)?))
}

/// `1 - (p2 - 2) / l_n`
pub fn stein_factor(l_n: f64, p2: usize) -> Result<f64> {
    if p2 < 3 {
        return Err(Error::Unsupported(format!("Stein shrinkage needs p2 >= 3, got {p2}")));
    }
    if l_n == 0.0 {
        return Err(Error::ZeroStatistic);
    }
    if !(l_n > 0.0) {
        return Err(Error::InvalidInput(format!("test statistic {l_n} must be positive")));
    }
    Ok(1.0 - (p2 as f64 - 2.0) / l_n)
}

fn combine(lfm: &Vector, lsm: &Vector, factor: f64) -> Result<Vector> {
    if lfm.len() != lsm.len() {
        return Err(Error::Dimension("lfm and lsm lengths differ".into()));
    }
    Ok(lsm + (lfm - lsm) * factor)
}

pub fn stein(lfm: &Vector, lsm: &Vector, l_n: f64, p2: usize) -> Result<Vector> {
    combine(lfm, lsm, stein_factor(l_n, p2)?)
}

pub fn positive_part(lfm: &Vector, lsm: &Vector, l_n: f64, p2: usize) -> Result<Vector> {
    let f = stein_factor(l_n, p2)?;
    if f <= 0.0 {
        return Ok(lsm.clone());
    }
    combine(lfm, lsm, f)
}

/// Eigen-decomposition of `X'X` with `X'y`, shared by the data-driven tuners.
struct GramSpectrum {
    values: Vec<f64>,
    /// `V' X'y`
    proj: Vec<f64>,
}

impl GramSpectrum {
    fn new(x: &Mat, y: &Vector) -> Self {
        let eig = SymmetricEigen::new(x.tr_mul(x));
        let proj = eig.eigenvectors.tr_mul(&x.tr_mul(y));
        Self { values: eig.eigenvalues.iter().copied().collect(), proj: proj.iter().copied().collect() }
    }
}

/// Data-driven Liu parameter
/// `1 - s2 sum 1/(l(l+1)) / sum a^2/(l+1)^2`, clamped to `[0.01, 1]`,
/// with `l` the eigenvalues of `X'X` and `a` the least-squares fit in
/// the eigenbasis. Falls back to 1 when the denominator degenerates.
pub fn estimate_d(x: &Mat, y: &Vector) -> Result<f64> {
    check_rows(x, y)?;
    let (n, p) = (x.nrows(), x.ncols());
    if n <= p {
        return Err(Error::InvalidInput(format!("n = {n} must exceed p = {p}")));
    }
    let spec = GramSpectrum::new(x, y);
    let lmax = spec.values.iter().fold(0.0_f64, |m, v| m.max(*v));
    if spec.values.iter().any(|&l| !(l > 1e-12 * lmax)) {
        return Err(Error::Singular("X'X".into()));
    }
    let b = lse(x, y)?;
    let s2 = sigma2_hat(x, y, &b)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&l, &c) in spec.values.iter().zip(&spec.proj) {
        let a = c / l;
        num += 1.0 / (l * (l + 1.0));
        den += a * a / ((l + 1.0) * (l + 1.0));
    }
    let ratio = s2 * num / den;
    if !(den > 0.0) || !ratio.is_finite() {
        return Ok(1.0);
    }
    Ok((1.0 - ratio).clamp(0.01, 1.0))
}

pub const GCV_GRID: (f64, f64, usize) = (1e-4, 1e2, 50);

/// Generalized cross-validation choice of the ridge penalty over
/// [`GCV_GRID`] (ascending; ties keep the smaller penalty).
pub fn gcv_ridge_lambda(x: &Mat, y: &Vector) -> Result<f64> {
    check_rows(x, y)?;
    let n = x.nrows() as f64;
    let spec = GramSpectrum::new(x, y);
    let yy = y.norm_squared();
    let (lo, hi, len) = GCV_GRID;
    let mut grid = log_grid(lo, hi, len);
    grid.reverse();
    let mut best = (f64::INFINITY, grid[0]);
    for &lam in &grid {
        let mut rss = yy;
        let mut tr = 0.0;
        for (&e, &c) in spec.values.iter().zip(&spec.proj) {
            let e = e.max(0.0);
            let s = e + lam;
            rss -= c * c * (2.0 / s - e / (s * s));
            tr += e / s;
        }
        let gcv = n * rss.max(0.0) / (n - tr).powi(2);
        if gcv < best.0 {
            best = (gcv, lam);
        }
    }
    Ok(best.1)
}

/// One estimator's output in the shape reported downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub kind: Estimator,
    pub beta1: Vector,
    pub beta2: Option<Vector>,
    pub l_n: Option<f64>,
    pub sigma2_hat: Option<f64>,
}

/// Every closed-form estimator fitted once on one dataset.
#[derive(Debug, Clone)]
pub struct ShrinkageFit {
    pub spec: PartitionSpec,
    pub d: f64,
    pub d1: f64,
    pub lambda_r: f64,
    pub lambda_r1: f64,
    pub sigma2: f64,
    pub l_n: f64,
    pub critical: f64,
    pub lse1: Vector,
    pub rfm1: Vector,
    pub rsm1: Vector,
    pub lfm1: Vector,
    pub lsm1: Vector,
    pub lpt1: Vector,
    pub ls1: Option<Vector>,
    pub lps1: Option<Vector>,
    /// Full-length vectors in the original column order.
    pub lse_full: Vector,
    pub rfm_full: Vector,
    pub lfm_full: Vector,
    pub lsm_full: Vector,
}

fn resolve(t: Tuning, auto: impl FnOnce() -> Result<f64>) -> Result<f64> {
    match t {
        Tuning::Fixed(v) => Ok(v),
        Tuning::Auto => auto(),
    }
}

fn scatter(p: usize, idx: &[usize], v: &Vector) -> Vector {
    let mut out = Vector::zeros(p);
    for (k, &j) in idx.iter().enumerate() {
        out[j] = v[k];
    }
    out
}

pub fn fit_shrinkage(x: &Mat, y: &Vector, spec: &PartitionSpec, cfg: &ShrinkageConfig) -> Result<ShrinkageFit> {
    cfg.validate()?;
    check_rows(x, y)?;
    let (n, p) = (x.nrows(), x.ncols());
    let pd = PartitionedDesign::new(x, spec)?;
    let p2 = pd.p2();
    if p2 == 0 {
        return Err(Error::InvalidInput("shrinkage fit needs a nonempty nuisance block".into()));
    }
    if n <= p {
        return Err(Error::InvalidInput(format!("n = {n} must exceed p = {p}")));
    }
    let d = resolve(cfg.d, || estimate_d(x, y))?;
    let d1 = resolve(cfg.d1, || estimate_d(pd.x1(), y))?;
    let lambda_r = resolve(cfg.lambda_r, || gcv_ridge_lambda(x, y))?;
    let lambda_r1 = resolve(cfg.lambda_r1, || gcv_ridge_lambda(pd.x1(), y))?;

    let lse_full = lse(x, y)?;
    let lfm_full = liu_shrink(&x.tr_mul(x), &lse_full, d, "X'X + I")?;
    let rfm_full = ridge(x, y, lambda_r)?;
    let sigma2 = sigma2_hat(x, y, &lfm_full)?;
    // An exact fit leaves nothing to test against; keep the full model.
    let l_n = if sigma2 > 0.0 { test_statistic(&pd, y, sigma2)? } else { f64::INFINITY };
    let critical = chisq_quantile(p2 as u32, cfg.alpha)?;

    let lse1 = select_entries(&lse_full, &spec.main_idx);
    let lfm1 = match cfg.lfm_form {
        LfmForm::FullBlock => select_entries(&lfm_full, &spec.main_idx),
        LfmForm::Partitioned => liu_full_beta1(&pd, y, d, cfg.beta1_source)?,
    };
    let lsm1 = liu_sub_beta1(&pd, y, d1)?;
    let rfm1 = ridge_full_beta1(&pd, y, lambda_r)?;
    let rsm1 = ridge_sub_beta1(pd.x1(), y, lambda_r1)?;
    let lpt1 = pretest_at(&lfm1, &lsm1, l_n, critical);
    let (ls1, lps1) = if p2 >= 3 { (Some(stein(&lfm1, &lsm1, l_n, p2)?), Some(positive_part(&lfm1, &lsm1, l_n, p2)?)) } else { (None, None) };
    let lsm_full = scatter(p, &spec.main_idx, &lsm1);
    Ok(ShrinkageFit {
        spec: spec.clone(),
        d,
        d1,
        lambda_r,
        lambda_r1,
        sigma2,
        l_n,
        critical,
        lse1,
        rfm1,
        rsm1,
        lfm1,
        lsm1,
        lpt1,
        ls1,
        lps1,
        lse_full,
        rfm_full,
        lfm_full,
        lsm_full,
    })
}

impl ShrinkageFit {
    pub fn p2(&self) -> usize {
        self.spec.p2()
    }

    /// Main-block estimate for a closed-form kind.
    pub fn beta1(&self, kind: Estimator) -> Result<Vector> {
        let missing = || Error::Unsupported(format!("{kind} needs p2 >= 3"));
        Ok(match kind {
            Estimator::Lse => self.lse1.clone(),
            Estimator::RidgeFm => self.rfm1.clone(),
            Estimator::RidgeSm => self.rsm1.clone(),
            Estimator::Lfm => self.lfm1.clone(),
            Estimator::Lsm => self.lsm1.clone(),
            Estimator::Lpt => self.lpt1.clone(),
            Estimator::Ls => self.ls1.clone().ok_or_else(missing)?,
            Estimator::Lps => self.lps1.clone().ok_or_else(missing)?,
            _ => return Err(Error::Unsupported(format!("{kind} is not a closed-form estimator"))),
        })
    }

    /// Full coefficient vector (original column order) used for prediction.
    /// Sub-model kinds put zeros on the nuisance block; the test-based kinds
    /// combine the joint Liu fit with the sub-model fit by the same rule as
    /// their main-block versions.
    pub fn full(&self, kind: Estimator) -> Result<Vector> {
        let p = self.lfm_full.len();
        Ok(match kind {
            Estimator::Lse => self.lse_full.clone(),
            Estimator::RidgeFm => self.rfm_full.clone(),
            Estimator::RidgeSm => scatter(p, &self.spec.main_idx, &self.rsm1),
            Estimator::Lfm => self.lfm_full.clone(),
            Estimator::Lsm => self.lsm_full.clone(),
            Estimator::Lpt => pretest_at(&self.lfm_full, &self.lsm_full, self.l_n, self.critical),
            Estimator::Ls => stein(&self.lfm_full, &self.lsm_full, self.l_n, self.p2())?,
            Estimator::Lps => positive_part(&self.lfm_full, &self.lsm_full, self.l_n, self.p2())?,
            _ => return Err(Error::Unsupported(format!("{kind} is not a closed-form estimator"))),
        })
    }

    pub fn result(&self, kind: Estimator) -> Result<EstimateResult> {
        let beta1 = self.beta1(kind)?;
        let beta2 = match kind {
            Estimator::Lse | Estimator::RidgeFm | Estimator::Lfm => Some(select_entries(&self.full(kind)?, &self.spec.nuisance_idx)),
            _ => None,
        };
        Ok(EstimateResult { kind, beta1, beta2, l_n: kind.uses_test().then_some(self.l_n), sigma2_hat: Some(self.sigma2) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_vec(xs.to_vec())
    }

    #[test]
    fn identity_and_mean_designs() {
        let y = v(&[3.0, -1.0, 2.0]);
        assert_relative_eq!(lse(&Mat::identity(3, 3), &y).unwrap(), y, epsilon = 1e-14);
        let b = lse(&Mat::from_element(3, 1, 1.0), &v(&[1.0, 2.0, 3.0])).unwrap();
        assert_relative_eq!(b[0], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn diagonal_ridge_and_liu() {
        let x = Mat::identity(2, 2);
        let y = v(&[2.0, 4.0]);
        assert_relative_eq!(ridge(&x, &y, 1.0).unwrap(), v(&[1.0, 2.0]), epsilon = 1e-14);
        assert_relative_eq!(liu_full(&x, &y, 0.5).unwrap(), v(&[1.5, 3.0]), epsilon = 1e-14);
        assert_relative_eq!(ridge_sub_beta1(&x, &y, 1.0).unwrap(), v(&[1.0, 2.0]), epsilon = 1e-14);
        assert!(ridge(&x, &y, -1.0).is_err());
        assert!(liu_full(&x, &y, 0.0).is_err());
        assert!(liu_full(&x, &y, 1.5).is_err());
    }

    #[test]
    fn sub_model_liu_on_identity_block() {
        let x = Mat::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let pd = PartitionedDesign::new(&x, &PartitionSpec::leading(2, 1)).unwrap();
        let r = liu_sub_beta1(&pd, &v(&[2.0, 4.0, 7.0]), 0.5).unwrap();
        assert_relative_eq!(r, v(&[1.5, 3.0]), epsilon = 1e-14);
    }

    #[test]
    fn sigma2_hand_case() {
        let s = sigma2_hat(&Mat::from_element(3, 1, 1.0), &v(&[1.0, 2.0, 3.0]), &v(&[2.0])).unwrap();
        assert_relative_eq!(s, 1.0, epsilon = 1e-14);
        assert!(sigma2_hat(&Mat::identity(2, 2), &v(&[1.0, 2.0]), &v(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn pretest_branches() {
        let (a, b) = (v(&[1.0, 2.0]), v(&[0.5, 0.25]));
        assert_eq!(pretest(&a, &b, 0.0, 5, 0.05).unwrap(), b);
        assert_eq!(pretest(&a, &b, 1e6, 5, 0.05).unwrap(), a);
        let c = chisq_quantile(5, 0.05).unwrap();
        assert_eq!(pretest(&a, &b, c, 5, 0.05).unwrap(), b);
        assert!(pretest(&a, &b, 1.0, 5, 1.0).is_err());
    }

    #[test]
    fn stein_special_points() {
        let (a, b) = (v(&[1.0, 2.0, -3.0]), v(&[0.5, 0.25, 1.0]));
        let p2 = 6;
        assert_eq!(stein(&a, &b, 4.0, p2).unwrap(), b);
        assert_relative_eq!(stein(&a, &b, 8.0, p2).unwrap(), (&a + &b) * 0.5, epsilon = 1e-15);
        assert!((stein(&a, &b, 1e12, p2).unwrap() - &a).amax() < 1e-9);
        assert_eq!(stein(&a, &b, 1.0, 2).unwrap_err(), Error::Unsupported("Stein shrinkage needs p2 >= 3, got 2".into()));
        assert_eq!(stein(&a, &b, 0.0, p2).unwrap_err(), Error::ZeroStatistic);
        assert_eq!(positive_part(&a, &b, 2.0, p2).unwrap(), b);
        assert_eq!(positive_part(&a, &b, 8.0, p2).unwrap(), stein(&a, &b, 8.0, p2).unwrap());
    }

    #[test]
    fn estimator_names_round_trip() {
        for k in [
            Estimator::Lse,
            Estimator::RidgeFm,
            Estimator::RidgeSm,
            Estimator::Lfm,
            Estimator::Lsm,
            Estimator::Lpt,
            Estimator::Ls,
            Estimator::Lps,
            Estimator::Lasso,
            Estimator::AdaptiveLasso,
            Estimator::Scad,
        ] {
            assert_eq!(k.label().parse::<Estimator>().unwrap(), k);
        }
    }
}
