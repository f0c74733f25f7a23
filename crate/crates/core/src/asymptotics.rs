//! Asymptotic biases, quadratic biases, covariance matrices and weighted
//! risks of the Liu-type full, sub-model, pretest, Stein and positive-part
//! estimators of `beta1` under local alternatives `beta2 = kappa / sqrt(n)`.
//!
//! Every quantity is built from the population design limit `C`, the local
//! alternative `kappa`, `sigma2` and `d`. Risks are computed two ways: as
//! `tr(W Gamma)` from the covariance matrices and from expanded scalar
//! expressions. The two must agree.
//!
//! Two readings of the design symbols are offered through [`SymbolForm`].
//! The printed one takes `S = F_d C^{-1} F_d'`, `delta = F_d11 C12 kappa`
//! and noncentrality `kappa' C22.1^{-1} kappa / sigma2`; at `d = 1` it
//! gives the full-model covariance `sigma2 C11` instead of
//! `sigma2 (C^{-1})11`, and its pretest covariance can be indefinite. The
//! consistent one, the default, takes `S = (F_d C^{-1} F_d')^{-1}`,
//! `delta = F_d11 C11^{-1} C12 kappa` and `kappa' C22.1 kappa / sigma2`,
//! which reproduce the least-squares limits at `d = 1`. The closed forms
//! below are the same for both.
//!
//! Reading choices:
//! * the Stein-type quantities referenced inside the positive-part risk and
//!   covariance are those of the Liu Stein estimator;
//! * the sub-model covariance is `sigma2 S11^{-1} + gamma gamma'`;
//! * the positive-part bias uses `H_{p2+2}(p2 - 2)`, the value implied by
//!   its own quadratic-bias expansion and by the covariance derivation;
//! * in the Stein risk the `Phi` coefficient is `2E1 - (p2-2)E2`, and in
//!   the positive-part risk the `Phi` term in the truncated first moment
//!   is `-2 tr(W Phi) A1`, matching the covariance matrices;
//! * the squared-inverse truncated term paired with `delta delta'` uses
//!   `p2 + 4` degrees of freedom in both the power and the indicator.

use crate::distributions::{chisq_quantile, inv_moment, ncchisq_cdf, trunc_inv_moment, Side};
use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::linalg::{cholesky, is_psd, max_abs, spd_inverse, spd_solve, spd_solve_mat, symmetrize, Mat, Vector};

/// Which definitions of `S`, `delta`, `Phi` and the noncentrality to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum SymbolForm {
    /// Symbols as printed alongside the closed forms.
    AsPrinted,
    /// Symbols matching the limiting law of the least-squares fit.
    #[default]
    Consistent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticInputs {
    pub c: Mat,
    pub p1: usize,
    pub kappa: Vector,
    pub sigma2: f64,
    pub d: f64,
    pub beta: Vector,
    pub w: Mat,
    pub form: SymbolForm,
}

impl AsymptoticInputs {
    pub fn validate(&self) -> Result<()> {
        let p = self.c.nrows();
        if self.c.ncols() != p {
            return Err(Error::Dimension("C is not square".into()));
        }
        if self.p1 == 0 || self.p1 > p {
            return Err(Error::Dimension(format!("p1 = {} for p = {p}", self.p1)));
        }
        let p2 = p - self.p1;
        if self.kappa.len() != p2 {
            return Err(Error::Dimension(format!("kappa has length {}, expected {p2}", self.kappa.len())));
        }
        if self.beta.len() != p {
            return Err(Error::Dimension(format!("beta has length {}, expected {p}", self.beta.len())));
        }
        if self.w.nrows() != self.p1 || self.w.ncols() != self.p1 {
            return Err(Error::Dimension(format!("W must be {0}x{0}", self.p1)));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma2 = {} must be positive", self.sigma2)));
        }
        if !(self.d > 0.0 && self.d <= 1.0) {
            return Err(Error::InvalidInput(format!("d = {} outside (0, 1]", self.d)));
        }
        let scale = max_abs(&self.c).max(1.0);
        if max_abs(&(&self.c - self.c.transpose())) > 1e-10 * scale {
            return Err(Error::InvalidInput("C is not symmetric".into()));
        }
        cholesky(&self.c, "C")?;
        if max_abs(&(&self.w - self.w.transpose())) > 1e-10 * max_abs(&self.w).max(1.0) {
            return Err(Error::InvalidInput("W is not symmetric".into()));
        }
        cholesky(&self.w, "W")?;
        Ok(())
    }

    pub fn p2(&self) -> usize {
        self.c.nrows() - self.p1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedSymbols {
    pub p1: usize,
    pub p2: usize,
    pub sigma2: f64,
    pub d: f64,
    /// `(C + I)^{-1} (C + dI)`
    pub f_d: Mat,
    /// `(C11 + I)^{-1} (C11 + dI)`
    pub f_d11: Mat,
    /// `F_d C^{-1} F_d'` as printed, its inverse in the consistent form.
    pub s: Mat,
    pub s11: Mat,
    pub s12: Mat,
    pub s22: Mat,
    pub s11_2: Mat,
    pub s22_1: Mat,
    /// `-(1 - d)(C + I)^{-1} beta`
    pub mu: Vector,
    pub mu_11_2: Vector,
    pub delta: Vector,
    pub gamma: Vector,
    pub phi: Mat,
    pub noncentrality: f64,
}

fn block(m: &Mat, r0: usize, c0: usize, nr: usize, nc: usize) -> Mat {
    m.view((r0, c0), (nr, nc)).into_owned()
}

fn shifted(m: &Mat, s: f64) -> Mat {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        out[(i, i)] += s;
    }
    out
}

/// `a - b d^{-1} b'`
fn schur(a: &Mat, b: &Mat, d: &Mat, what: &str) -> Result<Mat> {
    if d.nrows() == 0 {
        return Ok(a.clone());
    }
    Ok(symmetrize(&(a - b * spd_solve_mat(d, &b.transpose(), what)?)))
}

pub fn derive_symbols(inp: &AsymptoticInputs) -> Result<DerivedSymbols> {
    inp.validate()?;
    let p = inp.c.nrows();
    let (p1, p2) = (inp.p1, inp.p2());
    let d = inp.d;
    let c = &inp.c;
    let c11 = block(c, 0, 0, p1, p1);
    let c12 = block(c, 0, p1, p1, p2);
    let c22 = block(c, p1, p1, p2, p2);

    let cpi = shifted(c, 1.0);
    let f_d = Mat::identity(p, p) - spd_inverse(&cpi, "C + I")? * (1.0 - d);
    let c_inv = spd_inverse(c, "C")?;
    let printed_s = symmetrize(&(&f_d * c_inv * f_d.transpose()));
    let s = match inp.form {
        SymbolForm::AsPrinted => printed_s,
        SymbolForm::Consistent => symmetrize(&spd_inverse(&printed_s, "F_d C^{-1} F_d'")?),
    };
    let s11 = block(&s, 0, 0, p1, p1);
    let s12 = block(&s, 0, p1, p1, p2);
    let s22 = block(&s, p1, p1, p2, p2);
    let s11_2 = schur(&s11, &s12, &s22, "S22")?;
    let s22_1 = schur(&s22, &s12.transpose(), &s11, "S11")?;

    let mu = -spd_solve(&cpi, &inp.beta, "C + I")? * (1.0 - d);
    let mu1 = mu.rows(0, p1).into_owned();
    let mu2 = mu.rows(p1, p2).into_owned();
    let beta2 = inp.beta.rows(p1, p2).into_owned();
    let mu_11_2 = if p2 == 0 {
        mu1
    } else {
        let shift = (&beta2 - &inp.kappa) - &mu2;
        &mu1 - &c12 * spd_solve(&c22, &shift, "C22")?
    };

    let f_d11 = Mat::identity(p1, p1) - spd_inverse(&shifted(&c11, 1.0), "C11 + I")? * (1.0 - d);
    let fc = match inp.form {
        SymbolForm::AsPrinted => &f_d11 * &c12,
        SymbolForm::Consistent => &f_d11 * spd_solve_mat(&c11, &c12, "C11")?,
    };
    let delta = &fc * &inp.kappa;
    let gamma = -(&mu_11_2 + &delta);
    let (phi, noncentrality) = if p2 == 0 {
        (Mat::zeros(p1, p1), 0.0)
    } else {
        let phi = symmetrize(&(&fc * spd_solve_mat(&s22_1, &fc.transpose(), "S22.1")? * inp.sigma2));
        (phi, noncentrality(c, p1, inp.sigma2, &inp.kappa, inp.form)?)
    };
    Ok(DerivedSymbols { p1, p2, sigma2: inp.sigma2, d, f_d, f_d11, s, s11, s12, s22, s11_2, s22_1, mu, mu_11_2, delta, gamma, phi, noncentrality })
}

/// Noncentral chi-square functionals entering the pretest formulas.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PretestTerms {
    /// Upper-alpha point of the central chi-square with `p2` df.
    pub critical: f64,
    /// `H_{p2+2}(critical)`
    pub h2: f64,
    /// `H_{p2+4}(critical)`
    pub h4: f64,
}

/// Functionals entering the Stein and positive-part formulas (`p2 >= 3`).
/// Inverse moments are of `chi2^{-1}` (`e1_*`) and `chi2^{-2}` (`e2_*`);
/// the suffix is the df offset from `p2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SteinTerms {
    pub e1_2: f64,
    pub e1_4: f64,
    pub e2_2: f64,
    pub e2_4: f64,
    /// `H_{p2+2}(p2 - 2)` and `H_{p2+4}(p2 - 2)`
    pub h2_c: f64,
    pub h4_c: f64,
    /// `E[chi2_{p2+2}^{-1} 1{chi2_{p2+2} > p2 - 2}]`
    pub above1_2: f64,
    /// `E[(1 - (p2-2) chi2_v^{-1}) 1{chi2_v <= p2 - 2}]` for `v = p2+2`, `p2+4`
    pub a1_2: f64,
    pub a1_4: f64,
    /// `E[chi2_v^{-2} 1{chi2_v <= p2 - 2}]` for `v = p2+2`, `p2+4`
    pub b2_2: f64,
    pub b2_4: f64,
}

impl PretestTerms {
    pub fn new(p2: usize, alpha: f64, nc: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha = {alpha} outside (0, 1)")));
        }
        let v = p2 as u32;
        let critical = chisq_quantile(v, alpha)?;
        Ok(Self { critical, h2: ncchisq_cdf(v + 2, nc, critical)?, h4: ncchisq_cdf(v + 4, nc, critical)? })
    }
}

impl SteinTerms {
    pub fn new(p2: usize, nc: f64) -> Result<Self> {
        if p2 < 3 {
            return Err(Error::Unsupported(format!("Stein-type risks need p2 >= 3, got {p2}")));
        }
        let v = p2 as u32;
        let c = p2 as f64 - 2.0;
        let h2_c = ncchisq_cdf(v + 2, nc, c)?;
        let h4_c = ncchisq_cdf(v + 4, nc, c)?;
        let below1_2 = trunc_inv_moment(v + 2, nc, 1, c, Side::AtMost)?;
        let below1_4 = trunc_inv_moment(v + 4, nc, 1, c, Side::AtMost)?;
        Ok(Self {
            e1_2: inv_moment(v + 2, nc, 1)?,
            e1_4: inv_moment(v + 4, nc, 1)?,
            e2_2: inv_moment(v + 2, nc, 2)?,
            e2_4: inv_moment(v + 4, nc, 2)?,
            h2_c,
            h4_c,
            above1_2: trunc_inv_moment(v + 2, nc, 1, c, Side::Above)?,
            a1_2: h2_c - c * below1_2,
            a1_4: h4_c - c * below1_4,
            b2_2: trunc_inv_moment(v + 2, nc, 2, c, Side::AtMost)?,
            b2_4: trunc_inv_moment(v + 4, nc, 2, c, Side::AtMost)?,
        })
    }
}

fn check_kind(kind: Estimator, p2: usize) -> Result<()> {
    if !Estimator::SHRINKAGE.contains(&kind) {
        return Err(Error::Unsupported(format!("no asymptotic formulas for {kind}")));
    }
    if kind.uses_test() && p2 == 0 {
        return Err(Error::Unsupported(format!("{kind} needs p2 >= 1")));
    }
    if kind.needs_p2_at_least_3() && p2 < 3 {
        return Err(Error::Unsupported(format!("{kind} needs p2 >= 3, got {p2}")));
    }
    Ok(())
}

/// All five estimators' asymptotic summaries for one set of symbols,
/// evaluating each chi-square functional once.
#[derive(Debug, Clone)]
pub struct Asymptotics {
    pub sym: DerivedSymbols,
    pub alpha: f64,
    pub pretest: Option<PretestTerms>,
    pub stein: Option<SteinTerms>,
}

impl Asymptotics {
    pub fn new(sym: DerivedSymbols, alpha: f64) -> Result<Self> {
        let nc = sym.noncentrality;
        let pretest = if sym.p2 >= 1 { Some(PretestTerms::new(sym.p2, alpha, nc)?) } else { None };
        let stein = if sym.p2 >= 3 { Some(SteinTerms::new(sym.p2, nc)?) } else { None };
        Ok(Self { sym, alpha, pretest, stein })
    }

    pub fn from_inputs(inp: &AsymptoticInputs, alpha: f64) -> Result<Self> {
        Self::new(derive_symbols(inp)?, alpha)
    }

    fn pt(&self) -> PretestTerms {
        self.pretest.expect("checked by check_kind")
    }
    fn st(&self) -> SteinTerms {
        self.stein.expect("checked by check_kind")
    }
    fn q(&self) -> f64 {
        self.sym.p2 as f64 - 2.0
    }

    pub fn bias(&self, kind: Estimator) -> Result<Vector> {
        check_kind(kind, self.sym.p2)?;
        let s = &self.sym;
        let base = -&s.mu_11_2;
        Ok(match kind {
            Estimator::Lfm => base,
            Estimator::Lsm => -&s.gamma,
            Estimator::Lpt => base - &s.delta * self.pt().h2,
            Estimator::Ls => base - &s.delta * (self.q() * self.st().e1_2),
            Estimator::Lps => {
                let t = self.st();
                base - &s.delta * (t.h2_c + self.q() * t.above1_2)
            }
            _ => unreachable!(),
        })
    }

    /// `B' S11.2 B`
    pub fn quadratic_bias(&self, kind: Estimator) -> Result<f64> {
        let b = self.bias(kind)?;
        Ok(b.dot(&(&self.sym.s11_2 * &b)))
    }

    /// Quadratic bias from the term-by-term expansion.
    pub fn quadratic_bias_expanded(&self, kind: Estimator) -> Result<f64> {
        check_kind(kind, self.sym.p2)?;
        let s = &self.sym;
        let m = &s.mu_11_2;
        let dl = &s.delta;
        let sm = &s.s11_2 * m;
        let sd = &s.s11_2 * dl;
        let mm = m.dot(&sm);
        let (md, dm, dd) = (m.dot(&sd), dl.dot(&sm), dl.dot(&sd));
        Ok(match kind {
            Estimator::Lfm => mm,
            Estimator::Lsm => s.gamma.dot(&(&s.s11_2 * &s.gamma)),
            Estimator::Lpt => {
                let h = self.pt().h2;
                mm + md * h + dm * h + dd * h * h
            }
            Estimator::Ls => {
                let (q, e) = (self.q(), self.st().e1_2);
                mm + q * md * e + q * dm * e + q * q * dd * e * e
            }
            Estimator::Lps => {
                let t = self.st();
                let k = t.h2_c + self.q() * t.above1_2;
                mm + (dm + md) * k + dd * k * k
            }
            _ => unreachable!(),
        })
    }

    /// Second-moment matrix `E[n (b - beta1)(b - beta1)']`, symmetrized.
    pub fn covariance(&self, kind: Estimator) -> Result<Mat> {
        check_kind(kind, self.sym.p2)?;
        let s = &self.sym;
        let (mu, dl, phi) = (&s.mu_11_2, &s.delta, &s.phi);
        let cross = mu * dl.transpose() + dl * mu.transpose();
        let dd = dl * dl.transpose();
        let lfm = spd_inverse(&s.s11_2, "S11.2")? * s.sigma2 + mu * mu.transpose();
        let ls = |this: &Self| -> Mat {
            let (q, t) = (this.q(), this.st());
            &lfm + &cross * (q * t.e1_2) - phi * (q * (2.0 * t.e1_2 - q * t.e2_2)) + &dd * (q * (2.0 * t.e1_2 - 2.0 * t.e1_4 + q * t.e2_4))
        };
        let g = match kind {
            Estimator::Lfm => lfm.clone(),
            Estimator::Lsm => spd_inverse(&s.s11, "S11")? * s.sigma2 + &s.gamma * s.gamma.transpose(),
            Estimator::Lpt => {
                let t = self.pt();
                &lfm + &cross * t.h2 - phi * t.h2 + &dd * (2.0 * t.h2 - t.h4)
            }
            Estimator::Ls => ls(self),
            Estimator::Lps => {
                let (q, t) = (self.q(), self.st());
                ls(self) + &cross * t.a1_2 - phi * (2.0 * t.a1_2) - &dd * (2.0 * t.a1_4) + &dd * (2.0 * t.a1_2)
                    - phi * (q * q * t.b2_2)
                    - &dd * (q * q * t.b2_4)
                    + phi * t.h2_c
                    + &dd * t.h4_c
            }
            _ => unreachable!(),
        };
        let scale = max_abs(&g).max(1.0);
        if max_abs(&(&g - g.transpose())) > 1e-8 * scale {
            return Err(Error::InvalidInput(format!("{kind} covariance is not symmetric")));
        }
        Ok(symmetrize(&g))
    }

    /// `tr(W Gamma)`
    pub fn risk(&self, kind: Estimator, w: &Mat) -> Result<f64> {
        Ok((w * self.covariance(kind)?).trace())
    }

    /// Weighted risk from the expanded scalar expressions.
    pub fn risk_expanded(&self, kind: Estimator, w: &Mat) -> Result<f64> {
        check_kind(kind, self.sym.p2)?;
        let s = &self.sym;
        let (mu, dl) = (&s.mu_11_2, &s.delta);
        let wd = w * dl;
        let mwd = mu.dot(&wd);
        let dwd = dl.dot(&wd);
        let trwphi = (w * &s.phi).trace();
        let lfm = s.sigma2 * (w * spd_inverse(&s.s11_2, "S11.2")?).trace() + mu.dot(&(w * mu));
        let ls = |this: &Self| {
            let (q, t) = (this.q(), this.st());
            lfm + 2.0 * q * mwd * t.e1_2 - q * trwphi * (2.0 * t.e1_2 - q * t.e2_2) + q * dwd * (2.0 * t.e1_2 - 2.0 * t.e1_4 + q * t.e2_4)
        };
        Ok(match kind {
            Estimator::Lfm => lfm,
            Estimator::Lsm => s.sigma2 * (w * spd_inverse(&s.s11, "S11")?).trace() + s.gamma.dot(&(w * &s.gamma)),
            Estimator::Lpt => {
                let t = self.pt();
                lfm + 2.0 * mwd * t.h2 - trwphi * t.h2 + dwd * (2.0 * t.h2 - t.h4)
            }
            Estimator::Ls => ls(self),
            Estimator::Lps => {
                let (q, t) = (self.q(), self.st());
                ls(self) + 2.0 * mwd * t.a1_2 - 2.0 * trwphi * t.a1_2 - 2.0 * dwd * t.a1_4 + 2.0 * dwd * t.a1_2
                    - q * q * trwphi * t.b2_2
                    - q * q * dwd * t.b2_4
                    + trwphi * t.h2_c
                    + dwd * t.h4_c
            }
            _ => unreachable!(),
        })
    }
}

pub fn bias(kind: Estimator, sym: &DerivedSymbols, alpha: f64) -> Result<Vector> {
    Asymptotics::new(sym.clone(), alpha)?.bias(kind)
}

pub fn quadratic_bias(kind: Estimator, sym: &DerivedSymbols, alpha: f64) -> Result<f64> {
    Asymptotics::new(sym.clone(), alpha)?.quadratic_bias(kind)
}

pub fn covariance(kind: Estimator, sym: &DerivedSymbols, alpha: f64) -> Result<Mat> {
    Asymptotics::new(sym.clone(), alpha)?.covariance(kind)
}

pub fn risk(kind: Estimator, inp: &AsymptoticInputs, alpha: f64) -> Result<f64> {
    Asymptotics::from_inputs(inp, alpha)?.risk(kind, &inp.w)
}

/// `(1 - rho) I + rho 11'`
pub fn equicorrelation(p: usize, rho: f64) -> Mat {
    Mat::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho })
}

/// `kappa' C22.1 kappa / sigma2`, or with `C22.1^{-1}` in the printed form.
pub fn noncentrality(c: &Mat, p1: usize, sigma2: f64, kappa: &Vector, form: SymbolForm) -> Result<f64> {
    let p2 = c.nrows() - p1;
    if kappa.len() != p2 {
        return Err(Error::Dimension(format!("kappa has length {}, expected {p2}", kappa.len())));
    }
    let c11 = block(c, 0, 0, p1, p1);
    let c12 = block(c, 0, p1, p1, p2);
    let c22 = block(c, p1, p1, p2, p2);
    let c22_1 = schur(&c22, &c12.transpose(), &c11, "C11")?;
    let q = match form {
        SymbolForm::AsPrinted => kappa.dot(&spd_solve(&c22_1, kappa, "C22.1")?),
        SymbolForm::Consistent => kappa.dot(&(&c22_1 * kappa)),
    };
    Ok((q / sigma2).max(0.0))
}

/// Local alternative along `direction`, scaled to noncentrality `target`.
pub fn kappa_for_noncentrality(c: &Mat, p1: usize, sigma2: f64, direction: &Vector, target: f64, form: SymbolForm) -> Result<Vector> {
    let p2 = c.nrows() - p1;
    if direction.len() != p2 {
        return Err(Error::Dimension(format!("direction has length {}, expected {p2}", direction.len())));
    }
    if !(target >= 0.0) {
        return Err(Error::InvalidInput(format!("noncentrality {target} must be >= 0")));
    }
    let q = noncentrality(c, p1, 1.0, direction, form)?;
    if !(q > 0.0) {
        return Err(Error::InvalidInput("direction must be nonzero".into()));
    }
    Ok(direction * (target * sigma2 / q).sqrt())
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RiskPoint {
    pub noncentrality: f64,
    pub kind: Estimator,
    pub risk: f64,
}

/// Risks over a noncentrality grid, moving `kappa` along `direction` and
/// keeping `beta2 = kappa`.
pub fn risk_curve(base: &AsymptoticInputs, direction: &Vector, grid: &[f64], kinds: &[Estimator], alpha: f64) -> Result<Vec<RiskPoint>> {
    let mut out = Vec::with_capacity(grid.len() * kinds.len());
    for &nc in grid {
        let kappa = kappa_for_noncentrality(&base.c, base.p1, base.sigma2, direction, nc, base.form)?;
        let mut inp = base.clone();
        for (k, v) in kappa.iter().enumerate() {
            inp.beta[base.p1 + k] = *v;
        }
        inp.kappa = kappa;
        let asy = Asymptotics::from_inputs(&inp, alpha)?;
        for &kind in kinds {
            out.push(RiskPoint { noncentrality: nc, kind, risk: asy.risk(kind, &inp.w)? });
        }
    }
    Ok(out)
}

/// Symmetric positive semidefinite up to `tol`.
pub fn is_spsd(m: &Mat, tol: f64) -> bool {
    max_abs(&(m - m.transpose())) <= tol * max_abs(m).max(1.0) && is_psd(m, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn inputs(d: f64, kappa: Vec<f64>) -> AsymptoticInputs {
        let c = equicorrelation(7, 0.4);
        let p1 = 3;
        let kappa = Vector::from_vec(kappa);
        let mut beta = Vector::from_element(7, 1.0);
        for (k, v) in kappa.iter().enumerate() {
            beta[p1 + k] = *v;
        }
        AsymptoticInputs { c, p1, kappa, sigma2: 1.3, d, beta, w: Mat::identity(3, 3), form: SymbolForm::AsPrinted }
    }

    #[test]
    fn null_alternative_collapses() {
        let sym = derive_symbols(&inputs(0.6, vec![0.0; 4])).unwrap();
        assert_eq!(sym.delta.amax(), 0.0);
        assert_eq!(sym.noncentrality, 0.0);
        assert_relative_eq!(sym.gamma, -&sym.mu_11_2, epsilon = 1e-15);
    }

    #[test]
    fn liu_boundary_reduces_to_inverse() {
        let inp = inputs(1.0, vec![0.5, 0.0, -0.2, 0.1]);
        let sym = derive_symbols(&inp).unwrap();
        assert!(sym.mu.amax() == 0.0);
        assert_relative_eq!(sym.f_d, Mat::identity(7, 7), epsilon = 1e-15);
        let c_inv = spd_inverse(&inp.c, "C").unwrap();
        assert_relative_eq!(sym.s, c_inv, epsilon = 1e-12);
    }

    #[test]
    fn identity_limit_has_no_cross_terms() {
        let mut inp = inputs(0.7, vec![1.0, 2.0, 0.0, 0.5]);
        inp.c = Mat::identity(7, 7);
        let sym = derive_symbols(&inp).unwrap();
        assert!(sym.delta.amax() < 1e-15);
        assert!(max_abs(&sym.phi) < 1e-15);
        assert_relative_eq!(sym.noncentrality, 5.25 / 1.3, max_relative = 1e-14);
    }

    #[test]
    fn unsupported_kinds() {
        let asy = Asymptotics::from_inputs(&inputs(0.8, vec![0.3, 0.0, 0.0, 0.0]), 0.05).unwrap();
        assert!(matches!(asy.bias(Estimator::Lasso), Err(Error::Unsupported(_))));
        let mut small = inputs(0.8, vec![0.3, 0.0, 0.0, 0.0]);
        small.p1 = 5;
        small.kappa = Vector::from_vec(vec![0.3, 0.0]);
        small.w = Mat::identity(5, 5);
        let asy = Asymptotics::from_inputs(&small, 0.05).unwrap();
        assert!(asy.bias(Estimator::Lpt).is_ok());
        assert!(matches!(asy.covariance(Estimator::Ls), Err(Error::Unsupported(_))));
    }

    #[test]
    fn consistent_form_matches_least_squares_limits() {
        let mut inp = inputs(1.0, vec![0.5, 0.0, -0.2, 0.1]);
        inp.form = SymbolForm::Consistent;
        let asy = Asymptotics::from_inputs(&inp, 0.05).unwrap();
        let c = &inp.c;
        let c_inv = spd_inverse(c, "C").unwrap();
        let c11 = block(c, 0, 0, 3, 3);
        let c12 = block(c, 0, 3, 3, 4);
        let c11_inv = spd_inverse(&c11, "C11").unwrap();
        let lfm = block(&c_inv, 0, 0, 3, 3) * inp.sigma2;
        let dl = &c11_inv * &c12 * &inp.kappa;
        assert_relative_eq!(asy.sym.delta, dl, epsilon = 1e-12);
        assert_relative_eq!(asy.covariance(Estimator::Lfm).unwrap(), lfm, epsilon = 1e-12);
        let lsm = &c11_inv * inp.sigma2 + &dl * dl.transpose();
        assert_relative_eq!(asy.covariance(Estimator::Lsm).unwrap(), lsm, epsilon = 1e-12);
        // Phi is the covariance of the difference between the two fits.
        assert_relative_eq!(asy.sym.phi, &lfm - &c11_inv * inp.sigma2, epsilon = 1e-12);
        let c22_1 = block(&c_inv, 3, 3, 4, 4).try_inverse().unwrap();
        assert_relative_eq!(asy.sym.noncentrality, inp.kappa.dot(&(c22_1 * &inp.kappa)) / inp.sigma2, max_relative = 1e-12);
    }

    #[test]
    fn two_risk_paths_agree() {
        let mut inp = inputs(0.45, vec![0.9, -0.3, 0.2, 0.4]);
        let w = Mat::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.3 });
        for form in [SymbolForm::AsPrinted, SymbolForm::Consistent] {
            inp.form = form;
            let asy = Asymptotics::from_inputs(&inp, 0.05).unwrap();
            for kind in Estimator::SHRINKAGE {
                let a = asy.risk(kind, &w).unwrap();
                let b = asy.risk_expanded(kind, &w).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-10);
                assert_relative_eq!(
                    asy.quadratic_bias(kind).unwrap(),
                    asy.quadratic_bias_expanded(kind).unwrap(),
                    max_relative = 1e-10,
                    epsilon = 1e-14
                );
            }
        }
    }
}
