//! Noncentral chi-square distribution function, density, inverse moments
//! and truncated inverse moments.
//!
//! Everything is built on the Poisson mixture
//! `H_v(x; D) = sum_k Pois(k; D/2) P(chi2_{v+2k} <= x)`.
//! Inverse moments `E[(chi2_v(D))^{-j}]` use the central closed forms
//! `1/(m-2)` and `1/((m-2)(m-4))` term by term; truncated versions are
//! integrated numerically.

pub mod quadrature;

use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use quadrature::{integrate, Tolerance};

/// Hard cap on the number of mixture terms.
pub const MAX_TERMS: usize = 10_000;
/// Target bound on the Poisson mass left out of a truncated series.
pub const TAIL_MASS: f64 = 1e-14;

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Side {
    /// `chi2 <= c`
    AtMost,
    /// `chi2 > c`
    Above,
}

/// Poisson(`D/2`) weights around the mode, with a bound on the omitted mass.
#[derive(Debug, Clone)]
pub struct PoissonMixture {
    terms: Vec<(u32, f64)>,
    tail: f64,
}

impl PoissonMixture {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidInput(format!("noncentrality must be finite and >= 0, got {delta}")));
        }
        let lam = 0.5 * delta;
        if lam == 0.0 {
            return Ok(Self { terms: vec![(0, 1.0)], tail: 0.0 });
        }
        let ln_pmf = |k: u32| -lam + k as f64 * lam.ln() - ln_gamma(k as f64 + 1.0);
        let mode = lam.floor() as u32;
        let mut terms = Vec::new();

        let mut lower_tail = 0.0;
        let mut k = mode;
        loop {
            let w = ln_pmf(k).exp();
            terms.push((k, w));
            if k == 0 {
                break;
            }
            // Terms below the mode decrease, so the rest sums to at most k * w.
            if k as f64 * w < 0.5 * TAIL_MASS {
                lower_tail = k as f64 * w;
                break;
            }
            k -= 1;
        }
        terms.reverse();

        let mut k = mode;
        let upper_tail;
        loop {
            let w = ln_pmf(k).exp();
            let r = lam / (k as f64 + 2.0);
            if r < 1.0 {
                let bound = w * lam / (k as f64 + 1.0) / (1.0 - r);
                if bound < 0.5 * TAIL_MASS {
                    upper_tail = bound;
                    break;
                }
            }
            if terms.len() >= MAX_TERMS {
                return Err(Error::Unsupported(format!("noncentrality {delta} needs more than {MAX_TERMS} mixture terms")));
            }
            k += 1;
            terms.push((k, ln_pmf(k).exp()));
        }
        // ln_gamma rounding at large k shifts every weight by a common factor;
        // renormalize so the kept terms carry exactly the non-tail mass.
        let tail = lower_tail + upper_tail;
        let kept: f64 = terms.iter().map(|t| t.1).sum();
        let scale = (1.0 - tail) / kept;
        for t in &mut terms {
            t.1 *= scale;
        }
        Ok(Self { terms, tail })
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    /// Upper bound on the Poisson probability not covered by `terms`.
    pub fn tail_mass_bound(&self) -> f64 {
        self.tail
    }
}

fn central_ln_pdf(m: f64, x: f64) -> f64 {
    (0.5 * m - 1.0) * x.ln() - 0.5 * x - 0.5 * m * LN_2 - ln_gamma(0.5 * m)
}

fn central_cdf(m: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        gamma_lr(0.5 * m, 0.5 * x)
    }
}

fn central_sf(m: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(0.5 * m, 0.5 * x)
    }
}

fn check_df(v: u32) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidInput("degrees of freedom must be >= 1".into()));
    }
    Ok(())
}

/// `H_v(x; delta) = P(chi2_v(delta) <= x)`.
pub fn ncchisq_cdf(v: u32, delta: f64, x: f64) -> Result<f64> {
    check_df(v)?;
    if x.is_nan() {
        return Err(Error::InvalidInput("x is NaN".into()));
    }
    let mix = PoissonMixture::new(delta)?;
    let s: f64 = mix.terms().iter().map(|&(k, w)| w * central_cdf((v + 2 * k) as f64, x)).sum();
    Ok(s.clamp(0.0, 1.0))
}

/// `1 - H_v(x; delta)`, summed directly so small upper tails keep precision.
pub fn ncchisq_sf(v: u32, delta: f64, x: f64) -> Result<f64> {
    check_df(v)?;
    if x.is_nan() {
        return Err(Error::InvalidInput("x is NaN".into()));
    }
    let mix = PoissonMixture::new(delta)?;
    let s: f64 = mix.terms().iter().map(|&(k, w)| w * central_sf((v + 2 * k) as f64, x)).sum();
    Ok(s.clamp(0.0, 1.0))
}

pub fn ncchisq_pdf(v: u32, delta: f64, x: f64) -> Result<f64> {
    check_df(v)?;
    let mix = PoissonMixture::new(delta)?;
    if x < 0.0 {
        return Ok(0.0);
    }
    if x == 0.0 {
        let w0 = mix.terms()[0].1 * (mix.terms()[0].0 == 0) as u8 as f64;
        return Ok(match v {
            1 => f64::INFINITY,
            2 => 0.5 * w0,
            _ => 0.0,
        });
    }
    Ok(mix.terms().iter().map(|&(k, w)| w * central_ln_pdf((v + 2 * k) as f64, x).exp()).sum())
}

fn central_inv_moment(m: f64, j: u32) -> f64 {
    match j {
        0 => 1.0,
        1 => 1.0 / (m - 2.0),
        2 => 1.0 / ((m - 2.0) * (m - 4.0)),
        _ => unreachable!("order checked by caller"),
    }
}

fn check_order(v: u32, j: u32) -> Result<()> {
    if j > 2 {
        return Err(Error::InvalidInput(format!("moment order {j} not in {{0, 1, 2}}")));
    }
    if j > 0 && v <= 2 * j {
        return Err(Error::InfiniteMoment { df: v, order: j });
    }
    Ok(())
}

/// `E[(chi2_v(delta))^{-j}]` for `j` in `{1, 2}`.
pub fn inv_moment(v: u32, delta: f64, j: u32) -> Result<f64> {
    check_df(v)?;
    if j == 0 {
        return Err(Error::InvalidInput("moment order must be 1 or 2".into()));
    }
    check_order(v, j)?;
    let mix = PoissonMixture::new(delta)?;
    Ok(mix.terms().iter().map(|&(k, w)| w * central_inv_moment((v + 2 * k) as f64, j)).sum())
}

/// Per-term pieces of `x^{-j} h_v(x; delta)` in log space:
/// `ln w_k - (m/2) ln 2 - ln Gamma(m/2)` and the power `m/2 - 1 - j`.
fn log_terms(mix: &PoissonMixture, v: u32, j: u32) -> Vec<(f64, f64)> {
    mix.terms()
        .iter()
        .filter(|&&(_, w)| w > 0.0)
        .map(|&(k, w)| {
            let m = (v + 2 * k) as f64;
            (w.ln() - 0.5 * m * LN_2 - ln_gamma(0.5 * m), 0.5 * m - 1.0 - j as f64)
        })
        .collect()
}

const QUAD_TOL: Tolerance = Tolerance { abs: f64::MIN_POSITIVE, rel: 1e-12 };

/// `E[(chi2_v(delta))^{-j} 1{chi2_v(delta) <side> c}]` for `j` in `{0, 1, 2}`.
pub fn trunc_inv_moment(v: u32, delta: f64, j: u32, c: f64, side: Side) -> Result<f64> {
    check_df(v)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidInput(format!("truncation point must be positive and finite, got {c}")));
    }
    if j > 2 {
        return Err(Error::InvalidInput(format!("moment order {j} not in {{0, 1, 2}}")));
    }
    if j == 0 {
        return match side {
            Side::AtMost => ncchisq_cdf(v, delta, c),
            Side::Above => ncchisq_sf(v, delta, c),
        };
    }
    let mix = PoissonMixture::new(delta)?;
    let terms = log_terms(&mix, v, j);
    let mean = v as f64 + delta;
    let sd = (2.0 * (v as f64 + 2.0 * delta)).sqrt();
    let mode = (mean - 2.0 - 2.0 * j as f64).max(0.0);

    let result = match side {
        Side::AtMost => {
            check_order(v, j)?;
            // x = u^2 turns the x^{v/2-1-j} behaviour at 0 into a bounded
            // integrand in u whenever v > 2j.
            let g = |u: f64| {
                let lu = u.ln();
                let x = u * u;
                terms.iter().map(|&(lc, a)| 2.0 * (lc + (2.0 * a + 1.0) * lu - 0.5 * x).exp()).sum::<f64>()
            };
            let breaks = [mode.sqrt(), mean.sqrt(), (mean - 3.0 * sd).max(0.0).sqrt()];
            integrate(g, 0.0, c.sqrt(), &breaks, QUAD_TOL)?
        }
        Side::Above => {
            let f = |x: f64| {
                let lx = x.ln();
                terms.iter().map(|&(lc, a)| (lc + a * lx - 0.5 * x).exp()).sum::<f64>()
            };
            let upper = c.max(mean) + 40.0 * sd + 50.0;
            let breaks = [mode, mean, mean + 5.0 * sd, mean + 10.0 * sd, mean + 20.0 * sd];
            integrate(f, c, upper, &breaks, QUAD_TOL)?
        }
    };
    Ok(result.value)
}

/// Upper-`alpha` quantile of the central chi-square with `v` degrees of freedom.
pub fn chisq_quantile(v: u32, alpha: f64) -> Result<f64> {
    check_df(v)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let m = v as f64;
    let sf = |x: f64| central_sf(m, x);
    let mut lo = 0.0;
    let mut hi = m.max(1.0);
    while sf(hi) > alpha {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One evaluation request against the distribution.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChiSqQuery {
    pub v: u32,
    pub delta: f64,
    pub j: u32,
    pub c: f64,
    pub side: Side,
}

impl ChiSqQuery {
    pub fn evaluate(&self) -> Result<f64> {
        trunc_inv_moment(self.v, self.delta, self.j, self.c, self.side)
    }
}
