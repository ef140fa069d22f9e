//! Fernández–Steel skewed Student-t, standardised to zero mean and unit variance.
//!
//! A Student-t variable `T` with `nu` degrees of freedom is skewed by scaling
//! its positive half by `xi` and its negative half by `1 / xi`; the result `Y`
//! is then standardised, `Z = (Y - mu_dist) / sigma_dist`. `xi = 1` gives the
//! symmetric (unit-variance) t.

use crate::error::{Error, Result};
use crate::quad;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewTParams {
    pub nu: f64,
    pub xi: f64,
    pub mu_dist: f64,
    pub sigma_dist: f64,
}

impl SkewTParams {
    pub fn new(nu: f64, xi: f64) -> Result<Self> {
        if !(nu > 2.0 && nu.is_finite()) {
            return Err(Error::InvalidArgument(format!("skew-t needs nu > 2, got {nu}")));
        }
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::InvalidArgument(format!("skew-t needs xi > 0, got {xi}")));
        }
        let (mu_dist, sigma_dist) = standardisation(nu, xi);
        Ok(Self {
            nu,
            xi,
            mu_dist,
            sigma_dist,
        })
    }

    pub fn symmetric(nu: f64) -> Result<Self> {
        Self::new(nu, 1.0)
    }
}

/// Mean and standard deviation of the unstandardised skewed variable `Y`.
fn standardisation(nu: f64, xi: f64) -> (f64, f64) {
    // E|T| and E[T^2] for the plain Student-t.
    let m1 = 2.0 * nu.sqrt() * (ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu)).exp() / (PI.sqrt() * (nu - 1.0));
    let m2 = nu / (nu - 2.0);
    let mean = m1 * (xi - 1.0 / xi);
    let second = m2 * (xi.powi(3) + xi.powi(-3)) / (xi + 1.0 / xi);
    (mean, (second - mean * mean).sqrt())
}

/// Evaluator with the normalising constants cached; build once per parameter set.
#[derive(Debug, Clone)]
pub struct SkewT {
    pub params: SkewTParams,
    ln_t_const: f64,
    ln_skew_const: f64,
    t: StudentsT,
}

impl SkewT {
    pub fn new(params: SkewTParams) -> Self {
        let nu = params.nu;
        let ln_t_const = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln();
        let xi = params.xi;
        let ln_skew_const = (2.0 / (xi + 1.0 / xi)).ln() + params.sigma_dist.ln();
        let t = StudentsT::new(0.0, 1.0, nu).expect("nu > 2 checked by SkewTParams");
        Self {
            params,
            ln_t_const,
            ln_skew_const,
            t,
        }
    }

    /// Maps a standardised value to the Student-t argument.
    #[inline]
    fn t_arg(&self, z: f64) -> f64 {
        let y = self.params.mu_dist + self.params.sigma_dist * z;
        if y >= 0.0 {
            y / self.params.xi
        } else {
            y * self.params.xi
        }
    }

    #[inline]
    pub fn ln_pdf(&self, z: f64) -> f64 {
        let s = self.t_arg(z);
        let nu = self.params.nu;
        self.ln_skew_const + self.ln_t_const - 0.5 * (nu + 1.0) * (s * s / nu).ln_1p()
    }

    pub fn pdf(&self, z: f64) -> f64 {
        self.ln_pdf(z).exp()
    }

    pub fn cdf(&self, z: f64) -> f64 {
        let xi = self.params.xi;
        let y = self.params.mu_dist + self.params.sigma_dist * z;
        let xi2 = xi * xi;
        if y < 0.0 {
            2.0 / (1.0 + xi2) * self.t.cdf(y * xi)
        } else {
            // 1 - P(Y > y) keeps precision in the right tail
            1.0 - 2.0 * xi2 / (1.0 + xi2) * self.t.sf(y / xi)
        }
    }

    /// Inverse of [`SkewT::cdf`] for `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "quantile level must be in (0, 1), got {p}"
            )));
        }
        let xi = self.params.xi;
        let xi2 = xi * xi;
        let split = 1.0 / (1.0 + xi2);
        let y = if p < split {
            self.t_quantile(p * (1.0 + xi2) / 2.0) / xi
        } else {
            // right branch written in terms of the upper tail mass
            let tail = (1.0 - p) * (1.0 + xi2) / (2.0 * xi2);
            -self.t_quantile(tail) * xi
        };
        Ok((y - self.params.mu_dist) / self.params.sigma_dist)
    }

    /// Student-t quantile, polished with Newton steps on the lower-tail CDF.
    fn t_quantile(&self, p: f64) -> f64 {
        if p == 0.5 {
            return 0.0;
        }
        // work in the lower tail for accuracy; use symmetry for the upper half
        let (q, sign) = if p > 0.5 { (1.0 - p, -1.0) } else { (p, 1.0) };
        let mut x = self.t.inverse_cdf(q);
        if !x.is_finite() {
            x = -1e6;
        }
        let nu = self.params.nu;
        for _ in 0..4 {
            let f = self.t.cdf(x) - q;
            let dens = (self.ln_t_const - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()).exp();
            if dens <= 0.0 || !dens.is_finite() {
                break;
            }
            let step = f / dens;
            x -= step;
            if step.abs() <= 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        sign * x
    }

    /// `E|Z|` by adaptive quadrature.
    pub fn expected_abs(&self) -> f64 {
        let p = self.params;
        // integrate |y - mu| f_Y(y) in the unstandardised scale, split at the kinks 0 and mu
        let xi = p.xi;
        let c = 2.0 / (xi + 1.0 / xi);
        let nu = p.nu;
        let ln_t = self.ln_t_const;
        let f_y = |y: f64| {
            let s = if y >= 0.0 { y / xi } else { y * xi };
            c * (ln_t - 0.5 * (nu + 1.0) * (s * s / nu).ln_1p()).exp()
        };
        let mu = p.mu_dist;
        let g = |y: f64| (y - mu).abs() * f_y(y);
        let (a, b) = if mu < 0.0 { (mu, 0.0) } else { (0.0, mu) };
        let tol = 1e-11;
        let total =
            quad::integrate_from_neg_inf(g, a, tol) + quad::integrate(g, a, b, tol) + quad::integrate_to_inf(g, b, tol);
        total / p.sigma_dist
    }
}

pub fn skewt_pdf(x: f64, params: &SkewTParams) -> f64 {
    SkewT::new(*params).pdf(x)
}

pub fn skewt_cdf(x: f64, params: &SkewTParams) -> f64 {
    SkewT::new(*params).cdf(x)
}

pub fn skewt_quantile(p: f64, params: &SkewTParams) -> Result<f64> {
    SkewT::new(*params).quantile(p)
}
