use super::skewt::{SkewT, SkewTParams};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::rng::{derive_seed, rng_from_seed};
use crate::stats::{autocorr, mean, std_dev};
use rand::Rng;
use rand_distr::{Distribution, Normal, StudentT};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgarchParams {
    pub mu: f64,
    pub phi: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub dist: SkewTParams,
    /// `E|z|` under `dist`, cached at construction.
    pub e_abs_z: f64,
}

impl EgarchParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(mu: f64, phi: f64, omega: f64, alpha: f64, beta: f64, gamma: f64, nu: f64, xi: f64) -> Result<Self> {
        if !(beta.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!("|beta| must be < 1, got {beta}")));
        }
        if !(phi.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!("|phi| must be < 1, got {phi}")));
        }
        let dist = SkewTParams::new(nu, xi)?;
        let e_abs_z = SkewT::new(dist).expected_abs();
        Ok(Self {
            mu,
            phi,
            omega,
            alpha,
            beta,
            gamma,
            dist,
            e_abs_z,
        })
    }

    /// Next conditional volatility given the current one and the current shock.
    #[inline]
    pub fn next_sigma(&self, sigma: f64, z: f64) -> f64 {
        let ln_var =
            self.omega + self.beta * (sigma * sigma).ln() + self.gamma * z + self.alpha * (z.abs() - self.e_abs_z);
        (0.5 * ln_var).exp()
    }
}

/// Filtered paths plus the state needed to continue filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    /// Conditional volatility of the last observation.
    pub sigma: f64,
    pub last_value: f64,
    pub residuals: Vec<f64>,
    pub cond_vols: Vec<f64>,
}

impl FilterState {
    pub fn last_residual(&self) -> f64 {
        *self.residuals.last().unwrap_or(&0.0)
    }

    /// Extends the filter by one observation with fixed parameters.
    pub fn push(&mut self, params: &EgarchParams, value: f64) {
        let sigma = params.next_sigma(self.sigma, self.last_residual());
        let z = (value - params.mu - params.phi * self.last_value) / sigma;
        self.sigma = sigma;
        self.last_value = value;
        self.residuals.push(z);
        self.cond_vols.push(sigma);
    }
}

/// Runs the filter over `values`. The first observation seeds the recursion
/// with the sample standard deviation and a zero shock.
pub fn filter(params: &EgarchParams, values: &[f64]) -> FilterState {
    let sigma0 = std_dev(values);
    let mut state = FilterState {
        sigma: sigma0,
        last_value: values[0],
        residuals: Vec::with_capacity(values.len()),
        cond_vols: Vec::with_capacity(values.len()),
    };
    state.residuals.push(0.0);
    state.cond_vols.push(sigma0);
    for &v in &values[1..] {
        state.push(params, v);
    }
    state
}

/// Skew-t log-likelihood of observations `1..n` given the filter warm-up.
pub fn log_likelihood(params: &EgarchParams, values: &[f64]) -> f64 {
    let dist = SkewT::new(params.dist);
    loglik_inner(params, &dist, values, std_dev(values))
}

fn loglik_inner(p: &EgarchParams, dist: &SkewT, values: &[f64], sigma0: f64) -> f64 {
    let mut ln_var = (sigma0 * sigma0).ln();
    let mut z = 0.0f64;
    let mut ll = 0.0;
    for w in values.windows(2) {
        ln_var = p.omega + p.beta * ln_var + p.gamma * z + p.alpha * (z.abs() - p.e_abs_z);
        if !(-700.0..700.0).contains(&ln_var) {
            return f64::NEG_INFINITY;
        }
        let sigma = (0.5 * ln_var).exp();
        z = (w[1] - p.mu - p.phi * w[0]) / sigma;
        ll += dist.ln_pdf(z) - 0.5 * ln_var;
    }
    ll
}

/// One-step-ahead conditional mean and volatility.
pub fn forecast_one_step(params: &EgarchParams, state: &FilterState) -> (f64, f64) {
    let mean = params.mu + params.phi * state.last_value;
    let sigma = params.next_sigma(state.sigma, state.last_residual());
    (mean, sigma)
}

/// Simulates `n` observations, drawing shocks by skewing Student-t draws directly.
pub fn simulate_egarch<R: Rng>(params: &EgarchParams, n: usize, burn_in: usize, rng: &mut R) -> Vec<f64> {
    let t = StudentT::new(params.dist.nu).expect("nu > 2");
    let xi = params.dist.xi;
    let p_pos = xi * xi / (1.0 + xi * xi);
    let mut ln_var = params.omega / (1.0 - params.beta);
    let mut z = 0.0;
    let mut prev = params.mu / (1.0 - params.phi);
    let mut out = Vec::with_capacity(n);
    for i in 0..n + burn_in {
        ln_var = params.omega + params.beta * ln_var + params.gamma * z + params.alpha * (f64::abs(z) - params.e_abs_z);
        let magnitude = t.sample(rng).abs();
        let y = if rng.gen::<f64>() < p_pos {
            magnitude * xi
        } else {
            -magnitude / xi
        };
        z = (y - params.dist.mu_dist) / params.dist.sigma_dist;
        let r = params.mu + params.phi * prev + (0.5 * ln_var).exp() * z;
        prev = r;
        if i >= burn_in {
            out.push(r);
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Simplex starts besides the warm start, when one is given.
    pub starts: usize,
    pub f_tol: f64,
    pub max_evals_per_start: usize,
    /// Earlier estimates tried first, e.g. from a previous refit.
    pub warm_start: Option<EgarchParams>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 5,
            f_tol: 1e-6,
            max_evals_per_start: 12_000,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgarchFit {
    pub params: EgarchParams,
    pub state: FilterState,
    pub loglik: f64,
}

const BOUND: f64 = 0.999;
const NU_MIN: f64 = 2.05;
const NU_MAX: f64 = 200.0;
const XI_MIN: f64 = 0.2;
const XI_MAX: f64 = 5.0;
const SQUASH_LIMIT: f64 = 12.0;

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Unconstrained vector: mu, atanh(phi), omega, alpha, atanh(beta), gamma, logit(nu), logit(ln xi).
fn decode(theta: &[f64]) -> Result<EgarchParams> {
    // Past this the squashing maps are flat and the simplex would drift along a ridge.
    if [1, 4, 6, 7].iter().any(|&i| theta[i].abs() > SQUASH_LIMIT) {
        return Err(Error::InvalidArgument("parameter outside the search box".into()));
    }
    let nu = NU_MIN + (NU_MAX - NU_MIN) * logistic(theta[6]);
    let (lo, hi) = (XI_MIN.ln(), XI_MAX.ln());
    let xi = (lo + (hi - lo) * logistic(theta[7])).exp();
    EgarchParams::new(
        theta[0],
        BOUND * theta[1].tanh(),
        theta[2],
        theta[3],
        BOUND * theta[4].tanh(),
        theta[5],
        nu,
        xi,
    )
}

fn encode(p: &EgarchParams) -> Vec<f64> {
    let (lo, hi) = (XI_MIN.ln(), XI_MAX.ln());
    let atanh = |x: f64| (x / BOUND).clamp(-0.999_999, 0.999_999).atanh();
    let logit = |p: f64| logit(p).clamp(-SQUASH_LIMIT, SQUASH_LIMIT);
    vec![
        p.mu,
        atanh(p.phi),
        p.omega,
        p.alpha,
        atanh(p.beta),
        p.gamma,
        logit(((p.dist.nu - NU_MIN) / (NU_MAX - NU_MIN)).clamp(1e-9, 1.0 - 1e-9)),
        logit(((p.dist.xi.ln() - lo) / (hi - lo)).clamp(1e-9, 1.0 - 1e-9)),
    ]
}

/// Maximum-likelihood fit with the default multi-start simplex search.
pub fn fit_egarch(values: &[f64], seed: u64) -> Result<(EgarchParams, FilterState)> {
    let fit = fit_egarch_with(values, seed, FitOptions::default())?;
    Ok((fit.params, fit.state))
}

/// Fits on data rescaled to unit standard deviation (so simplex steps are
/// scale-free), then maps the estimates back to the original units.
pub fn fit_egarch_with(values: &[f64], seed: u64, opts: FitOptions) -> Result<EgarchFit> {
    if values.len() < 250 {
        return Err(Error::InsufficientData(format!(
            "E-GARCH fit needs at least 250 observations, got {}",
            values.len()
        )));
    }
    let scale = std_dev(values);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Degenerate("E-GARCH input is constant".into()));
    }
    let x: Vec<f64> = values.iter().map(|v| v / scale).collect();

    let phi0 = autocorr(&x, 1).clamp(-0.5, 0.5);
    let beta0 = 0.9;
    let moment = EgarchParams::new(mean(&x) * (1.0 - phi0), phi0, 0.0, 0.1, beta0, 0.0, 8.0, 1.0)?;
    let cold = encode(&moment);
    let warm = opts.warm_start.map(|p| {
        encode(&EgarchParams {
            mu: p.mu / scale,
            omega: p.omega - (1.0 - p.beta) * (scale * scale).ln(),
            ..p
        })
    });

    let objective = |theta: &[f64]| -> f64 {
        match decode(theta) {
            Ok(p) => {
                let dist = SkewT::new(p.dist);
                -loglik_inner(&p, &dist, &x, 1.0)
            }
            Err(_) => f64::NAN,
        }
    };
    let nm = NelderMeadOptions {
        f_tol: opts.f_tol,
        max_evals: opts.max_evals_per_start,
        step: 0.2,
        restarts: 3,
    };

    let mut rng = rng_from_seed(derive_seed(seed, "egarch:starts"));
    let jitter = Normal::new(0.0, 1.0).expect("unit normal");
    let scales = [0.05, 0.3, 0.1, 0.1, 0.5, 0.1, 0.7, 0.4];
    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    // A warm start comes first and the moment start is always tried, since a
    // previous optimum can sit somewhere the extended sample rejects.
    let centre = warm.clone().unwrap_or_else(|| cold.clone());
    let n_starts = opts.starts.max(1) + usize::from(warm.is_some());
    for s in 0..n_starts {
        let start: Vec<f64> = match (s, &warm) {
            (0, _) => centre.clone(),
            (1, Some(_)) => cold.clone(),
            _ => centre
                .iter()
                .zip(scales)
                .enumerate()
                .map(|(i, (v, sc))| {
                    let x = v + sc * jitter.sample(&mut rng);
                    if [1, 4, 6, 7].contains(&i) {
                        x.clamp(-SQUASH_LIMIT, SQUASH_LIMIT)
                    } else {
                        x
                    }
                })
                .collect(),
        };
        let m = nelder_mead(objective, &start, nm);
        if m.f.is_finite() && best.as_ref().is_none_or(|b| m.f < b.0) {
            best = Some((m.f, m.x, m.converged));
        } else if let Some(b) = best.as_mut() {
            if (m.f - b.0).abs() <= opts.f_tol * (1.0 + b.0.abs()) {
                b.2 |= m.converged;
            }
        }
    }
    let (neg_ll, theta, converged) = best.ok_or(Error::NonConvergence {
        best_loglik: f64::NEG_INFINITY,
    })?;
    let loglik_scaled = -neg_ll;
    let loglik = loglik_scaled - (values.len() - 1) as f64 * scale.ln();
    if !converged {
        return Err(Error::NonConvergence { best_loglik: loglik });
    }
    let p = decode(&theta)?;
    let params = EgarchParams {
        mu: p.mu * scale,
        omega: p.omega + (1.0 - p.beta) * (scale * scale).ln(),
        ..p
    };
    let state = filter(&params, values);
    Ok(EgarchFit { params, state, loglik })
}
