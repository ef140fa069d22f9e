use crate::error::{Error, Result};
use crate::stats::norm_cdf;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub p_value: f64,
    pub used_lag: usize,
    pub n_obs: usize,
}

/// Augmented Dickey–Fuller test with a constant and no trend.
///
/// The lag order minimises AIC over `0..=max_lag` on a common sample; the
/// final regression is re-run on the longest sample the chosen lag allows.
/// p-values use MacKinnon's response-surface approximation.
pub fn adf_test(values: &[f64], max_lag: usize) -> Result<AdfResult> {
    let n = values.len();
    if n <= max_lag + 10 {
        return Err(Error::InsufficientData(format!(
            "ADF needs more than {} observations, got {n}",
            max_lag + 10
        )));
    }
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Err(Error::Degenerate("ADF input is constant".into()));
    }
    let diff: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();

    let mut best: Option<(f64, usize)> = None;
    let nobs = diff.len() - max_lag;
    for lag in 0..=max_lag {
        let (y, x) = design(values, &diff, lag, nobs);
        let Some(fit) = ols(&y, &x) else { continue };
        let aic = fit.aic();
        if best.is_none_or(|(b, _)| aic < b) {
            best = Some((aic, lag));
        }
    }
    let (_, lag) = best.ok_or_else(|| Error::Degenerate("ADF regressions are singular".into()))?;
    let nobs = diff.len() - lag;
    let (y, x) = design(values, &diff, lag, nobs);
    let fit = ols(&y, &x).ok_or_else(|| Error::Degenerate("ADF regression is singular".into()))?;
    let statistic = fit.t_value(1);
    Ok(AdfResult {
        statistic,
        p_value: mackinnon_p_constant(statistic),
        used_lag: lag,
        n_obs: nobs,
    })
}

/// Rows are the last `nobs` differences; columns are const, level_{t-1}, and `lag` lagged differences.
fn design(level: &[f64], diff: &[f64], lag: usize, nobs: usize) -> (DVector<f64>, DMatrix<f64>) {
    let start = diff.len() - nobs;
    let y = DVector::from_iterator(nobs, diff[start..].iter().copied());
    let x = DMatrix::from_fn(nobs, lag + 2, |r, c| {
        let t = start + r;
        match c {
            0 => 1.0,
            1 => level[t],
            k => diff[t - (k - 1)],
        }
    });
    (y, x)
}

struct OlsFit {
    beta: DVector<f64>,
    cov_unscaled: DMatrix<f64>,
    ssr: f64,
    nobs: usize,
    k: usize,
}

impl OlsFit {
    fn sigma2(&self) -> f64 {
        self.ssr / (self.nobs - self.k) as f64
    }

    fn t_value(&self, i: usize) -> f64 {
        self.beta[i] / (self.sigma2() * self.cov_unscaled[(i, i)]).sqrt()
    }

    fn aic(&self) -> f64 {
        let n = self.nobs as f64;
        let llf = -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + (self.ssr / n).ln() + 1.0);
        -2.0 * llf + 2.0 * self.k as f64
    }
}

fn ols(y: &DVector<f64>, x: &DMatrix<f64>) -> Option<OlsFit> {
    let xtx = x.transpose() * x;
    let inv = xtx.try_inverse()?;
    let beta = &inv * (x.transpose() * y);
    let resid = y - x * &beta;
    let (nobs, k) = x.shape();
    if nobs <= k {
        return None;
    }
    Some(OlsFit {
        beta,
        cov_unscaled: inv,
        ssr: resid.norm_squared(),
        nobs,
        k,
    })
}

// MacKinnon (1994) response surface, constant-only regression, one series.
const TAU_MAX_C: f64 = 2.74;
const TAU_MIN_C: f64 = -18.83;
const TAU_STAR_C: f64 = -1.61;
const TAU_C_SMALLP: [f64; 3] = [2.1659, 1.4412, 0.038269];
const TAU_C_LARGEP: [f64; 4] = [1.7339, 0.93202, -0.12745, -0.010368];

/// Approximate p-value of an ADF statistic (constant, no trend).
pub fn mackinnon_p_constant(stat: f64) -> f64 {
    if stat > TAU_MAX_C {
        return 1.0;
    }
    if stat < TAU_MIN_C {
        return 0.0;
    }
    let coef: &[f64] = if stat <= TAU_STAR_C {
        &TAU_C_SMALLP
    } else {
        &TAU_C_LARGEP
    };
    let poly = coef.iter().rev().fold(0.0, |acc, c| acc * stat + c);
    norm_cdf(poly)
}
