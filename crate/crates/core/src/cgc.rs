//! Copula Granger causality.
//!
//! The target is turned into uniform residuals by a kernel estimate of its
//! conditional CDF given its own lag; the lagged causer gets the same
//! treatment under the same conditioning. A Bernstein copula density is fit
//! to the resulting pairs and the statistic is the mean log density. The
//! null distribution comes from stationary block resamples of the causer.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::{replicate_seed, rng_from_seed, Rng};
use crate::stats::{norm_cdf, quantile, silverman_bandwidth, std_dev};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

const DENSITY_FLOOR: f64 = 1e-10;
const PIT_CLAMP: f64 = 1e-12;
const MIN_OBS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    Silverman,
    /// 1.06 · sd · n^(-1/5)
    Scott,
}

impl BandwidthRule {
    pub fn bandwidth(self, x: &[f64]) -> f64 {
        match self {
            BandwidthRule::Silverman => silverman_bandwidth(x),
            BandwidthRule::Scott => 1.06 * std_dev(x) * (x.len() as f64).powf(-0.2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CgcConfig {
    pub horizon_lag: usize,
    pub n_bootstrap: usize,
    pub percentile: f64,
    /// `None` picks ⌈T^(1/3)⌉ clamped to [8, 20].
    pub bernstein_degree: Option<usize>,
    pub kde_bandwidth_rule: BandwidthRule,
    /// Expected block length of the stationary bootstrap, in days.
    pub block_length: f64,
    pub seed: u64,
}

impl Default for CgcConfig {
    fn default() -> Self {
        Self {
            horizon_lag: 1,
            n_bootstrap: 200,
            percentile: 0.95,
            bernstein_degree: None,
            kde_bandwidth_rule: BandwidthRule::Silverman,
            block_length: 20.0,
            seed: 0,
        }
    }
}

impl CgcConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| Err(Error::config(format!("cgc.{field}"), reason));
        if self.horizon_lag == 0 {
            return bad("horizon_lag", "must be at least 1".into());
        }
        if self.n_bootstrap < 100 {
            return bad("n_bootstrap", format!("must be at least 100, got {}", self.n_bootstrap));
        }
        if !(self.percentile > 0.0 && self.percentile < 1.0) {
            return bad("percentile", format!("must lie in (0, 1), got {}", self.percentile));
        }
        if let Some(d) = self.bernstein_degree {
            if d < 2 {
                return bad("bernstein_degree", format!("must be at least 2, got {d}"));
            }
        }
        if !(self.block_length >= 1.0) {
            return bad("block_length", format!("must be at least 1, got {}", self.block_length));
        }
        Ok(())
    }

    pub fn degree_for(&self, n: usize) -> usize {
        self.bernstein_degree
            .unwrap_or_else(|| ((n as f64).cbrt().ceil() as usize).clamp(8, 20))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgcResult {
    pub causer: String,
    pub target: String,
    pub horizon_lag: usize,
    pub statistic: f64,
    pub bootstrap_stats: Vec<f64>,
    pub p_value: f64,
    pub significant: bool,
}

impl CgcResult {
    fn from_stats(statistic: f64, bootstrap_stats: Vec<f64>, cfg: &CgcConfig) -> Self {
        let exceed = bootstrap_stats.iter().filter(|b| **b >= statistic).count();
        let critical = quantile(&bootstrap_stats, cfg.percentile);
        Self {
            causer: "causer".into(),
            target: "target".into(),
            horizon_lag: cfg.horizon_lag,
            statistic,
            p_value: exceed as f64 / bootstrap_stats.len() as f64,
            significant: statistic > critical,
            bootstrap_stats,
        }
    }

    pub fn labelled(mut self, causer: impl Into<String>, target: impl Into<String>) -> Self {
        self.causer = causer.into();
        self.target = target.into();
        self
    }

    pub fn critical_value(&self, percentile: f64) -> f64 {
        quantile(&self.bootstrap_stats, percentile)
    }

    /// The p-value as reported, e.g. `0.065`, or `<0.005` when no replicate
    /// reached the observed statistic (with 200 replicates).
    pub fn p_value_label(&self) -> String {
        if self.p_value == 0.0 {
            let floor = 1.0 / self.bootstrap_stats.len() as f64;
            format!("<{}", trim_decimal(floor))
        } else {
            format!("{:.3}", self.p_value)
        }
    }
}

fn trim_decimal(x: f64) -> String {
    let s = format!("{x:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Row-normalised Gaussian kernel weights in the conditioning variable,
/// with each observation excluded from its own row.
#[derive(Debug, Clone)]
pub struct KernelWeights {
    n: usize,
    w: Vec<f64>,
}

impl KernelWeights {
    pub fn new(cond: &[f64], h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Degenerate(format!(
                "conditioning bandwidth must be positive, got {h}"
            )));
        }
        if std_dev(cond) == 0.0 {
            return Err(Error::Degenerate("conditioning variable is constant".into()));
        }
        let n = cond.len();
        let mut w = vec![0.0; n * n];
        for (t, row) in w.chunks_mut(n).enumerate() {
            let d = |s: usize| {
                let z = (cond[s] - cond[t]) / h;
                0.5 * z * z
            };
            // Shift by the closest neighbour so isolated points keep finite weights.
            let dmin = (0..n).filter(|&s| s != t).map(d).fold(f64::INFINITY, f64::min);
            for s in (0..n).filter(|&s| s != t) {
                row[s] = (dmin - d(s)).exp();
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= total);
        }
        Ok(Self { n, w })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.w[t * self.n..(t + 1) * self.n]
    }

    /// Kernel PIT of `y` under these weights.
    pub fn pit(&self, y: &[f64], h: f64) -> Result<Vec<f64>> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Degenerate(format!(
                "response bandwidth must be positive, got {h}"
            )));
        }
        Ok((0..self.n)
            .map(|t| {
                let u: f64 = self
                    .row(t)
                    .iter()
                    .zip(y)
                    .map(|(w, ys)| w * norm_cdf((y[t] - ys) / h))
                    .sum();
                clamp_unit(u)
            })
            .collect())
    }

    /// PIT of a resampled series `x[perm[t]]` given precomputed kernel CDF
    /// values `phi[a·n + b] = Φ((x_a − x_b)/h)`.
    fn pit_gathered(&self, phi: &[f64], perm: &[usize]) -> Vec<f64> {
        (0..self.n)
            .map(|t| {
                let phi_row = &phi[perm[t] * self.n..(perm[t] + 1) * self.n];
                let u: f64 = self.row(t).iter().zip(perm).map(|(w, &p)| w * phi_row[p]).sum();
                clamp_unit(u)
            })
            .collect()
    }
}

fn clamp_unit(u: f64) -> f64 {
    u.clamp(PIT_CLAMP, 1.0 - PIT_CLAMP)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeBandwidths {
    pub response: f64,
    pub conditioning: f64,
}

impl KdeBandwidths {
    pub fn from_rule(rule: BandwidthRule, y: &[f64], cond: &[f64]) -> Self {
        Self {
            response: rule.bandwidth(y),
            conditioning: rule.bandwidth(cond),
        }
    }
}

/// Uniform residuals `U_t = Σ_s w_s(cond_t) Φ((y_t − y_s)/h_y)` with
/// self-excluded, normalised Gaussian weights in `cond`. Values are clamped
/// to `[1e-12, 1 − 1e-12]`.
pub fn conditional_cdf_kde(y: &[f64], cond: &[f64], bw: KdeBandwidths) -> Result<Vec<f64>> {
    if y.len() != cond.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: cond.len(),
        });
    }
    if y.len() < MIN_OBS {
        return Err(Error::InsufficientData(format!(
            "conditional KDE needs at least {MIN_OBS} observations, got {}",
            y.len()
        )));
    }
    KernelWeights::new(cond, bw.conditioning)?.pit(y, bw.response)
}

/// Bernstein-polynomial copula density with cell-frequency coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinCopula {
    pub degree: usize,
    /// Row-major `degree × degree` cell frequencies.
    pub theta: Vec<f64>,
    binom: Vec<f64>,
}

impl BernsteinCopula {
    pub fn fit(u: &[f64], v: &[f64], degree: usize) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::Empty("copula sample"));
        }
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                got: v.len(),
            });
        }
        if degree < 2 {
            return Err(Error::InvalidArgument(format!(
                "Bernstein degree must be at least 2, got {degree}"
            )));
        }
        if let Some(x) = u.iter().chain(v).find(|x| !(**x > 0.0 && **x < 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "copula sample value {x} is outside (0, 1)"
            )));
        }
        let m = degree;
        let cell = |x: f64| ((x * m as f64) as usize).min(m - 1);
        let mut theta = vec![0.0; m * m];
        let step = 1.0 / u.len() as f64;
        for (a, b) in u.iter().zip(v) {
            theta[cell(*a) * m + cell(*b)] += step;
        }
        let mut binom = vec![1.0; m];
        for j in 1..m {
            binom[j] = binom[j - 1] * (m - j) as f64 / j as f64;
        }
        Ok(Self { degree, theta, binom })
    }

    /// Beta(j+1, m−j) densities at `a` for j = 0..m.
    fn basis(&self, a: f64, out: &mut [f64]) {
        let m = self.degree;
        for (j, o) in out.iter_mut().enumerate() {
            *o = m as f64 * self.binom[j] * a.powi(j as i32) * (1.0 - a).powi((m - 1 - j) as i32);
        }
    }

    pub fn density(&self, a: f64, b: f64) -> f64 {
        let m = self.degree;
        let mut ba = vec![0.0; m];
        let mut bb = vec![0.0; m];
        self.basis(a, &mut ba);
        self.basis(b, &mut bb);
        self.theta
            .chunks(m)
            .zip(&ba)
            .map(|(row, wa)| wa * row.iter().zip(&bb).map(|(t, wb)| t * wb).sum::<f64>())
            .sum()
    }

    /// Mean of `ln max(c(u_t, v_t), 1e-10)`.
    pub fn mean_log_density(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter()
            .zip(v)
            .map(|(a, b)| self.density(*a, *b).max(DENSITY_FLOOR).ln())
            .sum::<f64>()
            / u.len() as f64
    }
}

pub fn bernstein_copula_density(u: &[f64], v: &[f64], degree: usize) -> Result<BernsteinCopula> {
    BernsteinCopula::fit(u, v, degree)
}

/// Target, conditioning and causer columns aligned at a given lag:
/// `(y_t, y_{t−lag}, x_{t−lag})` for `t = lag..n`.
fn align(target: &[f64], causer: &[f64], lag: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if target.len() != causer.len() {
        return Err(Error::Misaligned(format!(
            "target has {} observations, causer {}",
            target.len(),
            causer.len()
        )));
    }
    if target.len() < MIN_OBS + lag {
        return Err(Error::InsufficientData(format!(
            "CGC at lag {lag} needs at least {} observations, got {}",
            MIN_OBS + lag,
            target.len()
        )));
    }
    let n = target.len();
    Ok((
        target[lag..].to_vec(),
        target[..n - lag].to_vec(),
        causer[..n - lag].to_vec(),
    ))
}

/// Everything needed to evaluate the statistic for many causer resamples.
struct Prepared {
    weights: KernelWeights,
    u: Vec<f64>,
    causer_phi: Vec<f64>,
    degree: usize,
}

impl Prepared {
    fn new(target: &[f64], causer: &[f64], cfg: &CgcConfig) -> Result<Self> {
        cfg.validate()?;
        let (y, cond, x) = align(target, causer, cfg.horizon_lag)?;
        let rule = cfg.kde_bandwidth_rule;
        let weights = KernelWeights::new(&cond, rule.bandwidth(&cond))?;
        let u = weights.pit(&y, rule.bandwidth(&y))?;
        let hx = rule.bandwidth(&x);
        if !(hx > 0.0) {
            return Err(Error::Degenerate("causer series is constant".into()));
        }
        let n = x.len();
        let mut causer_phi = vec![0.0; n * n];
        for (a, row) in causer_phi.chunks_mut(n).enumerate() {
            for (b, p) in row.iter_mut().enumerate() {
                *p = norm_cdf((x[a] - x[b]) / hx);
            }
        }
        Ok(Self {
            degree: cfg.degree_for(n),
            weights,
            u,
            causer_phi,
        })
    }

    fn statistic(&self, perm: &[usize]) -> Result<f64> {
        let v = self.weights.pit_gathered(&self.causer_phi, perm);
        Ok(BernsteinCopula::fit(&self.u, &v, self.degree)?.mean_log_density(&self.u, &v))
    }
}

/// Mean log Bernstein-copula density of the target's and lagged causer's
/// conditional PIT residuals.
pub fn cgc_statistic(target: &[f64], causer: &[f64], cfg: &CgcConfig) -> Result<f64> {
    let cfg = CgcConfig {
        n_bootstrap: cfg.n_bootstrap.max(100),
        ..cfg.clone()
    };
    let prep = Prepared::new(target, causer, &cfg)?;
    let identity: Vec<usize> = (0..prep.u.len()).collect();
    prep.statistic(&identity)
}

/// Index sequence of a circular stationary bootstrap with geometric block
/// lengths of the given mean.
pub fn stationary_bootstrap_indices(n: usize, mean_block: f64, rng: &mut Rng) -> Vec<usize> {
    let restart = 1.0 / mean_block;
    let mut out = Vec::with_capacity(n);
    let mut i = rng.gen_range(0..n);
    for _ in 0..n {
        out.push(i);
        i = if rng.gen::<f64>() < restart {
            rng.gen_range(0..n)
        } else {
            (i + 1) % n
        };
    }
    out
}

/// Observed statistic against `n_bootstrap` block-resampled causers.
///
/// Replicates reuse the observed causer's bandwidth, so each one is a gather
/// over a precomputed kernel-CDF table rather than a fresh KDE.
pub fn bootstrap_cgc(target: &[f64], causer: &[f64], cfg: &CgcConfig, exec: Execution) -> Result<CgcResult> {
    let prep = Prepared::new(target, causer, cfg)?;
    let n = prep.u.len();
    let identity: Vec<usize> = (0..n).collect();
    let statistic = prep.statistic(&identity)?;
    let seed = crate::rng::derive_seed(cfg.seed, &format!("cgc:lag{}", cfg.horizon_lag));
    let stats = exec.try_map(cfg.n_bootstrap, |r| {
        let mut rng = rng_from_seed(replicate_seed(seed, "cgc:bootstrap", r));
        prep.statistic(&stationary_bootstrap_indices(n, cfg.block_length, &mut rng))
    })?;
    Ok(CgcResult::from_stats(statistic, stats, cfg))
}
