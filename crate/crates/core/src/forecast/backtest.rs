use super::dm::{dm_test, DmReport};
use super::features::{feature_row, Channel, ChannelData, FeatureSpec};
use crate::egarch::{fit_egarch_with, inverse_pit, EgarchParams, FitOptions, SkewT};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::factors::{fit_pca, FactorId, FactorPanels, Panel};
use crate::gbt::{fit_gbt, tune_report, Features, GbtHyperParams, GbtModel};
use crate::rng::derive_seed;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

const U_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MseConfig {
    /// Last in-sample day.
    pub train_end: NaiveDate,
    /// Last day to forecast; defaults to the end of the data.
    pub test_end: Option<NaiveDate>,
    /// Days between PCA, E-GARCH and GBT refits; 1 refits daily.
    pub refit_every: usize,
    pub lags: Vec<usize>,
    pub moving_averages: Vec<usize>,
    pub grid: Vec<GbtHyperParams>,
    pub n_folds: usize,
    pub min_train_days: usize,
    pub min_test_days: usize,
    pub seed: u64,
}

impl Default for MseConfig {
    fn default() -> Self {
        Self {
            train_end: NaiveDate::from_ymd_opt(2023, 12, 31).expect("valid date"),
            test_end: None,
            refit_every: 1,
            lags: vec![1, 7, 30],
            moving_averages: vec![7, 30],
            grid: GbtHyperParams::default_grid(0),
            n_folds: 5,
            min_train_days: 730,
            min_test_days: 60,
            seed: 0,
        }
    }
}

impl MseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.refit_every == 0 {
            return Err(Error::config("mse.refit_every", "must be at least 1"));
        }
        if self.grid.is_empty() {
            return Err(Error::config("mse.grid", "must not be empty"));
        }
        if self.n_folds == 0 {
            return Err(Error::config("mse.n_folds", "must be at least 1"));
        }
        if let Some(end) = self.test_end {
            if end <= self.train_end {
                return Err(Error::config("mse.test_end", "must be after train_end"));
            }
        }
        for hp in &self.grid {
            hp.validate().map_err(|e| Error::config("mse.grid", e.to_string()))?;
        }
        Ok(())
    }

    pub fn spec(&self, factors: &[FactorId]) -> FeatureSpec {
        FeatureSpec::new(factors).with_horizons(&self.lags, &self.moving_averages)
    }
}

/// A stablecoin factor tested as a leading indicator of a crypto factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    pub causer: FactorId,
    pub target: FactorId,
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.causer, self.target)
    }
}

/// One backtest: a pair and the feature sets of its two models.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestJob {
    pub pair: Pair,
    pub benchmark: FeatureSpec,
    pub challenger: FeatureSpec,
}

impl BacktestJob {
    /// Benchmark on the target's own channels; challenger adds the causer's.
    pub fn standard(pair: Pair, cfg: &MseConfig) -> Self {
        Self {
            pair,
            benchmark: cfg.spec(&[pair.target]),
            challenger: cfg.spec(&[pair.target, pair.causer]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    /// Day being forecast.
    pub date: NaiveDate,
    pub y_true: f64,
    pub y_hat_benchmark: f64,
    pub y_hat_challenger: f64,
    /// Conditional-mean forecast of the E-GARCH model alone.
    pub y_hat_egarch: f64,
    pub e_benchmark: f64,
    pub e_challenger: f64,
}

/// The target factor's PCA as used for one forecast, for mapping factor
/// predictions back to asset units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSnapshot {
    pub date: NaiveDate,
    pub asset_ids: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub loadings: Vec<f64>,
}

impl TargetSnapshot {
    /// Equal-weighted average asset-level value implied by a PC1 score
    /// through the rank-1 inverse transform.
    pub fn average_from_score(&self, score: f64) -> f64 {
        let n = self.means.len() as f64;
        self.means
            .iter()
            .zip(&self.stds)
            .zip(&self.loadings)
            .map(|((m, s), l)| m + s * l * score)
            .sum::<f64>()
            / n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseBacktest {
    pub pair: Pair,
    pub benchmark_params: GbtHyperParams,
    pub challenger_params: GbtHyperParams,
    pub records: Vec<ForecastRecord>,
    pub snapshots: Vec<TargetSnapshot>,
    /// Total gain per feature of the last fitted challenger model, descending.
    pub challenger_gains: Vec<(String, f64)>,
    pub benchmark_gains: Vec<(String, f64)>,
    pub refit_dates: Vec<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseSummary {
    pub pair: String,
    pub n_forecasts: usize,
    pub mse_benchmark: f64,
    pub mse_challenger: f64,
    pub mse_egarch: f64,
    /// 100 · (1 − MSE_challenger / MSE_benchmark)
    pub mse_reduction: f64,
    pub mse_reduction_vs_egarch: f64,
    /// Clark–West adjusted, challenger against benchmark.
    pub dm_benchmark: DmReport,
    /// Unadjusted, challenger against the E-GARCH mean forecast.
    pub dm_egarch: DmReport,
}

fn mse(errors: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for e in errors {
        s += e * e;
        n += 1;
    }
    s / n as f64
}

impl MseBacktest {
    pub fn summarize(&self) -> Result<MseSummary> {
        let r = &self.records;
        if r.is_empty() {
            return Err(Error::Empty("forecast records"));
        }
        let y: Vec<f64> = r.iter().map(|x| x.y_true).collect();
        let b: Vec<f64> = r.iter().map(|x| x.y_hat_benchmark).collect();
        let c: Vec<f64> = r.iter().map(|x| x.y_hat_challenger).collect();
        let g: Vec<f64> = r.iter().map(|x| x.y_hat_egarch).collect();
        let mse_benchmark = mse(r.iter().map(|x| x.e_benchmark));
        let mse_challenger = mse(r.iter().map(|x| x.e_challenger));
        let mse_egarch = mse(r.iter().map(|x| x.y_true - x.y_hat_egarch));
        Ok(MseSummary {
            pair: self.pair.to_string(),
            n_forecasts: r.len(),
            mse_benchmark,
            mse_challenger,
            mse_egarch,
            mse_reduction: 100.0 * (1.0 - mse_challenger / mse_benchmark),
            mse_reduction_vs_egarch: 100.0 * (1.0 - mse_challenger / mse_egarch),
            dm_benchmark: dm_test(&y, &b, &c, true)?,
            dm_egarch: dm_test(&y, &g, &c, false)?,
        })
    }
}

/// Backtests with whatever completed before a failure, if any.
#[derive(Debug)]
pub struct MseRun {
    pub backtests: Vec<MseBacktest>,
    pub failure: Option<Error>,
}

impl MseRun {
    pub fn into_result(self) -> Result<Vec<MseBacktest>> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self.backtests),
        }
    }
}

/// PCA and E-GARCH state of one factor after a refit.
struct FactorFit {
    loadings: Vec<f64>,
    snapshot_base: TargetSnapshot,
    params: EgarchParams,
    scores: Vec<f64>,
    residuals: Vec<f64>,
    vols: Vec<f64>,
    u: Vec<f64>,
}

impl FactorFit {
    fn new(
        id: FactorId,
        panel: &Panel,
        r: usize,
        last: usize,
        previous: Option<&(Vec<f64>, EgarchParams)>,
        seed: u64,
    ) -> Result<Self> {
        let mut pca = fit_pca(&panel.rows(0, r + 1), id.name())?;
        if let Some((prev, _)) = previous {
            pca.align_to(prev);
        }
        let scores: Vec<f64> = (0..=last).map(|t| pca.project(&panel.row(t))).collect();
        let opts = match previous {
            Some((_, p)) => FitOptions {
                starts: 1,
                warm_start: Some(*p),
                ..Default::default()
            },
            None => FitOptions::default(),
        };
        let seed = derive_seed(seed, &format!("mse:egarch:{id}"));
        let fit = match fit_egarch_with(&scores[..=r], seed, opts) {
            Err(Error::NonConvergence { .. }) if previous.is_some() => {
                fit_egarch_with(&scores[..=r], seed, FitOptions::default())?
            }
            other => other?,
        };
        let mut state = fit.state;
        for &v in &scores[r + 1..] {
            state.push(&fit.params, v);
        }
        let dist = SkewT::new(fit.params.dist);
        let u = state.residuals.iter().map(|z| dist.cdf(*z)).collect();
        Ok(Self {
            loadings: pca.pc1().to_vec(),
            snapshot_base: TargetSnapshot {
                date: panel.dates[r],
                asset_ids: pca.asset_ids.clone(),
                means: pca.means.clone(),
                stds: pca.stds.clone(),
                loadings: pca.pc1().to_vec(),
            },
            params: fit.params,
            scores,
            residuals: state.residuals,
            vols: state.cond_vols,
            u,
        })
    }

    /// Conditional mean and volatility of day `t + 1` given data up to `t`.
    fn one_step(&self, t: usize) -> (f64, f64) {
        let p = &self.params;
        (
            p.mu + p.phi * self.scores[t],
            p.next_sigma(self.vols[t], self.residuals[t]),
        )
    }
}

struct Model {
    target: FactorId,
    spec: FeatureSpec,
    names: Vec<String>,
    params: GbtHyperParams,
    fitted: Option<GbtModel>,
}

fn training_set(channels: &ChannelData, m: &Model, first: usize, r: usize) -> Result<(Features, Vec<f64>)> {
    let label = channels.get(m.target, Channel::UniformResidual)?;
    let rows = (first..r)
        .map(|t| feature_row(channels, &m.spec, t))
        .collect::<Result<Vec<_>>>()?;
    let y = (first..r).map(|t| label[t + 1]).collect();
    Ok((Features::from_rows(m.names.clone(), &rows)?, y))
}

/// Runs a single pair with the standard feature sets.
pub fn run_mse_backtest(data: &FactorPanels, pair: Pair, cfg: &MseConfig, exec: Execution) -> Result<MseBacktest> {
    let job = BacktestJob::standard(pair, cfg);
    let mut run = run_mse_backtests(data, std::slice::from_ref(&job), cfg, exec).into_result()?;
    Ok(run.remove(0))
}

/// Expanding-window out-of-sample backtests. Factor fits and benchmark
/// models are shared between jobs with the same target.
pub fn run_mse_backtests(data: &FactorPanels, jobs: &[BacktestJob], cfg: &MseConfig, exec: Execution) -> MseRun {
    let mut backtests: Vec<MseBacktest> = Vec::new();
    let failure = run_inner(data, jobs, cfg, exec, &mut backtests).err();
    MseRun { backtests, failure }
}

fn run_inner(
    data: &FactorPanels,
    jobs: &[BacktestJob],
    cfg: &MseConfig,
    exec: Execution,
    out: &mut Vec<MseBacktest>,
) -> Result<()> {
    cfg.validate()?;
    if jobs.is_empty() {
        return Err(Error::InvalidArgument("no backtest jobs".into()));
    }
    let dates = &data.dates;
    let n = dates.len();
    let start = dates
        .iter()
        .rposition(|d| *d <= cfg.train_end)
        .ok_or_else(|| Error::InsufficientData("no data on or before train_end".into()))?;
    let last_target = match cfg.test_end {
        Some(end) => dates.iter().rposition(|d| *d <= end).unwrap_or(0),
        None => n - 1,
    };
    if start + 1 < cfg.min_train_days {
        return Err(Error::InsufficientData(format!(
            "training window has {} days, need {}",
            start + 1,
            cfg.min_train_days
        )));
    }
    if last_target < start + cfg.min_test_days {
        return Err(Error::InsufficientData(format!(
            "test window has {} days, need {}",
            last_target.saturating_sub(start),
            cfg.min_test_days
        )));
    }
    let last_as_of = last_target - 1;

    let mut models: Vec<Model> = Vec::new();
    let mut model_index = |target: FactorId, spec: &FeatureSpec| -> Result<usize> {
        spec.validate()?;
        if let Some(i) = models.iter().position(|m| m.target == target && &m.spec == spec) {
            return Ok(i);
        }
        models.push(Model {
            target,
            spec: spec.clone(),
            names: spec.names(),
            params: GbtHyperParams::default(),
            fitted: None,
        });
        Ok(models.len() - 1)
    };
    let job_models: Vec<(usize, usize)> = jobs
        .iter()
        .map(|j| {
            Ok((
                model_index(j.pair.target, &j.benchmark)?,
                model_index(j.pair.target, &j.challenger)?,
            ))
        })
        .collect::<Result<_>>()?;
    let lookback = models.iter().map(|m| m.spec.lookback()).max().unwrap_or(1);

    let mut needed: Vec<FactorId> = models.iter().flat_map(|m| m.spec.factors()).collect();
    needed.extend(jobs.iter().map(|j| j.pair.target));
    needed.sort();
    needed.dedup();
    let panels: Vec<&Panel> = needed.iter().map(|f| data.panel(*f)).collect::<Result<_>>()?;

    *out = jobs
        .iter()
        .map(|j| MseBacktest {
            pair: j.pair,
            benchmark_params: GbtHyperParams::default(),
            challenger_params: GbtHyperParams::default(),
            records: Vec::new(),
            snapshots: Vec::new(),
            challenger_gains: Vec::new(),
            benchmark_gains: Vec::new(),
            refit_dates: Vec::new(),
        })
        .collect();

    let mut previous: BTreeMap<FactorId, (Vec<f64>, EgarchParams)> = BTreeMap::new();
    let mut r = start;
    while r <= last_as_of {
        let block_end = (r + cfg.refit_every - 1).min(last_as_of);
        let refit = |e: Error| e.at_stage("mse", dates[r]);
        let fits: Vec<FactorFit> = exec
            .try_map(needed.len(), |k| {
                FactorFit::new(
                    needed[k],
                    panels[k],
                    r,
                    block_end + 1,
                    previous.get(&needed[k]),
                    cfg.seed,
                )
            })
            .map_err(refit)?;
        let fit_of: BTreeMap<FactorId, &FactorFit> = needed.iter().copied().zip(fits.iter()).collect();
        let mut channels = ChannelData {
            dates: dates[..=block_end + 1].to_vec(),
            series: BTreeMap::new(),
        };
        for (f, fit) in &fit_of {
            channels.series.insert((*f, Channel::UniformResidual), fit.u.clone());
            channels
                .series
                .insert((*f, Channel::ConditionalVolatility), fit.vols.clone());
        }

        if r == start {
            for m in models.iter_mut() {
                let (x, y) = training_set(&channels, m, lookback, r).map_err(refit)?;
                let seed = derive_seed(cfg.seed, &format!("mse:gbt:{}", m.target));
                let grid: Vec<GbtHyperParams> = cfg.grid.iter().map(|g| GbtHyperParams { seed, ..*g }).collect();
                m.params = tune_report(&x, &y, &grid, cfg.n_folds, exec).map_err(refit)?.best;
            }
        }
        let fitted = exec
            .try_map(models.len(), |i| {
                let (x, y) = training_set(&channels, &models[i], lookback, r)?;
                fit_gbt(&x, &y, &models[i].params)
            })
            .map_err(refit)?;
        for (m, f) in models.iter_mut().zip(fitted) {
            m.fitted = Some(f);
        }

        for t in r..=block_end {
            let at = |e: Error| e.at_stage("mse", dates[t]);
            let mut predictions = Vec::with_capacity(models.len());
            for m in &models {
                let row = feature_row(&channels, &m.spec, t).map_err(at)?;
                let u = m.fitted.as_ref().expect("fitted above").predict_row(&row);
                let target = fit_of[&m.target];
                let z = inverse_pit(u.clamp(U_CLAMP, 1.0 - U_CLAMP), &target.params.dist).map_err(at)?;
                let (mean, sigma) = target.one_step(t);
                predictions.push(mean + sigma * z);
            }
            for ((job, bt), (b, c)) in jobs.iter().zip(out.iter_mut()).zip(&job_models) {
                let target = fit_of[&job.pair.target];
                let y_true = target.scores[t + 1];
                let (yb, yc) = (predictions[*b], predictions[*c]);
                bt.records.push(ForecastRecord {
                    date: dates[t + 1],
                    y_true,
                    y_hat_benchmark: yb,
                    y_hat_challenger: yc,
                    y_hat_egarch: target.one_step(t).0,
                    e_benchmark: y_true - yb,
                    e_challenger: y_true - yc,
                });
                bt.snapshots.push(TargetSnapshot {
                    date: dates[t + 1],
                    ..target.snapshot_base.clone()
                });
            }
        }

        for (bt, (b, c)) in out.iter_mut().zip(&job_models) {
            bt.refit_dates.push(dates[r]);
            bt.benchmark_params = models[*b].params;
            bt.challenger_params = models[*c].params;
            bt.benchmark_gains = models[*b].fitted.as_ref().expect("fitted").importance();
            bt.challenger_gains = models[*c].fitted.as_ref().expect("fitted").importance();
        }
        for (f, fit) in &fit_of {
            previous.insert(*f, (fit.loadings.clone(), fit.params));
        }
        r = block_end + 1;
    }
    Ok(())
}
