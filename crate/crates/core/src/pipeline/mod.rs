//! End-to-end runs driven by a single JSON config.
//!
//! Each stage reads the previous stage's files from the output directory,
//! so any stage can be re-run on its own:
//!
//! ```text
//! ingest            data/*.csv        -> transforms/
//! factors           transforms/       -> factors/
//! cgc               factors/          -> cgc/
//! backtest-mse      transforms/       -> mse/
//! backtest-strategy mse/ + data/*.csv -> strategy/
//! ```
//!
//! `report-all` runs them in that order. Every stage records its parameters
//! and derived seeds in `manifest.json`.

mod artifacts;
mod config;

pub use artifacts::{read_csv, read_json, sha256_hex, Manifest, MANIFEST};
pub use config::{
    parse_pair, CgcStageConfig, DataConfig, FactorStageConfig, MseStageConfig, Period, RunConfig, SimulateStageConfig,
    StrategyStageConfig, WinsorConfig,
};

use crate::cgc::{bootstrap_cgc, CgcResult};
use crate::error::{Error, Result};
use crate::exec::{with_workers, Execution};
use crate::factors::{fit_pca, horns_parallel_analysis, FactorId, FactorPanels, HornResult, Market, Panel};
use crate::forecast::{run_mse_backtests, BacktestJob, MseBacktest, Pair};
use crate::market_data::{
    adf_test, load_ohlcv_csv, read_series_csv, transform, write_ohlcv_csv, write_series_csv, Metric, OhlcvSeries,
    Winsorizer,
};
use crate::rng::derive_seed;
use crate::simulate::simulate_market;
use crate::strategy::{run_strategies, StrategyData, StrategyLedger, Variant};
use artifacts::{ensure_dir, update_manifest, write_csv, write_json};
use chrono::NaiveDate;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    Factors,
    Cgc,
    BacktestMse,
    BacktestStrategy,
    Simulate,
    ReportAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Factors => "factors",
            Command::Cgc => "cgc",
            Command::BacktestMse => "backtest-mse",
            Command::BacktestStrategy => "backtest-strategy",
            Command::Simulate => "simulate",
            Command::ReportAll => "report-all",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn ymd(d: NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn horizon_name(lag: usize) -> String {
    match lag {
        1 => "daily".into(),
        7 => "weekly".into(),
        30 => "monthly".into(),
        l => format!("lag{l}"),
    }
}

fn pair_file(p: &Pair) -> String {
    format!("{}__{}", p.causer, p.target)
}

/// A validated config bound to its input and output locations.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: RunConfig,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub exec: Execution,
    config_sha256: String,
}

/// Per-factor PCA report.
#[derive(Debug, Clone, Serialize)]
struct FactorReport<'a> {
    factor: &'a str,
    n_obs: usize,
    asset_ids: &'a [String],
    means: &'a [f64],
    stds: &'a [f64],
    pc1_loadings: &'a [f64],
    eigenvalues: &'a [f64],
    explained_variance: f64,
    horn: &'a HornResult,
}

impl Pipeline {
    /// Relative paths in `config` are resolved against `base_dir`.
    pub fn new(config: RunConfig, base_dir: &Path) -> Result<Self> {
        config.validate()?;
        let data_dir = base_dir.join(&config.data.dir);
        let out_dir = base_dir.join(&config.out_dir);
        let mut hashed = config.clone();
        hashed.out_dir = PathBuf::new();
        let config_sha256 = sha256_hex(serde_json::to_string(&hashed)?.as_bytes());
        Ok(Self {
            config,
            data_dir,
            out_dir,
            exec: Execution::Parallel,
            config_sha256,
        })
    }

    /// Loads a config file, applies command-line overrides and validates.
    pub fn from_file(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self> {
        let mut config = RunConfig::load(path)?;
        if let Some(s) = seed {
            config.seed = s;
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let mut p = Self::new(config, base)?;
        if let Some(o) = out {
            p.out_dir = o;
        }
        Ok(p)
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn run(&self, command: Command) -> Result<()> {
        with_workers(self.config.workers, || match command {
            Command::Simulate => self.simulate(),
            Command::Ingest => self.ingest(),
            Command::Factors => self.factors(),
            Command::Cgc => self.cgc(),
            Command::BacktestMse => self.backtest_mse(),
            Command::BacktestStrategy => self.backtest_strategy(),
            Command::ReportAll => {
                self.ingest()?;
                self.factors()?;
                self.cgc()?;
                self.backtest_mse()?;
                self.backtest_strategy()
            }
        })
    }

    fn stage_dir(&self, name: &str) -> Result<PathBuf> {
        let dir = self.out_dir.join(name);
        ensure_dir(&dir)?;
        Ok(dir)
    }

    fn record(&self, stage: &str, params: serde_json::Value) -> Result<()> {
        update_manifest(&self.out_dir, &self.config_sha256, self.config.seed, stage, params)
    }

    fn all_assets(&self) -> impl Iterator<Item = (&String, Market)> {
        let c = &self.config;
        c.stablecoins
            .iter()
            .map(|a| (a, Market::Stablecoin))
            .chain(c.cryptos.iter().map(|a| (a, Market::Crypto)))
    }

    fn asset_path(&self, asset: &str) -> PathBuf {
        self.data_dir
            .join(self.config.data.file_pattern.replace("{asset}", asset))
    }

    /// Synthetic OHLCV files for every configured asset, plus the parameters
    /// that generated them.
    pub fn simulate(&self) -> Result<()> {
        let sim = self.config.simulation();
        let market = simulate_market(&sim)?;
        ensure_dir(&self.data_dir)?;
        for s in &market.series {
            write_ohlcv_csv(self.asset_path(&s.asset_id), s)?;
        }
        write_json(&self.data_dir.join("ground_truth.json"), &market.truth)
    }

    fn load_prices(&self, assets: &[String]) -> Result<Vec<OhlcvSeries>> {
        let p = self.config.period;
        let mut out = Vec::with_capacity(assets.len());
        for a in assets {
            let series =
                load_ohlcv_csv(self.asset_path(a), a, &self.config.data.columns)?.slice(p.start, p.test_end)?;
            let dates = series.dates();
            match (dates.first(), dates.last()) {
                (Some(first), Some(last)) if *first <= p.start + chrono::Days::new(1) && *last > p.train_end => {}
                _ => {
                    return Err(Error::Misaligned(format!(
                        "{a} does not cover {} to beyond {}",
                        p.start, p.train_end
                    )))
                }
            }
            if let Some(prev) = out.first() {
                let prev: &OhlcvSeries = prev;
                if prev.dates() != dates {
                    return Err(Error::Misaligned(format!(
                        "{a} and {} cover different dates",
                        prev.asset_id
                    )));
                }
            }
            out.push(series);
        }
        Ok(out)
    }

    /// Transforms, training-window winsorisation and stationarity tests.
    pub fn ingest(&self) -> Result<()> {
        let cfg = &self.config;
        let assets: Vec<String> = self.all_assets().map(|(a, _)| a.clone()).collect();
        let prices = self.load_prices(&assets)?;
        let dir = self.stage_dir("transforms")?;
        let mut bounds = Vec::new();
        let mut adf_rows = Vec::new();
        let mut adf_by_metric: BTreeMap<Metric, Vec<(f64, f64)>> = BTreeMap::new();
        for ((asset, market), series) in self.all_assets().zip(&prices) {
            for ts in transform(series)?.into_vec() {
                let n_train = ts.dates.iter().take_while(|d| **d <= cfg.period.train_end).count();
                let w = Winsorizer::fit(&ts.values[..n_train], cfg.winsorize.lower, cfg.winsorize.upper)?;
                let mut values = w.apply(&ts.values[..n_train]);
                values.extend_from_slice(&ts.values[n_train..]);
                let adf = adf_test(&values[..n_train], cfg.adf_max_lag)?;
                write_series_csv(
                    dir.join(format!("{asset}__{}.csv", ts.metric.as_str())),
                    &ts.dates,
                    &values,
                )?;
                bounds.push(vec![
                    asset.clone(),
                    ts.metric.as_str().into(),
                    num(w.lower),
                    num(w.upper),
                ]);
                adf_rows.push(vec![
                    asset.clone(),
                    format!("{market:?}").to_lowercase(),
                    ts.metric.as_str().into(),
                    num(adf.statistic),
                    num(adf.p_value),
                    adf.used_lag.to_string(),
                    adf.n_obs.to_string(),
                ]);
                adf_by_metric
                    .entry(ts.metric)
                    .or_default()
                    .push((adf.statistic, adf.p_value));
            }
        }
        write_csv(
            &dir.join("winsor_bounds.csv"),
            &["asset", "metric", "lower", "upper"],
            bounds,
        )?;
        write_csv(
            &dir.join("adf.csv"),
            &["asset", "market", "metric", "statistic", "p_value", "used_lag", "n_obs"],
            adf_rows,
        )?;
        write_csv(
            &dir.join("adf_summary.csv"),
            &["metric", "statistic_min", "statistic_max", "max_p_value"],
            adf_by_metric.iter().map(|(m, v)| {
                let min = v.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
                let max = v.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
                let p = v.iter().map(|x| x.1).fold(0.0, f64::max);
                vec![m.as_str().into(), num(min), num(max), num(p)]
            }),
        )?;
        self.record(
            "ingest",
            json!({ "assets": assets, "period": cfg.period, "winsorize": cfg.winsorize, "adf_max_lag": cfg.adf_max_lag }),
        )
    }

    /// Asset-level panels of the six factors over the whole period.
    pub fn load_panels(&self) -> Result<FactorPanels> {
        let dir = self.out_dir.join("transforms");
        let mut panels = BTreeMap::new();
        for id in FactorId::ALL {
            let assets = match id.market {
                Market::Stablecoin => &self.config.stablecoins,
                Market::Crypto => &self.config.cryptos,
            };
            let mut dates = None;
            let mut columns = Vec::new();
            for a in assets {
                let (d, v) = read_series_csv(dir.join(format!("{a}__{}.csv", id.metric.as_str())))?;
                match &dates {
                    None => dates = Some(d),
                    Some(prev) if *prev != d => {
                        return Err(Error::Misaligned(format!(
                            "{a} {} has a different calendar",
                            id.metric.as_str()
                        )))
                    }
                    _ => {}
                }
                columns.push(v);
            }
            panels.insert(id, Panel::new(dates.unwrap_or_default(), assets.clone(), columns)?);
        }
        FactorPanels::new(panels)
    }

    fn n_train(&self, dates: &[NaiveDate]) -> usize {
        dates.iter().take_while(|d| **d <= self.config.period.train_end).count()
    }

    /// In-sample PCA factors and Horn's parallel analysis.
    pub fn factors(&self) -> Result<()> {
        let cfg = &self.config;
        let panels = self.load_panels()?;
        let n_train = self.n_train(&panels.dates);
        let dir = self.stage_dir("factors")?;
        let mut scores = Vec::new();
        let mut loadings = Vec::new();
        let mut horn_rows = Vec::new();
        let mut seeds = BTreeMap::new();
        for id in FactorId::ALL {
            let train = panels.panel(id)?.rows(0, n_train);
            let pca = fit_pca(&train, id.name())?;
            let seed = derive_seed(cfg.seed, &format!("factors:horn:{id}"));
            seeds.insert(id.name(), seed);
            let horn = horns_parallel_analysis(
                &train,
                cfg.factors.horn_n_random,
                cfg.factors.horn_percentile,
                seed,
                self.exec,
            )?;
            for (a, l) in pca.asset_ids.iter().zip(pca.pc1()) {
                loadings.push(vec![id.name().into(), a.clone(), num(*l)]);
            }
            horn_rows.push(vec![
                id.name().into(),
                num(pca.explained_variance()),
                num(horn.eigenvalues_observed[0]),
                num(horn.eigenvalues_critical[0]),
                horn.retained
                    .iter()
                    .map(|k| format!("PC{}", k + 1))
                    .collect::<Vec<_>>()
                    .join(" "),
            ]);
            write_csv(
                &dir.join(format!("scree_{id}.csv")),
                &["component", "lambda_corr", "lambda_crit"],
                horn.eigenvalues_observed
                    .iter()
                    .zip(&horn.eigenvalues_critical)
                    .enumerate()
                    .map(|(k, (o, c))| vec![(k + 1).to_string(), num(*o), num(*c)]),
            )?;
            write_json(
                &dir.join(format!("pca_{id}.json")),
                &FactorReport {
                    factor: id.name(),
                    n_obs: train.n_obs(),
                    asset_ids: &pca.asset_ids,
                    means: &pca.means,
                    stds: &pca.stds,
                    pc1_loadings: pca.pc1(),
                    eigenvalues: &pca.eigenvalues,
                    explained_variance: pca.explained_variance(),
                    horn: &horn,
                },
            )?;
            scores.push(pca.scores);
        }
        let mut header = vec!["date"];
        header.extend(FactorId::ALL.iter().map(|f| f.name()));
        write_csv(
            &dir.join("scores.csv"),
            &header,
            (0..n_train).map(|t| {
                let mut row = vec![ymd(panels.dates[t])];
                row.extend(scores.iter().map(|s| num(s[t])));
                row
            }),
        )?;
        write_csv(&dir.join("loadings.csv"), &["factor", "asset", "loading"], loadings)?;
        write_csv(
            &dir.join("horn.csv"),
            &[
                "factor",
                "explained_variance",
                "lambda_corr_1",
                "lambda_crit_1",
                "retained",
            ],
            horn_rows,
        )?;
        self.record(
            "factors",
            json!({ "train_end": cfg.period.train_end, "n_obs": n_train, "horn": cfg.factors, "seeds": seeds }),
        )
    }

    /// PC1 scores written by the factors stage.
    pub fn load_scores(&self) -> Result<BTreeMap<FactorId, Vec<f64>>> {
        let path = self.out_dir.join("factors").join("scores.csv");
        let (header, rows) = read_csv(&path)?;
        let mut out = BTreeMap::new();
        for (j, name) in header.iter().enumerate().skip(1) {
            let id = FactorId::parse(name).ok_or_else(|| Error::MissingColumn(name.clone()))?;
            let values = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    r[j].parse::<f64>().map_err(|_| Error::Parse {
                        row: i + 1,
                        column: name.clone(),
                        value: r[j].clone(),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            out.insert(id, values);
        }
        Ok(out)
    }

    /// Copula Granger causality for every configured pair and horizon.
    pub fn cgc(&self) -> Result<()> {
        let cfg = &self.config;
        let scores = self.load_scores()?;
        let series = |id: FactorId| scores.get(&id).ok_or_else(|| Error::MissingColumn(id.name().into()));
        let dir = self.stage_dir("cgc")?;
        let mut results: Vec<CgcResult> = Vec::new();
        let mut seeds = BTreeMap::new();
        let pairs = cfg.cgc_pairs();
        for p in &pairs {
            let seed = derive_seed(cfg.seed, &format!("cgc:{p}"));
            seeds.insert(p.to_string(), seed);
            for &lag in &cfg.cgc.horizons {
                let test = cfg.cgc.test_config(lag, seed);
                let r = bootstrap_cgc(series(p.target)?, series(p.causer)?, &test, self.exec)?
                    .labelled(p.causer.name(), p.target.name());
                write_csv(
                    &dir.join("bootstrap").join(format!("{}__lag{lag}.csv", pair_file(p))),
                    &["replicate", "statistic"],
                    r.bootstrap_stats
                        .iter()
                        .enumerate()
                        .map(|(i, s)| vec![i.to_string(), num(*s)]),
                )?;
                results.push(r);
            }
        }
        let mut header = vec!["direction".to_string(), "causer".into(), "target".into()];
        header.extend(cfg.cgc.horizons.iter().map(|h| horizon_name(*h)));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let nh = cfg.cgc.horizons.len();
        write_csv(
            &dir.join("table.csv"),
            &header,
            pairs.iter().zip(results.chunks(nh)).map(|(p, rs)| {
                let direction = match p.causer.market {
                    Market::Stablecoin => "stablecoin->crypto",
                    Market::Crypto => "crypto->stablecoin",
                };
                let mut row = vec![direction.into(), p.causer.name().into(), p.target.name().into()];
                row.extend(
                    rs.iter()
                        .map(|r| format!("{}{}", r.p_value_label(), if r.significant { "*" } else { "" })),
                );
                row
            }),
        )?;
        write_csv(
            &dir.join("results.csv"),
            &[
                "causer",
                "target",
                "horizon_lag",
                "statistic",
                "critical_value",
                "p_value",
                "p_label",
                "significant",
            ],
            results.iter().map(|r| {
                vec![
                    r.causer.clone(),
                    r.target.clone(),
                    r.horizon_lag.to_string(),
                    num(r.statistic),
                    num(r.critical_value(cfg.cgc.percentile)),
                    num(r.p_value),
                    r.p_value_label(),
                    r.significant.to_string(),
                ]
            }),
        )?;
        self.record(
            "cgc",
            json!({ "config": cfg.cgc, "n_obs": scores.values().next().map_or(0, Vec::len), "seeds": seeds }),
        )
    }

    /// Expanding-window benchmark/challenger forecasts for every pair.
    pub fn backtest_mse(&self) -> Result<()> {
        let cfg = &self.config;
        let panels = self.load_panels()?;
        let mse = cfg.mse_config();
        let jobs: Vec<BacktestJob> = cfg
            .mse_pairs()
            .into_iter()
            .map(|p| BacktestJob::standard(p, &mse))
            .collect();
        let run = run_mse_backtests(&panels, &jobs, &mse, self.exec);
        let dir = self.stage_dir("mse")?;
        let mut summaries = Vec::new();
        for bt in &run.backtests {
            let name = pair_file(&bt.pair);
            write_json(&dir.join("backtests").join(format!("{name}.json")), bt)?;
            write_csv(
                &dir.join(format!("records_{name}.csv")),
                &[
                    "date",
                    "y_true",
                    "y_hat_benchmark",
                    "y_hat_challenger",
                    "y_hat_egarch",
                    "e_benchmark",
                    "e_challenger",
                ],
                bt.records.iter().map(|r| {
                    vec![
                        ymd(r.date),
                        num(r.y_true),
                        num(r.y_hat_benchmark),
                        num(r.y_hat_challenger),
                        num(r.y_hat_egarch),
                        num(r.e_benchmark),
                        num(r.e_challenger),
                    ]
                }),
            )?;
            write_csv(
                &dir.join(format!("gains_{name}.csv")),
                &["feature", "gain"],
                bt.challenger_gains.iter().map(|(f, g)| vec![f.clone(), num(*g)]),
            )?;
            if run.failure.is_none() {
                summaries.push(bt.summarize()?);
            }
        }
        if let Some(e) = run.failure {
            return Err(e);
        }
        write_csv(
            &dir.join("summary.csv"),
            &[
                "pair",
                "n_forecasts",
                "mse_benchmark",
                "mse_challenger",
                "mse_reduction_pct",
                "dm_p_value",
                "mse_egarch",
                "mse_reduction_vs_egarch_pct",
                "dm_egarch_p_value",
            ],
            summaries.iter().map(|s| {
                vec![
                    s.pair.clone(),
                    s.n_forecasts.to_string(),
                    num(s.mse_benchmark),
                    num(s.mse_challenger),
                    num(s.mse_reduction),
                    num(s.dm_benchmark.p_value),
                    num(s.mse_egarch),
                    num(s.mse_reduction_vs_egarch),
                    num(s.dm_egarch.p_value),
                ]
            }),
        )?;
        write_json(&dir.join("summary.json"), &summaries)?;
        let hyper: BTreeMap<String, _> = run
            .backtests
            .iter()
            .map(|b| {
                (
                    b.pair.to_string(),
                    json!({ "benchmark": b.benchmark_params, "challenger": b.challenger_params }),
                )
            })
            .collect();
        let mut recorded = json!({
            "train_end": mse.train_end,
            "test_end": mse.test_end,
            "refit_every": mse.refit_every,
            "lags": mse.lags,
            "moving_averages": mse.moving_averages,
            "n_folds": mse.n_folds,
            "grid_size": mse.grid.len(),
            "selected": hyper,
        });
        recorded["seeds"] = FactorId::ALL
            .iter()
            .map(|f| {
                (
                    f.name().to_string(),
                    json!({
                        "egarch": derive_seed(cfg.seed, &format!("mse:egarch:{f}")),
                        "gbt": derive_seed(cfg.seed, &format!("mse:gbt:{f}")),
                    }),
                )
            })
            .collect::<serde_json::Map<_, _>>()
            .into();
        self.record("backtest-mse", recorded)
    }

    fn load_backtest(&self, pair: &str) -> Result<MseBacktest> {
        let p = parse_pair(pair).ok_or_else(|| Error::config("strategy", format!("cannot parse `{pair}`")))?;
        read_json(
            &self
                .out_dir
                .join("mse")
                .join("backtests")
                .join(format!("{}.json", pair_file(&p))),
        )
    }

    /// Volatility-targeting backtests driven by the MSE stage's forecasts.
    pub fn backtest_strategy(&self) -> Result<()> {
        let cfg = &self.config;
        let up = self.load_backtest(&cfg.strategy.up_pair)?;
        let down = self.load_backtest(&cfg.strategy.down_pair)?;
        let prices = self.load_prices(&cfg.cryptos)?;
        let data = StrategyData {
            prices: &prices,
            up: &up,
            down: &down,
        };
        let params = cfg.strategy.params();
        let mut ledgers = run_strategies(&data, &params, self.exec)?;
        // Report order: buy & hold first, then each target's models.
        ledgers.rotate_right(1);
        let dir = self.stage_dir("strategy")?;
        let label = |l: &StrategyLedger| match l.sigma_target {
            Some(t) => format!("{}_{}", l.variant, num(100.0 * t)),
            None => l.variant.to_string(),
        };
        for l in &ledgers {
            let mut header: Vec<String> = vec!["date".into()];
            header.extend(l.asset_ids.iter().map(|a| format!("w_{a}")));
            header.extend(
                [
                    "exposure",
                    "signal",
                    "multiplier",
                    "gross_return",
                    "turnover",
                    "cost",
                    "net_return",
                    "equity",
                ]
                .map(String::from),
            );
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            write_csv(
                &dir.join(format!("ledger_{}.csv", label(l))),
                &header,
                l.rows.iter().map(|r| {
                    let mut row = vec![ymd(r.date)];
                    row.extend(r.weights.iter().map(|w| num(*w)));
                    row.extend(
                        [
                            r.exposure,
                            r.signal,
                            r.multiplier,
                            r.gross_return,
                            r.turnover,
                            r.cost,
                            r.net_return,
                            r.equity,
                        ]
                        .map(num),
                    );
                    row
                }),
            )?;
        }
        let mut header = vec!["date".to_string()];
        header.extend(ledgers.iter().map(label));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_csv(
            &dir.join("equity.csv"),
            &header,
            (0..ledgers[0].rows.len()).map(|t| {
                let mut row = vec![ymd(ledgers[0].rows[t].date)];
                row.extend(ledgers.iter().map(|l| num(l.rows[t].equity)));
                row
            }),
        )?;
        write_csv(
            &dir.join("summary.csv"),
            &[
                "strategy",
                "sigma_target",
                "ann_return",
                "ann_vol",
                "max_drawdown",
                "sortino",
            ],
            ledgers.iter().map(|l| {
                vec![
                    l.variant.label().into(),
                    l.sigma_target.map_or("-".into(), num),
                    num(l.summary.ann_return),
                    num(l.summary.ann_vol),
                    num(l.summary.max_drawdown),
                    l.summary.sortino.to_string(),
                ]
            }),
        )?;
        let summary: Vec<_> = ledgers
            .iter()
            .map(|l| json!({ "strategy": l.variant, "sigma_target": l.sigma_target, "metrics": l.summary, "degenerate_days": l.degenerate_days }))
            .collect();
        write_json(&dir.join("summary.json"), &summary)?;
        let variants: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
        self.record(
            "backtest-strategy",
            json!({ "config": cfg.strategy, "variants": variants, "n_days": ledgers[0].rows.len() }),
        )
    }
}
