//! Volatility-targeting portfolio backtest.
//!
//! Each day the predicted upside and downside volatility shocks of the crypto
//! factors are added to today's cross-asset average Rogers–Satchell
//! components. The normalised spread of the two forecasts is the trading
//! signal; its z-score against the previous 60 signals scales a base exposure
//! that targets an annual volatility. Assets are weighted by the ratio of
//! their upside to downside PC1 loadings.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::forecast::{MseBacktest, TargetSnapshot};
use crate::market_data::{rogers_satchell, OhlcvSeries};
use crate::stats::{mean, pop_std_dev, std_dev};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyConfig {
    /// Annual volatility targets, as fractions.
    pub sigma_targets: Vec<f64>,
    pub cost_bp: f64,
    pub days_per_year: f64,
    /// Signals used for the z-score of today's signal.
    pub z_window: usize,
    /// Days in the naive strategy's trailing volatility mean.
    pub naive_window: usize,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            sigma_targets: vec![0.2, 0.5],
            cost_bp: 1.0,
            days_per_year: 366.0,
            z_window: 60,
            naive_window: 30,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma_targets.is_empty() || self.sigma_targets.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::config(
                "strategy.sigma_targets",
                "need at least one positive target",
            ));
        }
        if !(self.cost_bp >= 0.0 && self.cost_bp.is_finite()) {
            return Err(Error::config("strategy.cost_bp", "must be non-negative"));
        }
        if !(self.days_per_year > 0.0) {
            return Err(Error::config("strategy.days_per_year", "must be positive"));
        }
        if self.z_window < 2 {
            return Err(Error::config("strategy.z_window", "must be at least 2"));
        }
        if self.naive_window == 0 {
            return Err(Error::config("strategy.naive_window", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Naive,
    Benchmark,
    Challenger,
    BuyAndHold,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Naive,
        Variant::Benchmark,
        Variant::Challenger,
        Variant::BuyAndHold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Naive => "naive",
            Variant::Benchmark => "benchmark",
            Variant::Challenger => "challenger",
            Variant::BuyAndHold => "buy_and_hold",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::Naive => "Naive",
            Variant::Benchmark => "Benchmark",
            Variant::Challenger => "Challenger",
            Variant::BuyAndHold => "Buy & Hold",
        }
    }

    fn targets_volatility(self) -> bool {
        self != Variant::BuyAndHold
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalState {
    pub sigma_up_bar: f64,
    pub sigma_down_bar: f64,
    pub delta_up_hat: f64,
    pub delta_down_hat: f64,
    pub sigma_up_hat: f64,
    pub sigma_down_hat: f64,
    pub sigma_daily_hat: f64,
    /// (σ̂_up − σ̂_down) / σ̂_daily, in [−1, 1].
    pub signal: f64,
    /// Against the trailing signal history; `None` until it is long enough.
    pub z_score: Option<f64>,
    /// Both forecasts floored to zero; the signal is set to 0.
    pub degenerate: bool,
}

/// Adds predicted shocks to today's average components, floors the forecasts
/// at zero and forms the normalised spread.
pub fn net_volatility_signal(
    sigma_up_bar: f64,
    sigma_down_bar: f64,
    delta_up_hat: f64,
    delta_down_hat: f64,
) -> SignalState {
    let up = (sigma_up_bar + delta_up_hat).max(0.0);
    let down = (sigma_down_bar + delta_down_hat).max(0.0);
    let daily = up + down;
    let degenerate = !(daily > 0.0);
    SignalState {
        sigma_up_bar,
        sigma_down_bar,
        delta_up_hat,
        delta_down_hat,
        sigma_up_hat: up,
        sigma_down_hat: down,
        sigma_daily_hat: daily,
        signal: if degenerate { 0.0 } else { (up - down) / daily },
        z_score: None,
        degenerate,
    }
}

/// z-score of `signal` against `history` with the population standard
/// deviation; `None` with fewer than `window` values or no dispersion.
pub fn signal_z_score(signal: f64, history: &[f64], window: usize) -> Option<f64> {
    if history.len() < window {
        return None;
    }
    let h = &history[history.len() - window..];
    let sd = pop_std_dev(h);
    (sd > 0.0).then(|| (signal - mean(h)) / sd)
}

/// Weights proportional to the ratio of upside to downside loadings.
pub fn pc_ratio_weights(loadings_up: &[f64], loadings_down: &[f64]) -> Result<Vec<f64>> {
    if loadings_up.len() != loadings_down.len() {
        return Err(Error::DimensionMismatch {
            expected: loadings_up.len(),
            got: loadings_down.len(),
        });
    }
    if loadings_up.is_empty() {
        return Err(Error::Empty("loadings"));
    }
    if let Some(l) = loadings_up.iter().chain(loadings_down).find(|l| !(**l > 0.0)) {
        return Err(Error::Degenerate(format!("non-positive PC1 loading {l}")));
    }
    let ratios: Vec<f64> = loadings_up.iter().zip(loadings_down).map(|(u, d)| u / d).collect();
    let total: f64 = ratios.iter().sum();
    Ok(ratios.iter().map(|r| r / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exposure {
    pub base: f64,
    pub multiplier: f64,
    pub total: f64,
}

/// Base exposure `σ_target / (σ̂_daily·√days)` scaled by `1 + tanh(z)`.
const Z_LIMIT: f64 = 18.0;

pub fn size_position(
    sigma_daily_hat: f64,
    sigma_target: f64,
    days_per_year: f64,
    z_score: Option<f64>,
) -> Result<Exposure> {
    if !(sigma_daily_hat > 0.0 && sigma_daily_hat.is_finite()) {
        return Err(Error::Degenerate(format!(
            "volatility forecast {sigma_daily_hat} is not positive"
        )));
    }
    let base = sigma_target / (sigma_daily_hat * days_per_year.sqrt());
    // tanh rounds to ±1 past |z| ≈ 19; the clamp keeps the multiplier inside (0, 2).
    let multiplier = z_score.map_or(1.0, |z| 1.0 + z.clamp(-Z_LIMIT, Z_LIMIT).tanh());
    Ok(Exposure {
        base,
        multiplier,
        total: base * multiplier,
    })
}

/// Sortino ratio, flagged when there is no downside to divide by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sortino {
    Finite(f64),
    /// No negative returns and a positive annual return.
    Infinite,
    /// No negative returns and a zero annual return.
    Undefined,
}

impl fmt::Display for Sortino {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sortino::Finite(v) => write!(f, "{v}"),
            Sortino::Infinite => f.write_str("inf"),
            Sortino::Undefined => f.write_str("nan"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    /// Geometric.
    pub ann_return: f64,
    pub ann_vol: f64,
    /// In [−1, 0].
    pub max_drawdown: f64,
    pub sortino: Sortino,
}

/// Largest fall from a running peak, as a (non-positive) fraction.
pub fn max_drawdown(equity: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &e in equity {
        peak = peak.max(e);
        worst = worst.min(e / peak - 1.0);
    }
    worst
}

/// `sqrt(mean(min(r, 0)²))` over all periods.
pub fn downside_deviation(returns: &[f64]) -> f64 {
    (returns.iter().map(|r| r.min(0.0).powi(2)).sum::<f64>() / returns.len() as f64).sqrt()
}

/// Annualised metrics of daily net returns, risk-free rate zero.
pub fn performance_metrics(returns: &[f64], days_per_year: f64) -> Result<Performance> {
    if returns.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "metrics need at least 2 returns, got {}",
            returns.len()
        )));
    }
    let mut equity = Vec::with_capacity(returns.len() + 1);
    equity.push(1.0);
    for r in returns {
        equity.push(equity[equity.len() - 1] * (1.0 + r));
    }
    let growth = equity[equity.len() - 1];
    let ann_return = growth.powf(days_per_year / returns.len() as f64) - 1.0;
    let downside = downside_deviation(returns);
    let sortino = if downside > 0.0 {
        Sortino::Finite(ann_return / (downside * days_per_year.sqrt()))
    } else if ann_return > 0.0 {
        Sortino::Infinite
    } else {
        Sortino::Undefined
    };
    Ok(Performance {
        ann_return,
        ann_vol: std_dev(returns) * days_per_year.sqrt(),
        max_drawdown: max_drawdown(&equity),
        sortino,
    })
}

/// Position held over one day: weights and gross exposure set at the previous
/// close, and the assets' returns on the day.
#[derive(Debug, Clone, PartialEq)]
pub struct Position {
    pub date: NaiveDate,
    pub weights: Vec<f64>,
    pub exposure: f64,
    pub asset_returns: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub date: NaiveDate,
    pub weights: Vec<f64>,
    pub exposure: f64,
    pub signal: f64,
    pub multiplier: f64,
    pub gross_return: f64,
    pub turnover: f64,
    pub cost: f64,
    pub net_return: f64,
    pub equity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyLedger {
    pub variant: Variant,
    pub sigma_target: Option<f64>,
    pub asset_ids: Vec<String>,
    pub rows: Vec<LedgerRow>,
    pub summary: Performance,
    /// Days whose forecasts were floored to zero; the previous position was kept.
    pub degenerate_days: usize,
}

/// Books a sequence of positions. Turnover is the change in dollar weights
/// (exposure × weight) from the previous day, starting from cash; with
/// `charge_after_first` false only the initial purchase is charged.
pub fn book_positions(positions: &[Position], cost_bp: f64, charge_after_first: bool) -> Result<Vec<LedgerRow>> {
    let mut rows: Vec<LedgerRow> = Vec::with_capacity(positions.len());
    let mut held: Vec<f64> = Vec::new();
    let mut equity = 1.0;
    for (k, p) in positions.iter().enumerate() {
        if p.weights.len() != p.asset_returns.len() {
            return Err(Error::DimensionMismatch {
                expected: p.weights.len(),
                got: p.asset_returns.len(),
            });
        }
        let dollars: Vec<f64> = p.weights.iter().map(|w| p.exposure * w).collect();
        let turnover = if k == 0 {
            dollars.iter().map(|d| d.abs()).sum()
        } else if held.len() != dollars.len() {
            return Err(Error::DimensionMismatch {
                expected: held.len(),
                got: dollars.len(),
            });
        } else {
            dollars.iter().zip(&held).map(|(a, b)| (a - b).abs()).sum::<f64>()
        };
        let cost = if k == 0 || charge_after_first {
            cost_bp * 1e-4 * turnover
        } else {
            0.0
        };
        let gross: f64 = p.weights.iter().zip(&p.asset_returns).map(|(w, r)| w * r).sum::<f64>() * p.exposure;
        let net = gross - cost;
        equity *= 1.0 + net;
        rows.push(LedgerRow {
            date: p.date,
            weights: p.weights.clone(),
            exposure: p.exposure,
            signal: 0.0,
            multiplier: 1.0,
            gross_return: gross,
            turnover,
            cost,
            net_return: net,
            equity,
        });
        held = dollars;
    }
    Ok(rows)
}

/// Prices and factor forecasts over the out-of-sample window.
#[derive(Debug, Clone, Copy)]
pub struct StrategyData<'a> {
    /// Crypto assets traded by the strategy.
    pub prices: &'a [OhlcvSeries],
    /// Backtest whose target is the crypto upside-volatility factor.
    pub up: &'a MseBacktest,
    /// Backtest whose target is the crypto downside-volatility factor.
    pub down: &'a MseBacktest,
}

struct Day<'a> {
    as_of: usize,
    date: NaiveDate,
    up: (f64, f64),
    down: (f64, f64),
    snap_up: &'a TargetSnapshot,
    snap_down: &'a TargetSnapshot,
}

fn loadings_for(snap: &TargetSnapshot, asset_ids: &[String]) -> Result<Vec<f64>> {
    asset_ids
        .iter()
        .map(|id| {
            snap.asset_ids
                .iter()
                .position(|a| a == id)
                .map(|i| snap.loadings[i])
                .ok_or_else(|| Error::InvalidArgument(format!("asset {id} missing from the factor loadings")))
        })
        .collect()
}

fn check_prices(prices: &[OhlcvSeries]) -> Result<Vec<NaiveDate>> {
    let first = prices.first().ok_or(Error::Empty("strategy assets"))?;
    let dates = first.dates();
    if let Some(s) = prices.iter().find(|s| s.dates() != dates) {
        return Err(Error::Misaligned(format!(
            "{} and {} cover different dates",
            first.asset_id, s.asset_id
        )));
    }
    Ok(dates)
}

/// Runs one variant at one volatility target. Buy & hold ignores the target.
pub fn run_strategy_backtest(
    data: &StrategyData,
    variant: Variant,
    sigma_target: f64,
    cfg: &StrategyConfig,
) -> Result<StrategyLedger> {
    cfg.validate()?;
    let dates = check_prices(data.prices)?;
    let asset_ids: Vec<String> = data.prices.iter().map(|s| s.asset_id.clone()).collect();
    let n_assets = asset_ids.len();
    let (ru, rd) = (&data.up.records, &data.down.records);
    if ru.len() != rd.len() || ru.iter().zip(rd).any(|(a, b)| a.date != b.date) {
        return Err(Error::Misaligned(
            "upside and downside forecasts cover different days".into(),
        ));
    }
    if ru.len() < 2 {
        return Err(Error::InsufficientData(
            "strategy needs at least 2 forecast days".into(),
        ));
    }
    let components: Vec<(f64, f64)> = (0..dates.len())
        .map(|t| {
            let (u, d) = data.prices.iter().fold((0.0, 0.0), |acc, s| {
                let c = rogers_satchell(&s.bars()[t]);
                (acc.0 + c.sigma_up, acc.1 + c.sigma_down)
            });
            (u / n_assets as f64, d / n_assets as f64)
        })
        .collect();

    let days: Vec<Day> = (0..ru.len())
        .map(|k| {
            let date = ru[k].date;
            let idx = dates
                .binary_search(&date)
                .map_err(|_| Error::Misaligned(format!("no prices on forecast day {date}")))?;
            if idx == 0 {
                return Err(Error::InsufficientData(format!("no price history before {date}")));
            }
            Ok(Day {
                as_of: idx - 1,
                date,
                up: (ru[k].y_hat_benchmark, ru[k].y_hat_challenger),
                down: (rd[k].y_hat_benchmark, rd[k].y_hat_challenger),
                snap_up: &data.up.snapshots[k],
                snap_down: &data.down.snapshots[k],
            })
        })
        .collect::<Result<_>>()?;

    let equal = vec![1.0 / n_assets as f64; n_assets];
    let mut positions = Vec::with_capacity(days.len());
    let mut signals: Vec<f64> = Vec::new();
    let mut multipliers = Vec::with_capacity(days.len());
    let mut degenerate_days = 0;
    for day in &days {
        let at = |e: Error| e.at_stage("strategy", day.date);
        let t = day.as_of;
        let asset_returns: Vec<f64> = data
            .prices
            .iter()
            .map(|s| s.bars()[t + 1].close / s.bars()[t].close - 1.0)
            .collect();
        let (weights, exposure, signal, multiplier) = match variant {
            Variant::BuyAndHold => (equal.clone(), 1.0, 0.0, 1.0),
            Variant::Naive => {
                let from = (t + 1).saturating_sub(cfg.naive_window);
                let trailing: Vec<f64> = components[from..=t].iter().map(|(u, d)| u + d).collect();
                let e = size_position(mean(&trailing), sigma_target, cfg.days_per_year, None).map_err(at)?;
                (equal.clone(), e.total, 0.0, 1.0)
            }
            Variant::Benchmark | Variant::Challenger => {
                let pick = |p: (f64, f64)| if variant == Variant::Benchmark { p.0 } else { p.1 };
                let (bar_up, bar_down) = components[t];
                let mut state = net_volatility_signal(
                    bar_up,
                    bar_down,
                    day.snap_up.average_from_score(pick(day.up)),
                    day.snap_down.average_from_score(pick(day.down)),
                );
                state.z_score = signal_z_score(state.signal, &signals, cfg.z_window);
                signals.push(state.signal);
                let weights = pc_ratio_weights(
                    &loadings_for(day.snap_up, &asset_ids).map_err(at)?,
                    &loadings_for(day.snap_down, &asset_ids).map_err(at)?,
                )
                .map_err(at)?;
                if state.degenerate {
                    degenerate_days += 1;
                    match positions.last() {
                        Some(Position { weights, exposure, .. }) => (weights.clone(), *exposure, 0.0, 1.0),
                        None => (weights, 0.0, 0.0, 1.0),
                    }
                } else {
                    let e = size_position(state.sigma_daily_hat, sigma_target, cfg.days_per_year, state.z_score)
                        .map_err(at)?;
                    (weights, e.total, state.signal, e.multiplier)
                }
            }
        };
        multipliers.push((signal, multiplier));
        positions.push(Position {
            date: day.date,
            weights,
            exposure,
            asset_returns,
        });
    }
    let mut rows = book_positions(&positions, cfg.cost_bp, variant.targets_volatility())?;
    for (row, (s, m)) in rows.iter_mut().zip(multipliers) {
        row.signal = s;
        row.multiplier = m;
    }
    let net: Vec<f64> = rows.iter().map(|r| r.net_return).collect();
    Ok(StrategyLedger {
        variant,
        sigma_target: variant.targets_volatility().then_some(sigma_target),
        asset_ids,
        summary: performance_metrics(&net, cfg.days_per_year)?,
        rows,
        degenerate_days,
    })
}

/// Every volatility-targeting variant at every target, then buy & hold.
pub fn run_strategies(data: &StrategyData, cfg: &StrategyConfig, exec: Execution) -> Result<Vec<StrategyLedger>> {
    cfg.validate()?;
    let mut runs: Vec<(Variant, f64)> = Vec::new();
    for &target in &cfg.sigma_targets {
        for v in [Variant::Naive, Variant::Benchmark, Variant::Challenger] {
            runs.push((v, target));
        }
    }
    runs.push((Variant::BuyAndHold, 0.0));
    exec.try_map(runs.len(), |i| run_strategy_backtest(data, runs[i].0, runs[i].1, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 1, d).unwrap()
    }

    #[test]
    fn signal_cases() {
        assert_eq!(net_volatility_signal(0.02, 0.02, 0.001, 0.001).signal, 0.0);
        let s = net_volatility_signal(0.025, 0.012, 0.005, -0.002);
        assert!((s.signal - 0.5).abs() < 1e-12);
        assert!((s.sigma_daily_hat - (s.sigma_up_hat + s.sigma_down_hat)).abs() < 1e-15);
        assert_eq!(net_volatility_signal(0.02, 0.01, 0.0, -0.02).signal, 1.0);
        let d = net_volatility_signal(0.01, 0.01, -0.05, -0.05);
        assert!(d.degenerate);
        assert_eq!(d.signal, 0.0);
    }

    // Ratios of the published crypto loadings, normalised (checked by hand).
    #[test]
    fn reference_loadings_give_expected_weights() {
        let up = [0.4968, 0.5290, 0.5533, 0.4089];
        let down = [0.4912, 0.5099, 0.5203, 0.4774];
        let w = pc_ratio_weights(&up, &down).unwrap();
        for (a, b) in w.iter().zip([0.255, 0.261, 0.268, 0.216]) {
            assert!((a - b).abs() < 5e-4, "{a} vs {b}");
        }
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weight_edge_cases() {
        assert_eq!(pc_ratio_weights(&[0.3, 0.3], &[0.3, 0.3]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(pc_ratio_weights(&[0.7], &[0.2]).unwrap(), vec![1.0]);
        assert!(pc_ratio_weights(&[0.5, -0.1], &[0.5, 0.5]).is_err());
        assert!(pc_ratio_weights(&[0.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn sizing() {
        let e = size_position(0.02, 0.20, 366.0, None).unwrap();
        assert!((e.base - 0.5227).abs() < 5e-5);
        assert_eq!(e.multiplier, 1.0);
        let daily = 0.3 / 366f64.sqrt();
        let e = size_position(daily, 0.3, 366.0, Some(0.0)).unwrap();
        assert!((e.total - 1.0).abs() < 1e-12);
        let e = size_position(0.02, 0.2, 366.0, Some(1.0)).unwrap();
        assert!((e.multiplier - 1.761_594_155_955_765).abs() < 1e-12);
        assert!(size_position(0.02, 0.2, 366.0, Some(40.0)).unwrap().multiplier < 2.0);
        assert!(size_position(0.02, 0.2, 366.0, Some(-1e300)).unwrap().multiplier > 0.0);
        assert!(size_position(0.0, 0.2, 366.0, None).is_err());
    }

    #[test]
    fn z_score_needs_full_window() {
        let h: Vec<f64> = (0..59).map(|i| (i as f64).sin()).collect();
        assert_eq!(signal_z_score(0.3, &h, 60), None);
        let h: Vec<f64> = (0..80).map(|i| (i as f64).sin()).collect();
        let z = signal_z_score(0.3, &h, 60).unwrap();
        let w = &h[20..];
        assert!((z - (0.3 - mean(w)) / pop_std_dev(w)).abs() < 1e-12);
        assert_eq!(signal_z_score(0.3, &[0.5; 60], 60), None);
    }

    #[test]
    fn two_day_accounting() {
        let positions = vec![
            Position {
                date: day(2),
                weights: vec![0.6, 0.4],
                exposure: 0.8,
                asset_returns: vec![0.02, -0.01],
            },
            Position {
                date: day(3),
                weights: vec![0.5, 0.5],
                exposure: 1.2,
                asset_returns: vec![-0.03, 0.04],
            },
        ];
        let rows = book_positions(&positions, 1.0, true).unwrap();
        // Day 1: buys 0.48 + 0.32 = 0.8 of turnover.
        let net1 = 0.8 * (0.6 * 0.02 + 0.4 * -0.01) - 0.0001 * 0.8;
        // Day 2: dollar weights move from (0.48, 0.32) to (0.6, 0.6).
        let net2 = 1.2 * (0.5 * -0.03 + 0.5 * 0.04) - 0.0001 * (0.12 + 0.28);
        assert!((rows[0].turnover - 0.8).abs() < 1e-15);
        assert!((rows[1].turnover - 0.4).abs() < 1e-15);
        assert!((rows[0].equity - (1.0 + net1)).abs() < 1e-12);
        assert!((rows[1].equity - (1.0 + net1) * (1.0 + net2)).abs() < 1e-12);
    }

    #[test]
    fn buy_and_hold_charges_only_entry() {
        let p = |d, r: f64| Position {
            date: day(d),
            weights: vec![0.5, 0.5],
            exposure: 1.0,
            asset_returns: vec![r, -r],
        };
        let rows = book_positions(&[p(2, 0.01), p(3, 0.02)], 1.0, false).unwrap();
        assert!((rows[0].cost - 1e-4).abs() < 1e-18);
        assert_eq!(rows[1].cost, 0.0);
    }

    #[test]
    fn drawdown_and_downside() {
        assert!((max_drawdown(&[1.0, 1.2, 0.9, 1.1]) + 0.25).abs() < 1e-15);
        assert_eq!(max_drawdown(&[1.0, 1.1, 1.3]), 0.0);
        assert!((downside_deviation(&[0.10, -0.05, 0.02, -0.01]) - 0.0255).abs() < 1e-5);
    }

    #[test]
    fn metrics() {
        let m = performance_metrics(&[0.01, 0.02, 0.0, 0.005], 366.0).unwrap();
        assert_eq!(m.max_drawdown, 0.0);
        assert_eq!(m.sortino, Sortino::Infinite);
        let flat = performance_metrics(&[0.0; 5], 366.0).unwrap();
        assert_eq!((flat.ann_return, flat.ann_vol, flat.max_drawdown), (0.0, 0.0, 0.0));
        assert_eq!(flat.sortino, Sortino::Undefined);
        let r = [0.10, -0.05, 0.02, -0.01];
        let m = performance_metrics(&r, 4.0).unwrap();
        let growth = 1.10 * 0.95 * 1.02 * 0.99;
        assert!((m.ann_return - (growth - 1.0)).abs() < 1e-12);
        match m.sortino {
            Sortino::Finite(s) => assert!((s - m.ann_return / ((0.0026f64 / 4.0).sqrt() * 2.0)).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert!(performance_metrics(&[0.1], 366.0).is_err());
    }

    proptest! {
        #[test]
        fn weights_are_scale_invariant(
            loads in prop::collection::vec((0.05f64..1.0, 0.05f64..1.0), 1..8),
            k in 0.1f64..10.0,
        ) {
            let up: Vec<f64> = loads.iter().map(|l| l.0).collect();
            let down: Vec<f64> = loads.iter().map(|l| l.1).collect();
            let w = pc_ratio_weights(&up, &down).unwrap();
            let scaled = pc_ratio_weights(
                &up.iter().map(|x| x * k).collect::<Vec<_>>(),
                &down.iter().map(|x| x * k).collect::<Vec<_>>(),
            ).unwrap();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (a, b) in w.iter().zip(&scaled) {
                prop_assert!(*a > 0.0);
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn accounting_identity_holds(
            days in prop::collection::vec((0.0f64..3.0, prop::collection::vec(-0.2f64..0.2, 3), prop::collection::vec(0.01f64..1.0, 3)), 1..30),
            bp in 0.0f64..20.0,
        ) {
            let positions: Vec<Position> = days.iter().enumerate().map(|(i, (e, r, w))| {
                let s: f64 = w.iter().sum();
                Position { date: day(1) + chrono::Days::new(i as u64), weights: w.iter().map(|x| x / s).collect(), exposure: *e, asset_returns: r.clone() }
            }).collect();
            let rows = book_positions(&positions, bp, true).unwrap();
            let mut prev = 1.0;
            for (row, p) in rows.iter().zip(&positions) {
                let gross: f64 = p.weights.iter().zip(&p.asset_returns).map(|(w, r)| w * r).sum::<f64>() * p.exposure;
                prop_assert!((row.equity / prev - (1.0 + gross - row.cost)).abs() < 1e-12);
                prop_assert!((row.cost - bp * 1e-4 * row.turnover).abs() < 1e-15);
                prev = row.equity;
            }
        }

        #[test]
        fn constant_unit_exposure_without_cost_is_buy_and_hold(
            returns in prop::collection::vec(prop::collection::vec(-0.2f64..0.2, 4), 2..40),
        ) {
            let positions: Vec<Position> = returns.iter().enumerate().map(|(i, r)| Position {
                date: day(1) + chrono::Days::new(i as u64),
                weights: vec![0.25; 4],
                exposure: 1.0,
                asset_returns: r.clone(),
            }).collect();
            let a = book_positions(&positions, 0.0, true).unwrap();
            let b = book_positions(&positions, 0.0, false).unwrap();
            let mut equity = 1.0;
            for (i, r) in returns.iter().enumerate() {
                equity *= 1.0 + r.iter().sum::<f64>() * 0.25;
                prop_assert_eq!(a[i].equity, b[i].equity);
                prop_assert!((a[i].equity - equity).abs() < 1e-12);
            }
        }

        #[test]
        fn base_exposure_is_linear_in_target(sigma in 0.001f64..0.2, target in 0.01f64..1.0) {
            let one = size_position(sigma, target, 366.0, None).unwrap().base;
            let two = size_position(sigma, 2.0 * target, 366.0, None).unwrap().base;
            prop_assert!((two - 2.0 * one).abs() <= 1e-12 * two);
        }

        #[test]
        fn multiplier_bounds(z in -30.0f64..30.0) {
            let e = size_position(0.02, 0.2, 366.0, Some(z)).unwrap();
            prop_assert!(e.multiplier > 0.0 && e.multiplier < 2.0);
            prop_assert!(e.total <= 2.0 * e.base);
        }

        #[test]
        fn drawdown_bounds_and_sortino_sign(returns in prop::collection::vec(-0.5f64..0.5, 2..60)) {
            let m = performance_metrics(&returns, 366.0).unwrap();
            prop_assert!((-1.0..=0.0).contains(&m.max_drawdown));
            if let Sortino::Finite(s) = m.sortino {
                prop_assert!(s == 0.0 || s.signum() == m.ann_return.signum());
            }
        }
    }
}
