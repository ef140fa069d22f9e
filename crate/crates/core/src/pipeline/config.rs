use crate::cgc::{BandwidthRule, CgcConfig};
use crate::error::{Error, Result};
use crate::factors::{FactorId, Market};
use crate::forecast::{MseConfig, Pair};
use crate::gbt::GbtHyperParams;
use crate::market_data::ColumnMapping;
use crate::simulate::SimulationConfig;
use crate::strategy::StrategyConfig;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory of per-asset CSV files, relative to the config file.
    pub dir: PathBuf,
    /// File name with `{asset}` standing for the asset id.
    pub file_pattern: String,
    pub columns: ColumnMapping,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dir: "data".into(),
            file_pattern: "{asset}.csv".into(),
            columns: ColumnMapping::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Period {
    pub start: NaiveDate,
    /// Last in-sample day.
    pub train_end: NaiveDate,
    /// Last out-of-sample day.
    pub test_end: NaiveDate,
}

impl Default for Period {
    fn default() -> Self {
        Self {
            start: date(2020, 1, 1),
            train_end: date(2023, 12, 31),
            test_end: date(2024, 12, 31),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WinsorConfig {
    pub lower: f64,
    pub upper: f64,
}

impl Default for WinsorConfig {
    fn default() -> Self {
        Self {
            lower: 0.01,
            upper: 0.99,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactorStageConfig {
    pub horn_n_random: usize,
    pub horn_percentile: f64,
}

impl Default for FactorStageConfig {
    fn default() -> Self {
        Self {
            horn_n_random: 1000,
            horn_percentile: 0.95,
        }
    }
}

fn default_pairs() -> Vec<String> {
    let mut pairs = Vec::new();
    for target in ["sigma_C_down", "sigma_C_up"] {
        for causer in ["sigma_S_down", "sigma_S_up", "v_S"] {
            pairs.push(format!("{causer}->{target}"));
        }
    }
    pairs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CgcStageConfig {
    /// Lags in days; 1, 7 and 30 are reported as daily, weekly and monthly.
    pub horizons: Vec<usize>,
    pub n_bootstrap: usize,
    pub percentile: f64,
    pub bernstein_degree: Option<usize>,
    pub kde_bandwidth_rule: BandwidthRule,
    pub block_length: f64,
    /// `causer->target` factor pairs.
    pub pairs: Vec<String>,
    /// Also test every pair with causer and target swapped.
    pub reverse: bool,
}

impl Default for CgcStageConfig {
    fn default() -> Self {
        let base = CgcConfig::default();
        Self {
            horizons: vec![1, 7, 30],
            n_bootstrap: base.n_bootstrap,
            percentile: base.percentile,
            bernstein_degree: base.bernstein_degree,
            kde_bandwidth_rule: base.kde_bandwidth_rule,
            block_length: base.block_length,
            pairs: default_pairs(),
            reverse: true,
        }
    }
}

impl CgcStageConfig {
    pub fn test_config(&self, horizon_lag: usize, seed: u64) -> CgcConfig {
        CgcConfig {
            horizon_lag,
            n_bootstrap: self.n_bootstrap,
            percentile: self.percentile,
            bernstein_degree: self.bernstein_degree,
            kde_bandwidth_rule: self.kde_bandwidth_rule,
            block_length: self.block_length,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MseStageConfig {
    pub refit_every: usize,
    pub lags: Vec<usize>,
    pub moving_averages: Vec<usize>,
    /// Tuning grid; the built-in 24-point grid when absent.
    pub grid: Option<Vec<GbtHyperParams>>,
    pub n_folds: usize,
    pub min_train_days: usize,
    pub min_test_days: usize,
    /// Stablecoin-to-crypto `causer->target` pairs.
    pub pairs: Vec<String>,
}

impl Default for MseStageConfig {
    fn default() -> Self {
        let base = MseConfig::default();
        Self {
            refit_every: base.refit_every,
            lags: base.lags,
            moving_averages: base.moving_averages,
            grid: None,
            n_folds: base.n_folds,
            min_train_days: base.min_train_days,
            min_test_days: base.min_test_days,
            pairs: default_pairs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyStageConfig {
    pub sigma_targets: Vec<f64>,
    pub cost_bp: f64,
    pub days_per_year: f64,
    pub z_window: usize,
    pub naive_window: usize,
    /// MSE pair whose forecasts drive the upside volatility.
    pub up_pair: String,
    /// MSE pair whose forecasts drive the downside volatility.
    pub down_pair: String,
}

impl Default for StrategyStageConfig {
    fn default() -> Self {
        let base = StrategyConfig::default();
        Self {
            sigma_targets: base.sigma_targets,
            cost_bp: base.cost_bp,
            days_per_year: base.days_per_year,
            z_window: base.z_window,
            naive_window: base.naive_window,
            up_pair: "sigma_S_up->sigma_C_up".into(),
            down_pair: "v_S->sigma_C_down".into(),
        }
    }
}

impl StrategyStageConfig {
    pub fn params(&self) -> StrategyConfig {
        StrategyConfig {
            sigma_targets: self.sigma_targets.clone(),
            cost_bp: self.cost_bp,
            days_per_year: self.days_per_year,
            z_window: self.z_window,
            naive_window: self.naive_window,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateStageConfig {
    pub intraday_steps: usize,
    pub lead: f64,
    pub persistence: f64,
}

impl Default for SimulateStageConfig {
    fn default() -> Self {
        let base = SimulationConfig::default();
        Self {
            intraday_steps: base.intraday_steps,
            lead: base.lead,
            persistence: base.persistence,
        }
    }
}

/// Everything a run needs, read from one JSON file. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub stablecoins: Vec<String>,
    pub cryptos: Vec<String>,
    pub period: Period,
    pub winsorize: WinsorConfig,
    pub adf_max_lag: usize,
    pub factors: FactorStageConfig,
    pub cgc: CgcStageConfig,
    pub mse: MseStageConfig,
    pub strategy: StrategyStageConfig,
    pub simulate: SimulateStageConfig,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Output directory, relative to the config file.
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimulationConfig::default();
        Self {
            data: DataConfig::default(),
            stablecoins: sim.stablecoins,
            cryptos: sim.cryptos,
            period: Period::default(),
            winsorize: WinsorConfig::default(),
            adf_max_lag: 20,
            factors: FactorStageConfig::default(),
            cgc: CgcStageConfig::default(),
            mse: MseStageConfig::default(),
            strategy: StrategyStageConfig::default(),
            simulate: SimulateStageConfig::default(),
            seed: 0,
            workers: 0,
            out_dir: "out".into(),
        }
    }
}

/// Parses `causer->target`.
pub fn parse_pair(s: &str) -> Option<Pair> {
    let (c, t) = s.split_once("->")?;
    Some(Pair {
        causer: FactorId::parse(c.trim())?,
        target: FactorId::parse(t.trim())?,
    })
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.period;
        if p.train_end >= p.test_end {
            return Err(Error::config(
                "period.train_end",
                format!("{} is not before test_end {}", p.train_end, p.test_end),
            ));
        }
        if p.start >= p.train_end {
            return Err(Error::config(
                "period.start",
                format!("{} is not before train_end {}", p.start, p.train_end),
            ));
        }
        for (field, assets) in [("stablecoins", &self.stablecoins), ("cryptos", &self.cryptos)] {
            if assets.len() < 2 {
                return Err(Error::config(field, "need at least two assets for a factor"));
            }
            let unique: BTreeSet<&String> = assets.iter().collect();
            if unique.len() != assets.len() {
                return Err(Error::config(field, "duplicate asset id"));
            }
            if let Some(a) = assets.iter().find(|a| a.is_empty() || a.contains(['/', '\\'])) {
                return Err(Error::config(field, format!("invalid asset id `{a}`")));
            }
        }
        if let Some(a) = self.stablecoins.iter().find(|a| self.cryptos.contains(a)) {
            return Err(Error::config("cryptos", format!("{a} is also listed as a stablecoin")));
        }
        if !self.data.file_pattern.contains("{asset}") {
            return Err(Error::config("data.file_pattern", "must contain {asset}"));
        }
        let w = &self.winsorize;
        if !(0.0..=1.0).contains(&w.lower) || !(0.0..=1.0).contains(&w.upper) || w.lower >= w.upper {
            return Err(Error::config("winsorize", "need 0 <= lower < upper <= 1"));
        }
        if self.factors.horn_n_random < 100 {
            return Err(Error::config("factors.horn_n_random", "must be at least 100"));
        }
        if !(self.factors.horn_percentile > 0.0 && self.factors.horn_percentile < 1.0) {
            return Err(Error::config("factors.horn_percentile", "must lie in (0, 1)"));
        }
        if self.cgc.horizons.is_empty() {
            return Err(Error::config("cgc.horizons", "must not be empty"));
        }
        for h in &self.cgc.horizons {
            self.cgc.test_config(*h, 0).validate()?;
        }
        self.pairs("cgc.pairs", &self.cgc.pairs)?;
        let mse_pairs = self.pairs("mse.pairs", &self.mse.pairs)?;
        for p in &mse_pairs {
            if p.causer.market != Market::Stablecoin || p.target.market != Market::Crypto {
                return Err(Error::config("mse.pairs", format!("{p} is not stablecoin -> crypto")));
            }
        }
        self.mse_config().validate()?;
        self.strategy.params().validate()?;
        for (field, s, metric) in [
            (
                "strategy.up_pair",
                &self.strategy.up_pair,
                crate::market_data::Metric::DeltaSigmaUp,
            ),
            (
                "strategy.down_pair",
                &self.strategy.down_pair,
                crate::market_data::Metric::DeltaSigmaDown,
            ),
        ] {
            let pair = parse_pair(s).ok_or_else(|| Error::config(field, format!("cannot parse `{s}`")))?;
            if pair.target != FactorId::new(Market::Crypto, metric) {
                return Err(Error::config(
                    field,
                    format!("target must be {}", FactorId::new(Market::Crypto, metric)),
                ));
            }
            if !mse_pairs.contains(&pair) {
                return Err(Error::config(field, format!("{pair} is not among mse.pairs")));
            }
        }
        if self.simulate.intraday_steps < 2 {
            return Err(Error::config("simulate.intraday_steps", "must be at least 2"));
        }
        Ok(())
    }

    fn pairs(&self, field: &str, raw: &[String]) -> Result<Vec<Pair>> {
        if raw.is_empty() {
            return Err(Error::config(field, "must not be empty"));
        }
        let pairs = raw
            .iter()
            .map(|s| parse_pair(s).ok_or_else(|| Error::config(field, format!("cannot parse pair `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(p) = pairs.iter().find(|p| p.causer == p.target) {
            return Err(Error::config(field, format!("{p} pairs a factor with itself")));
        }
        Ok(pairs)
    }

    pub fn cgc_pairs(&self) -> Vec<Pair> {
        let forward: Vec<Pair> = self.cgc.pairs.iter().filter_map(|s| parse_pair(s)).collect();
        let mut all = forward.clone();
        if self.cgc.reverse {
            all.extend(forward.iter().map(|p| Pair {
                causer: p.target,
                target: p.causer,
            }));
        }
        all
    }

    pub fn mse_pairs(&self) -> Vec<Pair> {
        self.mse.pairs.iter().filter_map(|s| parse_pair(s)).collect()
    }

    pub fn mse_config(&self) -> MseConfig {
        MseConfig {
            train_end: self.period.train_end,
            test_end: Some(self.period.test_end),
            refit_every: self.mse.refit_every,
            lags: self.mse.lags.clone(),
            moving_averages: self.mse.moving_averages.clone(),
            grid: self.mse.grid.clone().unwrap_or_else(|| GbtHyperParams::default_grid(0)),
            n_folds: self.mse.n_folds,
            min_train_days: self.mse.min_train_days,
            min_test_days: self.mse.min_test_days,
            seed: self.seed,
        }
    }

    /// Synthetic market covering the configured period.
    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig {
            start: self.period.start,
            n_days: (self.period.test_end - self.period.start).num_days() as usize + 1,
            stablecoins: self.stablecoins.clone(),
            cryptos: self.cryptos.clone(),
            intraday_steps: self.simulate.intraday_steps,
            lead: self.simulate.lead,
            persistence: self.simulate.persistence,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn train_end_after_test_end_names_the_field() {
        let err =
            RunConfig::from_json(r#"{"period": {"train_end": "2025-06-01", "test_end": "2024-12-31"}}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("period.train_end"), "{err}");
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            r#"{"stablecoins": ["USDT"]}"#,
            r#"{"winsorize": {"lower": 0.9, "upper": 0.1}}"#,
            r#"{"cgc": {"n_bootstrap": 10}}"#,
            r#"{"mse": {"pairs": ["sigma_C_up->sigma_S_up"]}}"#,
            r#"{"strategy": {"up_pair": "v_S->sigma_C_down"}}"#,
            r#"{"strategy": {"cost_bp": -1}}"#,
            r#"{"unknown_field": 1}"#,
        ] {
            let err = RunConfig::from_json(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn pairs_and_simulation_window() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.cgc_pairs().len(), 12);
        assert_eq!(cfg.mse_pairs().len(), 6);
        assert_eq!(parse_pair("v_S -> sigma_C_up").unwrap().to_string(), "v_S->sigma_C_up");
        assert_eq!(cfg.simulation().n_days, 1827);
    }
}
