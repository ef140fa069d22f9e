//! Synthetic markets with a planted stablecoin-to-crypto lead.
//!
//! Each market has latent log-volatility processes for upside and downside
//! moves and a volume process. Crypto processes load on the previous day's
//! stablecoin innovations with coefficient `lead`. Daily bars come from an
//! intraday walk whose up and down steps are scaled separately, so the
//! Rogers–Satchell components track the two latent volatilities.

use crate::error::{Error, Result};
use crate::factors::{FactorId, FactorPanels, Market, Panel};
use crate::market_data::{Bar, Metric, OhlcvSeries};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use chrono::{Days, NaiveDate};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub start: NaiveDate,
    pub n_days: usize,
    pub stablecoins: Vec<String>,
    pub cryptos: Vec<String>,
    pub intraday_steps: usize,
    /// Loading of crypto log-volatility on yesterday's stablecoin shock.
    pub lead: f64,
    pub persistence: f64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date"),
            n_days: 1827,
            stablecoins: ["USDT", "USDC", "DAI"].map(String::from).to_vec(),
            cryptos: ["BTC", "ETH", "SOL", "BNB"].map(String::from).to_vec(),
            intraday_steps: 48,
            lead: 0.6,
            persistence: 0.9,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetTruth {
    pub asset_id: String,
    pub market: Market,
    pub base_sigma: f64,
    pub base_volume: f64,
}

/// Parameters that generated a simulated market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: SimulationConfig,
    pub assets: Vec<AssetTruth>,
    pub shock_scale: f64,
    pub idiosyncratic_scale: f64,
    /// Planted lead-lag links, causer factor to target factor at lag 1.
    pub planted_links: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedMarket {
    pub series: Vec<OhlcvSeries>,
    pub truth: GroundTruth,
}

const SHOCK: f64 = 0.3;
const IDIO: f64 = 0.15;

struct Latent {
    up: Vec<f64>,
    down: Vec<f64>,
    volume: Vec<f64>,
}

fn latent_paths(cfg: &SimulationConfig, rng: &mut Rng) -> (Latent, Latent) {
    let n = cfg.n_days;
    let rho = cfg.persistence;
    let mut eta = || -> [f64; 3] { [0; 3].map(|_| rng.sample(StandardNormal)) };
    let mut stable = Latent {
        up: vec![0.0; n],
        down: vec![0.0; n],
        volume: vec![0.0; n],
    };
    let mut crypto = Latent {
        up: vec![0.0; n],
        down: vec![0.0; n],
        volume: vec![0.0; n],
    };
    let mut prev = [0.0; 3];
    for t in 0..n {
        let s = eta();
        let c = eta();
        let lag = |x: &[f64]| if t == 0 { 0.0 } else { x[t - 1] };
        stable.up[t] = rho * lag(&stable.up) + SHOCK * s[0];
        stable.down[t] = rho * lag(&stable.down) + SHOCK * s[1];
        stable.volume[t] = 0.5 * lag(&stable.volume) + s[2];
        crypto.up[t] = rho * lag(&crypto.up) + SHOCK * (c[0] + cfg.lead * prev[0]);
        crypto.down[t] = rho * lag(&crypto.down) + SHOCK * (c[1] + cfg.lead * prev[1]);
        crypto.volume[t] = 0.5 * lag(&crypto.volume) + c[2] + cfg.lead * prev[2];
        prev = s;
    }
    (stable, crypto)
}

/// One day's bar from an intraday walk with separate up/down step scales.
fn intraday_bar(open: f64, sd_up: f64, sd_down: f64, pull: f64, steps: usize, rng: &mut Rng) -> (f64, f64, f64) {
    let k = steps as f64;
    // Removes the drift created by the asymmetric step scales.
    let drift = (sd_up - sd_down) * 0.398_942_280_401_432_7 / k.sqrt();
    let (mut x, mut hi, mut lo) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..steps {
        let e: f64 = rng.sample(StandardNormal);
        let scale = if e > 0.0 { sd_up } else { sd_down };
        x += scale * e / k.sqrt() - drift + pull / k;
        hi = hi.max(x);
        lo = lo.min(x);
    }
    (open * hi.exp(), open * lo.exp(), open * x.exp())
}

pub fn simulate_market(cfg: &SimulationConfig) -> Result<SimulatedMarket> {
    if cfg.n_days < 2 {
        return Err(Error::config("simulate.n_days", "must be at least 2"));
    }
    if cfg.stablecoins.is_empty() || cfg.cryptos.is_empty() {
        return Err(Error::config(
            "simulate.assets",
            "need at least one stablecoin and one crypto",
        ));
    }
    if cfg.intraday_steps < 2 {
        return Err(Error::config("simulate.intraday_steps", "must be at least 2"));
    }
    let mut rng = rng_from_seed(derive_seed(cfg.seed, "simulate:latent"));
    let (stable, crypto) = latent_paths(cfg, &mut rng);
    let mut series = Vec::new();
    let mut assets = Vec::new();
    let all = cfg
        .stablecoins
        .iter()
        .map(|a| (a, Market::Stablecoin))
        .chain(cfg.cryptos.iter().map(|a| (a, Market::Crypto)));
    for (i, (id, market)) in all.enumerate() {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, &format!("simulate:asset:{id}")));
        let (latent, base_sigma, base_volume, start_price) = match market {
            Market::Stablecoin => (&stable, 0.002 * (1.0 + 0.1 * i as f64), 20.0 + i as f64, 1.0),
            Market::Crypto => (
                &crypto,
                0.03 * (1.0 + 0.15 * i as f64),
                22.0 + 0.5 * i as f64,
                100.0 * (i + 1) as f64,
            ),
        };
        let mut bars = Vec::with_capacity(cfg.n_days);
        let mut close = start_price;
        for t in 0..cfg.n_days {
            let date = cfg.start + Days::new(t as u64);
            let idio: [f64; 3] = [0; 3].map(|_| rng.sample(StandardNormal));
            let sd_up = base_sigma * (latent.up[t] + IDIO * idio[0]).exp();
            let sd_down = base_sigma * (latent.down[t] + IDIO * idio[1]).exp();
            let pull = match market {
                Market::Stablecoin => -0.2 * (close / start_price).ln(),
                Market::Crypto => 0.0,
            };
            let open = close;
            let (high, low, c) = intraday_bar(open, sd_up, sd_down, pull, cfg.intraday_steps, &mut rng);
            let volume = (base_volume + 0.8 * latent.volume[t] + 0.3 * idio[2]).exp();
            bars.push(Bar::new(date, open, high, low, c, volume)?);
            close = c;
        }
        series.push(OhlcvSeries::new(id.clone(), bars)?);
        assets.push(AssetTruth {
            asset_id: id.clone(),
            market,
            base_sigma,
            base_volume,
        });
    }
    let link = |m: Metric| {
        (
            FactorId::new(Market::Stablecoin, m).name().to_string(),
            FactorId::new(Market::Crypto, m).name().to_string(),
        )
    };
    Ok(SimulatedMarket {
        series,
        truth: GroundTruth {
            config: cfg.clone(),
            assets,
            shock_scale: SHOCK,
            idiosyncratic_scale: IDIO,
            planted_links: Metric::ALL.into_iter().map(link).collect(),
        },
    })
}

/// Two factor panels where the causer's common factor leads the target's by
/// one day: `c_t = k·s_{t−1} + e_t` with `std(k·s) / std(e) = signal_to_noise`.
/// A zero ratio gives independent panels.
pub fn planted_lead_panels(
    causer: FactorId,
    target: FactorId,
    n_days: usize,
    n_assets: usize,
    signal_to_noise: f64,
    seed: u64,
) -> Result<FactorPanels> {
    let mut rng = rng_from_seed(derive_seed(seed, "simulate:planted-lead"));
    let s: Vec<f64> = (0..n_days).map(|_| rng.sample(StandardNormal)).collect();
    let c: Vec<f64> = (0..n_days)
        .map(|t| {
            let e: f64 = rng.sample(StandardNormal);
            let lead = if t == 0 { 0.0 } else { s[t - 1] };
            signal_to_noise * lead + e
        })
        .collect();
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date");
    let dates: Vec<NaiveDate> = (0..n_days).map(|t| start + Days::new(t as u64)).collect();
    let mut panel = |factor: &[f64], tag: &str| {
        let ids = (0..n_assets).map(|i| format!("{tag}{i}")).collect();
        let cols = (0..n_assets)
            .map(|_| {
                factor
                    .iter()
                    .map(|f| f + 0.5 * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            })
            .collect();
        Panel::new(dates.clone(), ids, cols)
    };
    let mut panels = BTreeMap::new();
    panels.insert(causer, panel(&s, "s")?);
    panels.insert(target, panel(&c, "c")?);
    FactorPanels::new(panels)
}
