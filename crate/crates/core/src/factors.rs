//! Per-category PCA market factors and Horn's parallel analysis.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::market_data::{Metric, TransformedSeries};
use crate::rng::{replicate_seed, rng_from_seed};
use crate::stats::{mean, quantile, std_dev};
use chrono::NaiveDate;
use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Market {
    Stablecoin,
    Crypto,
}

/// One of the six market factors: a market crossed with a transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FactorId {
    pub market: Market,
    pub metric: Metric,
}

impl FactorId {
    pub const ALL: [FactorId; 6] = [
        FactorId::new(Market::Stablecoin, Metric::DeltaLogVolume),
        FactorId::new(Market::Stablecoin, Metric::DeltaSigmaUp),
        FactorId::new(Market::Stablecoin, Metric::DeltaSigmaDown),
        FactorId::new(Market::Crypto, Metric::DeltaLogVolume),
        FactorId::new(Market::Crypto, Metric::DeltaSigmaUp),
        FactorId::new(Market::Crypto, Metric::DeltaSigmaDown),
    ];

    pub const fn new(market: Market, metric: Metric) -> Self {
        Self { market, metric }
    }

    /// Short name used in file names and reports, e.g. `sigma_S_up`.
    pub fn name(&self) -> &'static str {
        use Market::*;
        use Metric::*;
        match (self.market, self.metric) {
            (Stablecoin, DeltaLogVolume) => "v_S",
            (Stablecoin, DeltaSigmaUp) => "sigma_S_up",
            (Stablecoin, DeltaSigmaDown) => "sigma_S_down",
            (Crypto, DeltaLogVolume) => "v_C",
            (Crypto, DeltaSigmaUp) => "sigma_C_up",
            (Crypto, DeltaSigmaDown) => "sigma_C_down",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }
}

impl fmt::Display for FactorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Date-aligned matrix of series, one column per asset.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub dates: Vec<NaiveDate>,
    pub asset_ids: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Panel {
    pub fn new(dates: Vec<NaiveDate>, asset_ids: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.len() != asset_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: asset_ids.len(),
                got: columns.len(),
            });
        }
        if let Some(c) = columns.iter().find(|c| c.len() != dates.len()) {
            return Err(Error::Misaligned(format!(
                "column of length {} vs {} dates",
                c.len(),
                dates.len()
            )));
        }
        Ok(Self {
            dates,
            asset_ids,
            columns,
        })
    }

    /// Builds a panel from transformed series that must share identical dates.
    pub fn from_series(series: &[TransformedSeries]) -> Result<Self> {
        let first = series.first().ok_or(Error::Empty("panel"))?;
        for s in series {
            if s.dates != first.dates {
                return Err(Error::Misaligned(format!(
                    "{} {} does not share the date range of {}",
                    s.asset_id,
                    s.metric.as_str(),
                    first.asset_id
                )));
            }
        }
        Self::new(
            first.dates.clone(),
            series.iter().map(|s| s.asset_id.clone()).collect(),
            series.iter().map(|s| s.values.clone()).collect(),
        )
    }

    pub fn n_obs(&self) -> usize {
        self.dates.len()
    }

    pub fn n_series(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, t: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[t]).collect()
    }

    /// Rows `[start, end)`.
    pub fn rows(&self, start: usize, end: usize) -> Panel {
        Panel {
            dates: self.dates[start..end].to_vec(),
            asset_ids: self.asset_ids.clone(),
            columns: self.columns.iter().map(|c| c[start..end].to_vec()).collect(),
        }
    }
}

/// The per-category panels that feed the six factors, on a shared calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPanels {
    pub dates: Vec<NaiveDate>,
    pub panels: BTreeMap<FactorId, Panel>,
}

impl FactorPanels {
    pub fn new(panels: BTreeMap<FactorId, Panel>) -> Result<Self> {
        let dates = panels
            .values()
            .next()
            .ok_or(Error::Empty("factor panels"))?
            .dates
            .clone();
        if let Some((id, _)) = panels.iter().find(|(_, p)| p.dates != dates) {
            return Err(Error::Misaligned(format!(
                "panel {id} does not share the common calendar"
            )));
        }
        Ok(Self { dates, panels })
    }

    pub fn panel(&self, id: FactorId) -> Result<&Panel> {
        self.panels
            .get(&id)
            .ok_or_else(|| Error::InvalidArgument(format!("no panel for factor {id}")))
    }

    /// Rows `[0, end)` of every panel.
    pub fn truncate(&self, end: usize) -> Self {
        Self {
            dates: self.dates[..end].to_vec(),
            panels: self.panels.iter().map(|(k, p)| (*k, p.rows(0, end))).collect(),
        }
    }
}

/// Correlation-matrix PCA of one factor category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub category: String,
    pub asset_ids: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Unit-norm eigenvectors, descending by eigenvalue.
    pub loadings: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub dates: Vec<NaiveDate>,
    /// First-component scores.
    pub scores: Vec<f64>,
}

impl PcaModel {
    pub fn pc1(&self) -> &[f64] {
        &self.loadings[0]
    }

    /// PC1 score of a raw (unstandardised) observation row.
    pub fn project(&self, row: &[f64]) -> f64 {
        row.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .zip(self.pc1())
            .map(|(((x, m), s), l)| (x - m) / s * l)
            .sum()
    }

    /// Flips PC1 if it points away from `previous`, keeping factor signs stable across refits.
    pub fn align_to(&mut self, previous: &[f64]) {
        let dot: f64 = self.loadings[0].iter().zip(previous).map(|(a, b)| a * b).sum();
        if dot < 0.0 {
            self.loadings[0].iter_mut().for_each(|l| *l = -*l);
            self.scores.iter_mut().for_each(|s| *s = -*s);
        }
    }

    pub fn explained_variance(&self) -> f64 {
        self.eigenvalues[0] / self.eigenvalues.iter().sum::<f64>()
    }
}

fn correlation_eigen(columns: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = columns.len();
    let t = columns[0].len() as f64;
    let z: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let (m, s) = (mean(c), std_dev(c));
            c.iter().map(|v| (v - m) / s).collect()
        })
        .collect();
    let corr = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            z[i].iter().zip(&z[j]).map(|(a, b)| a * b).sum::<f64>() / (t - 1.0)
        }
    });
    let eig = SymmetricEigen::new(corr);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let sum: f64 = v.iter().sum();
            let flip = if sum.abs() > 1e-12 {
                sum < 0.0
            } else {
                v.iter().find(|x| x.abs() > 1e-12).is_some_and(|x| *x < 0.0)
            };
            if flip {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    (values, vectors)
}

/// Standardises each column, eigen-decomposes the correlation matrix and scores PC1.
pub fn fit_pca(panel: &Panel, category: &str) -> Result<PcaModel> {
    if panel.n_series() < 2 {
        return Err(Error::InsufficientData(format!(
            "PCA needs at least 2 series, got {}",
            panel.n_series()
        )));
    }
    if panel.n_obs() < 3 {
        return Err(Error::InsufficientData("PCA needs at least 3 observations".into()));
    }
    let means: Vec<f64> = panel.columns.iter().map(|c| mean(c)).collect();
    let stds: Vec<f64> = panel.columns.iter().map(|c| std_dev(c)).collect();
    if let Some(i) = stds.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::Degenerate(format!("series {} is constant", panel.asset_ids[i])));
    }
    let (eigenvalues, loadings) = correlation_eigen(&panel.columns);
    let mut model = PcaModel {
        category: category.to_string(),
        asset_ids: panel.asset_ids.clone(),
        means,
        stds,
        loadings,
        eigenvalues,
        dates: panel.dates.clone(),
        scores: Vec::new(),
    };
    model.scores = (0..panel.n_obs()).map(|t| model.project(&panel.row(t))).collect();
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HornResult {
    pub eigenvalues_observed: Vec<f64>,
    pub eigenvalues_critical: Vec<f64>,
    /// Leading components whose observed eigenvalue beats the critical one,
    /// up to the first that does not.
    pub retained: Vec<usize>,
}

impl HornResult {
    pub fn from_eigenvalues(observed: Vec<f64>, critical: Vec<f64>) -> Self {
        let retained = observed
            .iter()
            .zip(&critical)
            .take_while(|(o, c)| o > c)
            .enumerate()
            .map(|(k, _)| k)
            .collect();
        Self {
            eigenvalues_observed: observed,
            eigenvalues_critical: critical,
            retained,
        }
    }
}

/// Compares observed correlation eigenvalues with the per-rank `percentile`
/// of eigenvalues from `n_random` standard-normal panels of the same shape.
pub fn horns_parallel_analysis(
    panel: &Panel,
    n_random: usize,
    percentile: f64,
    seed: u64,
    exec: Execution,
) -> Result<HornResult> {
    if n_random < 100 {
        return Err(Error::InvalidArgument(format!(
            "Horn's analysis needs n_random >= 100, got {n_random}"
        )));
    }
    let observed = fit_pca(panel, "horn")?.eigenvalues;
    let (t, n) = (panel.n_obs(), panel.n_series());
    let draws: Vec<Vec<f64>> = exec.map(n_random, |r| {
        let mut rng = rng_from_seed(replicate_seed(seed, "factors:horn", r));
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..t).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        correlation_eigen(&cols).0
    });
    let critical = (0..n)
        .map(|k| {
            let at_rank: Vec<f64> = draws.iter().map(|d| d[k]).collect();
            quantile(&at_rank, percentile)
        })
        .collect();
    Ok(HornResult::from_eigenvalues(observed, critical))
}
