//! Gradient-boosted regression trees with squared-error loss.
//!
//! Exact greedy splits over presorted feature columns, leaf values equal to
//! the mean residual, and total-gain feature importance. Fits are sequential
//! and deterministic; subsampling draws from a seeded generator.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::{replicate_seed, rng_from_seed};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtHyperParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbtHyperParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 10,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl GbtHyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("GBT {what}: {self:?}")));
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must lie in (0, 1]");
        }
        Ok(())
    }

    /// depth {2,3,4} × learning rate {0.05, 0.1} × trees {100, 300} × subsample {0.8, 1.0}.
    pub fn default_grid(seed: u64) -> Vec<GbtHyperParams> {
        let mut grid = Vec::new();
        for max_depth in [2, 3, 4] {
            for learning_rate in [0.05, 0.1] {
                for n_trees in [100, 300] {
                    for subsample in [0.8, 1.0] {
                        grid.push(GbtHyperParams {
                            n_trees,
                            max_depth,
                            learning_rate,
                            subsample,
                            seed,
                            ..Default::default()
                        });
                    }
                }
            }
        }
        grid
    }
}

/// Column-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Features {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                got: columns.len(),
            });
        }
        if let Some(c) = columns.iter().find(|c| c.len() != columns[0].len()) {
            return Err(Error::DimensionMismatch {
                expected: columns[0].len(),
                got: c.len(),
            });
        }
        Ok(Self { names, columns })
    }

    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let columns = (0..names.len()).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        if let Some(r) = rows.iter().find(|r| r.len() != names.len()) {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                got: r.len(),
            });
        }
        Self::new(names, columns)
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Features {
        Features {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
        }
    }

    fn range(&self, start: usize, end: usize) -> Features {
        Features {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c[start..end].to_vec()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf(f64),
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_value<F: Fn(usize) -> f64>(&self, x: F) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x(feature) <= threshold { left } else { right },
            }
        }
    }

    pub fn max_abs_leaf(&self) -> f64 {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf(v) => Some(v.abs()),
                _ => None,
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub trees: Vec<Tree>,
    pub base_prediction: f64,
    pub learning_rate: f64,
    pub feature_names: Vec<String>,
    pub gain_by_feature: Vec<f64>,
    /// Training MSE after each boosting round.
    pub train_mse: Vec<f64>,
}

impl GbtModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut p = self.base_prediction;
        for t in &self.trees {
            p += self.learning_rate * t.leaf_value(|f| row[f]);
        }
        p
    }

    /// Features sorted by total gain, descending.
    pub fn importance(&self) -> Vec<(String, f64)> {
        let mut v: Vec<(String, f64)> = self
            .feature_names
            .iter()
            .cloned()
            .zip(self.gain_by_feature.iter().copied())
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }
}

pub fn predict(model: &GbtModel, x: &Features) -> Result<Vec<f64>> {
    if x.n_features() != model.feature_names.len() {
        return Err(Error::DimensionMismatch {
            expected: model.feature_names.len(),
            got: x.n_features(),
        });
    }
    Ok((0..x.n_rows())
        .map(|i| {
            let mut p = model.base_prediction;
            for t in &model.trees {
                p += model.learning_rate * t.leaf_value(|f| x.columns[f][i]);
            }
            p
        })
        .collect())
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Builder<'a> {
    x: &'a Features,
    residual: &'a [f64],
    hp: &'a GbtHyperParams,
    min_gain: f64,
    nodes: Vec<Node>,
    gains: Vec<f64>,
    go_left: Vec<bool>,
}

impl Builder<'_> {
    fn best_split(&self, sorted: &[Vec<usize>]) -> Option<Candidate> {
        let rows = &sorted[0];
        let n = rows.len();
        let min_leaf = self.hp.min_samples_leaf;
        if n < 2 * min_leaf {
            return None;
        }
        let g: f64 = rows.iter().map(|&i| self.residual[i]).sum();
        let parent = g * g / n as f64;
        let mut best: Option<Candidate> = None;
        for (f, order) in sorted.iter().enumerate() {
            let col = &self.x.columns[f];
            let mut gl = 0.0;
            for k in 0..n - 1 {
                gl += self.residual[order[k]];
                let nl = k + 1;
                let (a, b) = (col[order[k]], col[order[k + 1]]);
                if nl < min_leaf || n - nl < min_leaf || a == b {
                    continue;
                }
                let gr = g - gl;
                let gain = gl * gl / nl as f64 + gr * gr / (n - nl) as f64 - parent;
                if gain > self.min_gain && best.as_ref().is_none_or(|c| gain > c.gain) {
                    best = Some(Candidate {
                        gain,
                        feature: f,
                        threshold: 0.5 * (a + b),
                    });
                }
            }
        }
        best
    }

    /// Builds the subtree for the rows in `sorted` (one index list per
    /// feature, each in ascending feature order) and returns its node id.
    fn build(&mut self, sorted: Vec<Vec<usize>>, depth: usize) -> usize {
        let id = self.nodes.len();
        let rows = &sorted[0];
        let leaf = rows.iter().map(|&i| self.residual[i]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf(leaf));
        if depth >= self.hp.max_depth {
            return id;
        }
        let Some(c) = self.best_split(&sorted) else {
            return id;
        };
        self.gains[c.feature] += c.gain;
        let col = &self.x.columns[c.feature];
        for &i in &sorted[0] {
            self.go_left[i] = col[i] <= c.threshold;
        }
        let (left, right): (Vec<Vec<usize>>, Vec<Vec<usize>>) = sorted
            .into_iter()
            .map(|order| order.into_iter().partition(|&i| self.go_left[i]))
            .unzip();
        let l = self.build(left, depth + 1);
        let r = self.build(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: c.feature,
            threshold: c.threshold,
            left: l,
            right: r,
        };
        id
    }
}

fn check_inputs(x: &Features, y: &[f64], hp: &GbtHyperParams) -> Result<()> {
    hp.validate()?;
    if y.is_empty() || x.n_features() == 0 {
        return Err(Error::Empty("GBT training data"));
    }
    if x.n_rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: x.n_rows(),
        });
    }
    if y.len() < 2 * hp.min_samples_leaf {
        return Err(Error::InsufficientData(format!(
            "GBT needs at least {} rows, got {}",
            2 * hp.min_samples_leaf,
            y.len()
        )));
    }
    if x.columns.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("GBT inputs contain non-finite values".into()));
    }
    Ok(())
}

pub fn fit_gbt(x: &Features, y: &[f64], hp: &GbtHyperParams) -> Result<GbtModel> {
    fit_gbt_traced(x, y, hp).map(|(m, _)| m)
}

/// Like [`fit_gbt`], also returning the fitted training predictions.
pub fn fit_gbt_traced(x: &Features, y: &[f64], hp: &GbtHyperParams) -> Result<(GbtModel, Vec<f64>)> {
    check_inputs(x, y, hp)?;
    let n = y.len();
    let base = y.iter().sum::<f64>() / n as f64;
    let order: Vec<Vec<usize>> = x
        .columns
        .iter()
        .map(|c| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| c[a].total_cmp(&c[b]));
            idx
        })
        .collect();
    let mut pred = vec![base; n];
    let mut residual = vec![0.0; n];
    let mut gains = vec![0.0; x.n_features()];
    let mut trees = Vec::with_capacity(hp.n_trees);
    let mut train_mse = Vec::with_capacity(hp.n_trees);
    let min_gain = 1e-12 * y.iter().map(|v| v * v).sum::<f64>();
    let m = ((hp.subsample * n as f64).ceil() as usize).clamp(2 * hp.min_samples_leaf, n);
    let mut in_sample = vec![true; n];
    let mut go_left = vec![false; n];
    for k in 0..hp.n_trees {
        for i in 0..n {
            residual[i] = y[i] - pred[i];
        }
        let sorted = if m < n {
            let mut rng = rng_from_seed(replicate_seed(hp.seed, "gbt:subsample", k));
            in_sample.iter_mut().for_each(|b| *b = false);
            for i in sample(&mut rng, n, m) {
                in_sample[i] = true;
            }
            order
                .iter()
                .map(|o| o.iter().copied().filter(|&i| in_sample[i]).collect())
                .collect()
        } else {
            order.clone()
        };
        let mut b = Builder {
            x,
            residual: &residual,
            hp,
            min_gain,
            nodes: Vec::new(),
            gains: std::mem::take(&mut gains),
            go_left: std::mem::take(&mut go_left),
        };
        b.build(sorted, 0);
        let tree = Tree { nodes: b.nodes };
        gains = b.gains;
        go_left = b.go_left;
        for (i, p) in pred.iter_mut().enumerate() {
            *p += hp.learning_rate * tree.leaf_value(|f| x.columns[f][i]);
        }
        train_mse.push(y.iter().zip(&pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64);
        trees.push(tree);
    }
    let model = GbtModel {
        trees,
        base_prediction: base,
        learning_rate: hp.learning_rate,
        feature_names: x.names.clone(),
        gain_by_feature: gains,
        train_mse,
    };
    Ok((model, pred))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub best: GbtHyperParams,
    /// Mean validation MSE per grid point, in grid order.
    pub scores: Vec<f64>,
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// Forward-chaining time-series cross-validation over the grid. The rows are
/// cut into `n_folds + 1` contiguous blocks; fold k trains on blocks `0..k`
/// and validates on block k.
pub fn tune_report(
    x: &Features,
    y: &[f64],
    grid: &[GbtHyperParams],
    n_folds: usize,
    exec: Execution,
) -> Result<TuneReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter grid".into()));
    }
    if n_folds == 0 {
        return Err(Error::InvalidArgument("need at least one fold".into()));
    }
    let n = y.len();
    let block = n / (n_folds + 1);
    let min_leaf = grid.iter().map(|g| g.min_samples_leaf).max().unwrap_or(1);
    if block < 2 * min_leaf {
        return Err(Error::InsufficientData(format!(
            "fold of {block} rows is too small for min_samples_leaf {min_leaf}"
        )));
    }
    let jobs = grid.len() * n_folds;
    let losses = exec.try_map(jobs, |j| {
        let (g, k) = (j / n_folds, j % n_folds + 1);
        let (train_end, valid_end) = (k * block, (k + 1) * block);
        let model = fit_gbt(&x.range(0, train_end), &y[..train_end], &grid[g])?;
        let pred = predict(&model, &x.range(train_end, valid_end))?;
        Ok::<_, Error>(mse(&pred, &y[train_end..valid_end]))
    })?;
    let scores: Vec<f64> = losses
        .chunks(n_folds)
        .map(|c| c.iter().sum::<f64>() / n_folds as f64)
        .collect();
    let best = (0..grid.len())
        .min_by(|&a, &b| {
            scores[a]
                .total_cmp(&scores[b])
                .then(grid[a].n_trees.cmp(&grid[b].n_trees))
                .then(grid[a].max_depth.cmp(&grid[b].max_depth))
                .then(a.cmp(&b))
        })
        .expect("grid is non-empty");
    Ok(TuneReport {
        best: grid[best],
        scores,
    })
}

pub fn tune(
    x: &Features,
    y: &[f64],
    grid: &[GbtHyperParams],
    n_folds: usize,
    exec: Execution,
) -> Result<GbtHyperParams> {
    tune_report(x, y, grid, n_folds, exec).map(|r| r.best)
}
