//! Expanding-window GARCH–copula–GBT forecasting backtest and
//! Diebold–Mariano comparison of benchmark and challenger models.
//!
//! Each day the target factor's E-GARCH residual is mapped to a uniform by
//! the fitted skew-t CDF. A boosted-tree model predicts tomorrow's uniform
//! from lagged uniforms and conditional volatilities, and the prediction is
//! mapped back through the inverse CDF and the mean/volatility equation.

mod backtest;
mod dm;
mod features;

pub use backtest::{
    run_mse_backtest, run_mse_backtests, BacktestJob, ForecastRecord, MseBacktest, MseConfig, MseRun, MseSummary, Pair,
    TargetSnapshot,
};
pub use dm::{dm_statistics, dm_test, dm_test_differential, loss_differential, Adjustment, DmReport};
pub use features::{build_features, feature_row, Channel, ChannelData, FeatureSpec};
