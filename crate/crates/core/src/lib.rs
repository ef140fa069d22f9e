//! Volatility-transmission toolkit for stablecoin and cryptocurrency markets.
//!
//! The pipeline runs: OHLCV ingestion and Rogers–Satchell transforms
//! ([`market_data`]), per-category PCA market factors ([`factors`]), copula
//! Granger causality ([`cgc`]), an E-GARCH / copula / boosted-trees forecast
//! backtest ([`forecast`]) and a volatility-targeting strategy ([`strategy`]).
//! [`pipeline`] wires the stages together behind the `voltide` CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cgc;
pub mod egarch;
pub mod error;
pub mod exec;
pub mod factors;
pub mod forecast;
pub mod gbt;
pub mod market_data;
pub mod optim;
pub mod pipeline;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod strategy;

pub use error::{Error, Result};
pub use exec::Execution;
