//! Backtesting and statistical-validation core for volatility-gated
//! trend-following systems on close-only, basis-point price series.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the command-line front end live in the `trendgate` crate.

#![no_std]

extern crate alloc;

pub mod engine;
pub mod error;
mod fft;
pub mod indicators;
pub mod metrics;
pub mod optimizer;
pub mod rng;
pub mod series;
pub mod strategy;
pub mod synth;
pub mod validation;

pub use engine::{run_backtest, BacktestResult, CostModel, Trade};
pub use error::{Error, Result};
pub use metrics::{MetricsReport, Sharpe};
pub use series::{Bar, SampleSplit, Series};
pub use strategy::StrategyParams;
