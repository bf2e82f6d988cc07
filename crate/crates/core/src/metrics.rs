//! Performance statistics over a [`BacktestResult`].
//!
//! Sharpe convention: realized net equity is bucketed into calendar-day
//! returns over every day that carries at least one bar (days without a
//! closed trade contribute 0), then `mean / sample_std * sqrt(252)` with a
//! zero risk-free rate.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::{BacktestResult, Trade};
use crate::error::{Error, Result};

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;
pub const MIN_SHARPE_DAYS: usize = 30;
pub const DEFAULT_RETURN_BIN_BP: i64 = 5;
const SECONDS_PER_DAY: i64 = 86_400;

/// Sharpe ratio, or `Undefined` when returns have zero variance but a
/// nonzero mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sharpe {
    Value(f64),
    Undefined,
}

impl Sharpe {
    pub fn value(self) -> Option<f64> {
        match self {
            Sharpe::Value(v) => Some(v),
            Sharpe::Undefined => None,
        }
    }

    /// Ordering key with `Undefined` below every number.
    pub fn rank(self) -> f64 {
        self.value().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Daily net returns in bp, one per calendar day that contains a bar.
pub fn daily_returns(result: &BacktestResult) -> Vec<i64> {
    let mut out = Vec::new();
    let mut prev_close = 0i64;
    let mut current: Option<(i64, i64)> = None;
    for (&ts, &eq) in result.timestamps.iter().zip(&result.equity_bp) {
        let day = ts.div_euclid(SECONDS_PER_DAY);
        match current {
            Some((d, _)) if d == day => current = Some((d, eq)),
            Some((_, end)) => {
                out.push(end - prev_close);
                prev_close = end;
                current = Some((day, eq));
            }
            None => current = Some((day, eq)),
        }
    }
    if let Some((_, end)) = current {
        out.push(end - prev_close);
    }
    out
}

/// Annualized Sharpe of a daily return series (sample standard deviation).
pub fn sharpe_from_daily(returns: &[i64]) -> Sharpe {
    let n = returns.len();
    if n < 2 {
        return Sharpe::Undefined;
    }
    if returns.iter().all(|&r| r == returns[0]) {
        return if returns[0] == 0 {
            Sharpe::Value(0.0)
        } else {
            Sharpe::Undefined
        };
    }
    let mean = returns.iter().sum::<i64>() as f64 / n as f64;
    let ss: f64 = returns
        .iter()
        .map(|&r| {
            let d = r as f64 - mean;
            d * d
        })
        .sum();
    let sd = libm::sqrt(ss / (n - 1) as f64);
    Sharpe::Value(mean / sd * libm::sqrt(TRADING_DAYS_PER_YEAR))
}

pub fn sharpe_ratio(result: &BacktestResult) -> Result<Sharpe> {
    let daily = daily_returns(result);
    if daily.len() < MIN_SHARPE_DAYS {
        return Err(Error::SpanTooShort {
            days: daily.len(),
            needed: MIN_SHARPE_DAYS,
        });
    }
    Ok(sharpe_from_daily(&daily))
}

/// Largest peak-to-trough decline of an equity curve.
pub fn max_drawdown(equity: &[i64]) -> i64 {
    let mut peak = i64::MIN;
    let mut worst = 0;
    for &e in equity {
        peak = peak.max(e);
        worst = worst.max(peak - e);
    }
    worst
}

/// Fixed-width bins: bin `k` covers `[first_edge + k w, first_edge + (k+1) w)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: i64,
    pub first_edge: i64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn build(values: &[i64], bin_width: i64) -> Self {
        assert!(bin_width > 0);
        let Some(lo) = values.iter().map(|v| v.div_euclid(bin_width)).min() else {
            return Self {
                bin_width,
                first_edge: 0,
                counts: Vec::new(),
            };
        };
        let hi = values
            .iter()
            .map(|v| v.div_euclid(bin_width))
            .max()
            .unwrap_or(lo);
        let mut counts = vec![0u64; (hi - lo + 1) as usize];
        for v in values {
            counts[(v.div_euclid(bin_width) - lo) as usize] += 1;
        }
        Self {
            bin_width,
            first_edge: lo * bin_width,
            counts,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeDistributions {
    pub return_histogram: Histogram,
    pub duration_histogram: Histogram,
    pub skewness: f64,
    pub mean_duration_bars: f64,
}

/// Sample skewness `(1/n) sum ((x - mean)/s)^3` with `s` the (n-1) standard
/// deviation; 0 when fewer than two values or no spread.
pub fn skewness(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return 0.0;
    }
    let sd = libm::sqrt(var);
    values
        .iter()
        .map(|x| {
            let z = (x - mean) / sd;
            z * z * z
        })
        .sum::<f64>()
        / n as f64
}

pub fn trade_distributions(trades: &[Trade], return_bin_bp: i64) -> Result<TradeDistributions> {
    if trades.is_empty() {
        return Err(Error::EmptyLedger);
    }
    let nets: Vec<i64> = trades.iter().map(|t| t.net_bp).collect();
    let durations: Vec<i64> = trades.iter().map(|t| t.duration_bars as i64).collect();
    let as_f64: Vec<f64> = nets.iter().map(|&v| v as f64).collect();
    Ok(TradeDistributions {
        return_histogram: Histogram::build(&nets, return_bin_bp),
        duration_histogram: Histogram::build(&durations, 1),
        skewness: skewness(&as_f64),
        mean_duration_bars: durations.iter().sum::<i64>() as f64 / trades.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sharpe: Sharpe,
    pub n_trades: usize,
    pub total_net_bp: i64,
    pub mean_duration_bars: f64,
    pub max_drawdown_bp: i64,
    pub return_histogram: Histogram,
    pub duration_histogram: Histogram,
    pub skewness: f64,
}

impl MetricsReport {
    /// A ledger without trades yields empty histograms, zero skewness and
    /// zero mean duration.
    pub fn from_result(result: &BacktestResult) -> Result<Self> {
        let sharpe = sharpe_ratio(result)?;
        let dist = match trade_distributions(&result.trades, DEFAULT_RETURN_BIN_BP) {
            Ok(d) => d,
            Err(Error::EmptyLedger) => TradeDistributions {
                return_histogram: Histogram::build(&[], DEFAULT_RETURN_BIN_BP),
                duration_histogram: Histogram::build(&[], 1),
                skewness: 0.0,
                mean_duration_bars: 0.0,
            },
            Err(e) => return Err(e),
        };
        Ok(Self {
            sharpe,
            n_trades: result.trades.len(),
            total_net_bp: result.total_net_bp(),
            mean_duration_bars: dist.mean_duration_bars,
            max_drawdown_bp: max_drawdown(&result.equity_bp),
            return_histogram: dist.return_histogram,
            duration_histogram: dist.duration_histogram,
            skewness: dist.skewness,
        })
    }
}
