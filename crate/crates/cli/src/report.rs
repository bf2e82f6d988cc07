//! Report files. Every JSON report is `{ "header": ..., "body": ... }`;
//! CSV companions carry the same records in flat form.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use trendgate_core::engine::{BacktestResult, CostModel, Trade};
use trendgate_core::metrics::{MetricsReport, Sharpe};
use trendgate_core::optimizer::{Evaluation, OptimizationResult};
use trendgate_core::validation::{SharpeSpread, StressOutcome, WalkForwardReport};
use trendgate_core::{Series, StrategyParams};

use crate::csv_io::format_timestamp;

pub const SCHEMA: &str = "trendgate.report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub schema: String,
    pub command: String,
    pub run_id: String,
    pub config_hash: String,
    pub data_hash: String,
    pub seeds: BTreeMap<String, u64>,
}

impl Header {
    /// The run id is derived from the command and both hashes, so identical
    /// inputs always map to the same id.
    pub fn new(
        command: &str,
        config_hash: &str,
        data_hash: &str,
        seeds: BTreeMap<String, u64>,
    ) -> Self {
        let mut h = Sha256::new();
        for part in [command, config_hash, data_hash] {
            h.update(part.as_bytes());
            h.update([0]);
        }
        for (k, v) in &seeds {
            h.update(format!("{k}={v};").as_bytes());
        }
        Self {
            schema: SCHEMA.into(),
            command: command.into(),
            run_id: hex::encode(&h.finalize()[..8]),
            config_hash: config_hash.into(),
            data_hash: data_hash.into(),
            seeds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub header: Header,
    pub body: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub n_trades: usize,
    pub gross_bp: i64,
    pub net_bp: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestBody {
    pub params: StrategyParams,
    pub cost: CostModel,
    pub totals: Totals,
    pub metrics: MetricsReport,
    pub trades: Vec<Trade>,
}

impl BacktestBody {
    pub fn new(result: &BacktestResult, metrics: MetricsReport) -> Self {
        Self {
            params: result.params,
            cost: result.cost,
            totals: Totals {
                n_trades: result.trades.len(),
                gross_bp: result.total_gross_bp(),
                net_bp: result.total_net_bp(),
            },
            metrics,
            trades: result.trades.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeBody {
    pub budget: usize,
    pub result: OptimizationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressBody {
    pub params: StrategyParams,
    pub base_seed: u64,
    pub outcomes: Vec<StressOutcome>,
    /// Absent when fewer than two outcomes have a defined Sharpe.
    pub spread: Option<SharpeSpread>,
    pub min_sharpe: f64,
    pub pathological: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkForwardBody {
    pub params: StrategyParams,
    pub boundaries: [String; 2],
    pub report: WalkForwardReport,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()
}

fn sharpe_cell(s: Sharpe) -> String {
    match s {
        Sharpe::Value(v) => v.to_string(),
        Sharpe::Undefined => "undefined".into(),
    }
}

fn csv_writer(path: &Path) -> std::io::Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

fn finish(mut w: csv::Writer<File>) -> std::io::Result<()> {
    w.flush()
}

pub fn write_ledger_csv(path: &Path, trades: &[Trade]) -> Result<(), csv::Error> {
    let mut w = csv_writer(path)?;
    for t in trades {
        w.serialize(t)?;
    }
    if trades.is_empty() {
        w.write_record([
            "direction",
            "entry_index",
            "exit_index",
            "entry_price_bp",
            "exit_price_bp",
            "gross_bp",
            "net_bp",
            "duration_bars",
            "exit_reason",
        ])?;
    }
    Ok(finish(w)?)
}

/// `timestamp,close_bp,equity_bp`, one row per bar.
pub fn write_equity_csv(
    path: &Path,
    series: &Series,
    result: &BacktestResult,
) -> Result<(), csv::Error> {
    let mut w = csv_writer(path)?;
    w.write_record(["timestamp", "close_bp", "equity_bp"])?;
    for (bar, eq) in series.bars().iter().zip(&result.equity_bp) {
        w.write_record([
            format_timestamp(bar.ts),
            bar.close_bp.to_string(),
            eq.to_string(),
        ])?;
    }
    Ok(finish(w)?)
}

pub fn write_trace_csv(path: &Path, trace: &[Evaluation]) -> Result<(), csv::Error> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "index",
        "t1",
        "t2",
        "vol_window",
        "vol_lo",
        "vol_hi",
        "stop_loss_bp",
        "take_profit_bp",
        "max_hold_bars",
        "sharpe",
    ])?;
    for (i, e) in trace.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(e.params.to_array().iter().map(u32::to_string));
        row.push(sharpe_cell(e.sharpe));
        w.write_record(&row)?;
    }
    Ok(finish(w)?)
}

pub fn write_stress_csv(path: &Path, outcomes: &[StressOutcome]) -> Result<(), csv::Error> {
    let mut w = csv_writer(path)?;
    w.write_record(["index", "name", "sharpe", "total_net_bp", "n_trades"])?;
    for (i, o) in outcomes.iter().enumerate() {
        w.write_record([
            i.to_string(),
            o.distortion.name.clone(),
            sharpe_cell(o.sharpe),
            o.total_net_bp.to_string(),
            o.n_trades.to_string(),
        ])?;
    }
    Ok(finish(w)?)
}
