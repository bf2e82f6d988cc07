//! The bar CSV format: header `timestamp,close`, one bar per line, an
//! RFC 3339 UTC timestamp with a `Z` suffix and a decimal close price.

use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use rust_decimal::prelude::ToPrimitive;
use rust_decimal::{Decimal, RoundingStrategy};
use thiserror::Error;
use trendgate_core::series::{Bar, Series};

pub const HEADER: [&str; 2] = ["timestamp", "close"];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line {line}: {msg}")]
    Malformed { line: u64, msg: String },
    #[error("empty input")]
    EmptyInput,
    #[error("line {line}: duplicate timestamp {ts}")]
    DuplicateTimestamp { line: u64, ts: String },
    #[error("line {line}: non-positive price")]
    NonPositivePrice { line: u64 },
    #[error("tick size must be positive")]
    BadTickSize,
    #[error(transparent)]
    Series(#[from] trendgate_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn parse_timestamp(text: &str) -> Option<i64> {
    if !text.ends_with('Z') {
        return None;
    }
    DateTime::parse_from_rfc3339(text)
        .ok()
        .map(|t| t.with_timezone(&Utc).timestamp())
}

pub fn format_timestamp(ts: i64) -> String {
    DateTime::<Utc>::from_timestamp(ts, 0)
        .expect("timestamp in range")
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// Price over tick, rounded half away from zero.
pub fn to_basis_points(price: Decimal, tick: Decimal) -> Option<i64> {
    price
        .checked_div(tick)?
        .round_dp_with_strategy(0, RoundingStrategy::MidpointAwayFromZero)
        .to_i64()
}

/// Parses bars, sorts them by time and converts closes to basis points.
pub fn parse_csv<R: Read>(input: R, tick: Decimal, slippage_bp: u32) -> Result<Series, CsvError> {
    if tick <= Decimal::ZERO {
        return Err(CsvError::BadTickSize);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows: Vec<(i64, i64, u64)> = Vec::new();
    let mut saw_header = false;
    for record in reader.records() {
        let record = record.map_err(|e| CsvError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if !saw_header {
            if record.iter().ne(HEADER) {
                return Err(CsvError::Malformed {
                    line,
                    msg: "expected header `timestamp,close`".into(),
                });
            }
            saw_header = true;
            continue;
        }
        if record.len() != 2 {
            return Err(CsvError::Malformed {
                line,
                msg: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let ts = parse_timestamp(&record[0]).ok_or_else(|| CsvError::Malformed {
            line,
            msg: format!("bad timestamp `{}`", &record[0]),
        })?;
        let price = Decimal::from_str(&record[1]).map_err(|_| CsvError::Malformed {
            line,
            msg: format!("bad price `{}`", &record[1]),
        })?;
        if price <= Decimal::ZERO {
            return Err(CsvError::NonPositivePrice { line });
        }
        let bp = to_basis_points(price, tick).ok_or_else(|| CsvError::Malformed {
            line,
            msg: "price out of range".into(),
        })?;
        if bp <= 0 {
            return Err(CsvError::NonPositivePrice { line });
        }
        rows.push((ts, bp, line));
    }
    if rows.is_empty() {
        return Err(CsvError::EmptyInput);
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(CsvError::DuplicateTimestamp {
            line: w[0].2.max(w[1].2),
            ts: format_timestamp(w[1].0),
        });
    }
    let bars = rows
        .into_iter()
        .map(|(ts, bp, _)| Bar::new(ts, bp))
        .collect();
    let tick_f = tick.to_f64().ok_or(CsvError::BadTickSize)?;
    Ok(Series::new(bars, tick_f, slippage_bp)?)
}

pub fn write_csv<W: Write>(series: &Series, tick: Decimal, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", HEADER.join(","))?;
    for bar in series.bars() {
        let price = Decimal::from(bar.close_bp) * tick;
        writeln!(out, "{},{}", format_timestamp(bar.ts), price)?;
    }
    out.flush()
}
