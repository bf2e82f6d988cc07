//! Close-only price series in integer basis points.
//!
//! A [`Series`] is an immutable, validated run of [`Bar`]s: strictly
//! increasing timestamps (unix seconds, UTC) and positive closes expressed
//! as multiples of the instrument tick.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Bar spacing of the reference data set, in seconds.
pub const BAR_SECONDS: i64 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bar {
    /// Unix seconds, UTC.
    pub ts: i64,
    pub close_bp: i64,
}

impl Bar {
    pub const fn new(ts: i64, close_bp: i64) -> Self {
        Self { ts, close_bp }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    bars: Vec<Bar>,
    tick_size: f64,
    slippage_bp: u32,
}

impl Series {
    /// Builds a series, checking ordering, positivity and metadata.
    /// An empty bar list is accepted; consumers reject it where it matters.
    pub fn new(bars: Vec<Bar>, tick_size: f64, slippage_bp: u32) -> Result<Self> {
        if !(tick_size > 0.0 && tick_size.is_finite()) {
            return Err(Error::BadTickSize);
        }
        if slippage_bp < 1 {
            return Err(Error::BadSlippage);
        }
        for (i, bar) in bars.iter().enumerate() {
            if bar.close_bp <= 0 {
                return Err(Error::NonPositivePrice { index: i });
            }
            if i > 0 {
                let prev = bars[i - 1].ts;
                if bar.ts == prev {
                    return Err(Error::DuplicateTimestamp { ts: bar.ts });
                }
                if bar.ts < prev {
                    return Err(Error::UnorderedTimestamps { index: i });
                }
            }
        }
        Ok(Self {
            bars,
            tick_size,
            slippage_bp,
        })
    }

    /// Sorts unordered bars by timestamp before validating.
    pub fn from_unsorted(mut bars: Vec<Bar>, tick_size: f64, slippage_bp: u32) -> Result<Self> {
        bars.sort_by_key(|b| b.ts);
        Self::new(bars, tick_size, slippage_bp)
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn tick_size(&self) -> f64 {
        self.tick_size
    }

    pub fn slippage_bp(&self) -> u32 {
        self.slippage_bp
    }

    pub fn close(&self, index: usize) -> i64 {
        self.bars[index].close_bp
    }

    pub fn closes(&self) -> impl ExactSizeIterator<Item = i64> + '_ {
        self.bars.iter().map(|b| b.close_bp)
    }

    /// A copy of `bars[range]` carrying the same metadata.
    pub fn slice(&self, range: core::ops::Range<usize>) -> Series {
        Series {
            bars: self.bars[range].to_vec(),
            tick_size: self.tick_size,
            slippage_bp: self.slippage_bp,
        }
    }

    /// Reflects every close about the first close: `c'[i] = 2 c[0] - c[i]`.
    /// Closes that would fall below 1 bp are rejected.
    pub fn mirrored(&self) -> Result<Series> {
        let Some(first) = self.bars.first() else {
            return Ok(self.clone());
        };
        let pivot = first.close_bp;
        let bars = self
            .bars
            .iter()
            .map(|b| Bar::new(b.ts, 2 * pivot - b.close_bp))
            .collect();
        Series::new(bars, self.tick_size, self.slippage_bp)
    }
}

/// Signed price change from `q1` to `q2`, in basis points.
pub fn price_change_bp(q1: &Bar, q2: &Bar) -> i64 {
    q2.close_bp - q1.close_bp
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSplit {
    pub in_sample: Series,
    pub out_sample: Series,
    pub live_sample: Series,
    pub boundaries: (i64, i64),
}

/// Chronological three-way split on half-open intervals:
/// in = `t < b1`, out = `b1 <= t < b2`, live = `t >= b2`.
pub fn split_samples(series: &Series, b1: i64, b2: i64) -> Result<SampleSplit> {
    if b1 >= b2 {
        return Err(Error::BadBoundaries);
    }
    let bars = series.bars();
    let first = bars.first().ok_or(Error::EmptyInput)?;
    if b1 < first.ts {
        return Err(Error::BoundaryOutOfRange { ts: b1 });
    }
    let i1 = bars.partition_point(|b| b.ts < b1);
    let i2 = bars.partition_point(|b| b.ts < b2);
    if i1 == 0 || i2 == i1 || i2 == bars.len() {
        return Err(Error::EmptyPart);
    }
    Ok(SampleSplit {
        in_sample: series.slice(0..i1),
        out_sample: series.slice(i1..i2),
        live_sample: series.slice(i2..bars.len()),
        boundaries: (b1, b2),
    })
}

/// Adds an independent integer draw from `[-amplitude_bp, amplitude_bp]` to
/// every close, clamping the result at 1 bp.
pub fn randomize(series: &Series, amplitude_bp: u32, seed: u64) -> Series {
    let mut rng = rng::stream(seed);
    let a = i64::from(amplitude_bp);
    let bars = series
        .bars()
        .iter()
        .map(|b| {
            let u = if a == 0 { 0 } else { rng.random_range(-a..=a) };
            Bar::new(b.ts, (b.close_bp + u).max(1))
        })
        .collect();
    Series {
        bars,
        tick_size: series.tick_size,
        slippage_bp: series.slippage_bp,
    }
}
