//! Moving averages, crossing detection, crossing-density prediction,
//! rescaled-range Hurst estimation and rolling volatility.
//!
//! Running sums are accumulated in integers, so averages are exact up to one
//! final division and crossing signs are decided without rounding.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaPair {
    pub t1: usize,
    pub t2: usize,
}

impl MaPair {
    pub fn new(t1: usize, t2: usize) -> Result<Self> {
        if t1 < 1 || t1 >= t2 {
            return Err(Error::BadPair { t1, t2 });
        }
        Ok(Self { t1, t2 })
    }

    /// `(t2 - t1) / t1`.
    pub fn delta_t(&self) -> f64 {
        (self.t2 - self.t1) as f64 / self.t1 as f64
    }
}

/// An indicator defined from `start` onward; earlier indices have no value.
#[derive(Debug, Clone, PartialEq)]
pub struct Lagged {
    start: usize,
    values: Vec<f64>,
}

impl Lagged {
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        index
            .checked_sub(self.start)
            .and_then(|k| self.values.get(k).copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Fast average crosses above the slow one.
    Up,
    Down,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub index: usize,
    pub direction: Direction,
}

fn prefix_sums(series: &Series) -> Vec<i64> {
    let mut acc = Vec::with_capacity(series.len() + 1);
    acc.push(0);
    let mut s = 0i64;
    for c in series.closes() {
        s += c;
        acc.push(s);
    }
    acc
}

/// Simple moving average of closes over `t` bars, defined from `t - 1`.
pub fn sma(series: &Series, t: usize) -> Result<Lagged> {
    let len = series.len();
    if t < 1 || t > len {
        return Err(Error::WindowOutOfRange { window: t, len });
    }
    let sums = prefix_sums(series);
    let values = (t - 1..len)
        .map(|i| (sums[i + 1] - sums[i + 1 - t]) as f64 / t as f64)
        .collect();
    Ok(Lagged {
        start: t - 1,
        values,
    })
}

/// Emits crossings from a stream of signs of `fast - slow`, the first sign
/// belonging to bar `start`. A zero carries the last nonzero sign forward,
/// so touching and reverting is not a crossing.
pub fn scan_crossings<I>(signs: I, start: usize) -> Vec<CrossingEvent>
where
    I: IntoIterator<Item = Ordering>,
{
    let mut events = Vec::new();
    let mut last = Ordering::Equal;
    for (k, sign) in signs.into_iter().enumerate() {
        if sign == Ordering::Equal {
            continue;
        }
        if last != Ordering::Equal && sign != last {
            let direction = if sign == Ordering::Greater {
                Direction::Up
            } else {
                Direction::Down
            };
            events.push(CrossingEvent {
                index: start + k,
                direction,
            });
        }
        last = sign;
    }
    events
}

/// Signs of `sma_t1 - sma_t2` from bar `t2 - 1` onward, decided exactly as
/// `sign(S1 * t2 - S2 * t1)` on integer window sums.
pub(crate) fn crossing_signs(series: &Series, pair: MaPair) -> Result<Vec<Ordering>> {
    let len = series.len();
    if len < pair.t2 {
        return Err(Error::SeriesTooShort {
            needed: pair.t2,
            len,
        });
    }
    let sums = prefix_sums(series);
    let (t1, t2) = (pair.t1 as i128, pair.t2 as i128);
    Ok((pair.t2 - 1..len)
        .map(|i| {
            let fast = (sums[i + 1] - sums[i + 1 - pair.t1]) as i128;
            let slow = (sums[i + 1] - sums[i + 1 - pair.t2]) as i128;
            (fast * t2).cmp(&(slow * t1))
        })
        .collect())
}

pub fn detect_crossings(series: &Series, pair: MaPair) -> Result<Vec<CrossingEvent>> {
    let signs = crossing_signs(series, pair)?;
    Ok(scan_crossings(signs, pair.t2 - 1))
}

/// Predicted crossings per bar, `(1/t2) [dT (1 - dT)]^(H - 1)`, with unit
/// proportionality constant. Only `0 < dT < 1` (i.e. `t2 < 2 t1`) is accepted.
pub fn crossing_density_pred(pair: MaPair, hurst: f64) -> Result<f64> {
    let dt = pair.delta_t();
    if !(dt > 0.0 && dt < 1.0) {
        return Err(Error::DeltaOutOfRange(dt));
    }
    if !(hurst > 0.0 && hurst <= 1.0) {
        return Err(Error::BadHurst(hurst));
    }
    Ok(libm::pow(dt * (1.0 - dt), hurst - 1.0) / pair.t2 as f64)
}

/// Least-squares constant `c` minimizing `sum (observed - c * predicted)^2`.
pub fn fit_shared_constant(observed: &[f64], predicted: &[f64]) -> f64 {
    let num: f64 = observed.iter().zip(predicted).map(|(o, p)| o * p).sum();
    let den: f64 = predicted.iter().map(|p| p * p).sum();
    num / den
}

pub const HURST_MIN_LEN: usize = 512;
const HURST_MIN_WINDOW: usize = 16;

/// Rescaled-range Hurst estimate on one-bar increments.
///
/// Window sizes run over powers of two from 16 to `len / 4`; each size
/// partitions the increments into non-overlapping windows whose R/S values
/// are averaged. The estimate is `0.5` plus the least-squares slope of
/// `ln(mean R/S) - ln(E[R/S])` on `ln(size)`, where `E[R/S]` is the
/// Anis-Lloyd/Peters expectation for independent increments. Without that
/// correction small windows bias the slope upward by about 0.03 to 0.06.
pub fn hurst_rs(series: &Series) -> Result<f64> {
    if series.len() < HURST_MIN_LEN {
        return Err(Error::SeriesTooShort {
            needed: HURST_MIN_LEN,
            len: series.len(),
        });
    }
    let inc: Vec<f64> = series
        .bars()
        .windows(2)
        .map(|w| (w[1].close_bp - w[0].close_bp) as f64)
        .collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut size = HURST_MIN_WINDOW;
    while size <= inc.len() / 4 {
        if let Some(rs) = mean_rescaled_range(&inc, size) {
            xs.push(libm::log(size as f64));
            ys.push(libm::log(rs) - libm::log(expected_rescaled_range(size)));
        }
        size *= 2;
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateSeries);
    }
    Ok(0.5 + ols_slope(&xs, &ys))
}

/// Anis-Lloyd expected R/S of `n` i.i.d. Gaussian increments, with Peters'
/// `(n - 1/2)/n` factor. The gamma ratio is replaced by its asymptote past
/// `n = 340`, where it overflows.
pub fn expected_rescaled_range(n: usize) -> f64 {
    let nf = n as f64;
    let front = if n <= 340 {
        libm::exp(libm::lgamma((nf - 1.0) / 2.0) - libm::lgamma(nf / 2.0))
            / libm::sqrt(core::f64::consts::PI)
    } else {
        1.0 / libm::sqrt(nf * core::f64::consts::PI / 2.0)
    };
    let sum: f64 = (1..n).map(|i| libm::sqrt((n - i) as f64 / i as f64)).sum();
    (nf - 0.5) / nf * front * sum
}

fn mean_rescaled_range(inc: &[f64], size: usize) -> Option<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for w in inc.chunks_exact(size) {
        let mean = w.iter().sum::<f64>() / size as f64;
        let (mut acc, mut hi, mut lo, mut ss) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for x in w {
            let d = x - mean;
            acc += d;
            hi = hi.max(acc);
            lo = lo.min(acc);
            ss += d * d;
        }
        let sd = libm::sqrt(ss / size as f64);
        if sd > 0.0 {
            total += (hi - lo) / sd;
            count += 1;
        }
    }
    (count > 0).then(|| total / count as f64)
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Population standard deviation of the `window` one-bar changes ending at
/// each bar, defined from index `window`.
pub fn rolling_volatility(series: &Series, window: usize) -> Result<Lagged> {
    let len = series.len();
    if window < 2 || window > len {
        return Err(Error::WindowOutOfRange { window, len });
    }
    let bars = series.bars();
    let change = |j: usize| bars[j].close_bp - bars[j - 1].close_bp;
    let (mut s1, mut s2) = (0i128, 0i128);
    for j in 1..window {
        let c = change(j) as i128;
        s1 += c;
        s2 += c * c;
    }
    let w = window as i128;
    let mut values = Vec::with_capacity(len - window);
    for i in window..len {
        let c = change(i) as i128;
        s1 += c;
        s2 += c * c;
        let var = (w * s2 - s1 * s1) as f64 / (w * w) as f64;
        values.push(libm::sqrt(var));
        let out = change(i + 1 - window) as i128;
        s1 -= out;
        s2 -= out * out;
    }
    Ok(Lagged {
        start: window,
        values,
    })
}
