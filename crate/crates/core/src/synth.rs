//! Synthetic price generators with known statistical structure.
//!
//! * random walk: i.i.d. Gaussian increments (H = 1/2, the null market);
//! * fractional Brownian motion: exact Gaussian increments with Hurst `H`,
//!   synthesized by circulant embedding of the fractional-Gaussian-noise
//!   autocovariance;
//! * regime trend: Gaussian increments whose drift sign flips between
//!   geometrically distributed regimes, a series with planted persistence.
//!
//! Paths are built in continuous values and rounded to integer basis points
//! once, at the end. Timestamps lie on a 5-minute grid.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::fft;
use crate::rng;
use crate::series::{Bar, Series, BAR_SECONDS};

/// 2000-01-03T00:00:00Z.
pub const SYNTH_EPOCH: i64 = 946_857_600;
pub const DEFAULT_START_PRICE_BP: i64 = 1_000_000;
pub const SYNTH_TICK_SIZE: f64 = 0.0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    RandomWalk,
    Fbm,
    RegimeTrend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub n: usize,
    pub sigma_bp: f64,
    /// fbm only.
    pub hurst: f64,
    /// regime_trend only.
    pub drift_bp: f64,
    /// regime_trend only.
    pub regime_len_mean: f64,
    pub seed: u64,
    pub start_price_bp: i64,
}

impl SynthSpec {
    pub fn random_walk(n: usize, sigma_bp: f64, seed: u64) -> Self {
        Self {
            kind: SynthKind::RandomWalk,
            n,
            sigma_bp,
            hurst: 0.5,
            drift_bp: 0.0,
            regime_len_mean: 1.0,
            seed,
            start_price_bp: DEFAULT_START_PRICE_BP,
        }
    }

    pub fn fbm(n: usize, sigma_bp: f64, hurst: f64, seed: u64) -> Self {
        Self {
            kind: SynthKind::Fbm,
            hurst,
            ..Self::random_walk(n, sigma_bp, seed)
        }
    }

    pub fn regime_trend(
        n: usize,
        sigma_bp: f64,
        drift_bp: f64,
        regime_len_mean: f64,
        seed: u64,
    ) -> Self {
        Self {
            kind: SynthKind::RegimeTrend,
            drift_bp,
            regime_len_mean,
            ..Self::random_walk(n, sigma_bp, seed)
        }
    }

    fn check_common(&self) -> Result<()> {
        if !(self.sigma_bp > 0.0 && self.sigma_bp.is_finite()) {
            return Err(Error::BadSigma);
        }
        if self.start_price_bp <= 0 {
            return Err(Error::BadStartPrice);
        }
        Ok(())
    }
}

/// Dispatches on `spec.kind`.
pub fn generate(spec: &SynthSpec) -> Result<Series> {
    match spec.kind {
        SynthKind::RandomWalk => gen_random_walk(spec),
        SynthKind::Fbm => gen_fbm(spec),
        SynthKind::RegimeTrend => gen_regime_trend(spec),
    }
}

pub fn gen_random_walk(spec: &SynthSpec) -> Result<Series> {
    spec.check_common()?;
    let mut rng = rng::stream(spec.seed);
    let increments: Vec<f64> = (1..spec.n)
        .map(|_| spec.sigma_bp * rng.sample::<f64, _>(StandardNormal))
        .collect();
    integrate(spec, &increments)
}

pub fn gen_fbm(spec: &SynthSpec) -> Result<Series> {
    if !(spec.hurst > 0.0 && spec.hurst < 1.0) {
        return Err(Error::BadHurst(spec.hurst));
    }
    spec.check_common()?;
    let mut rng = rng::stream(spec.seed);
    let m = spec.n.saturating_sub(1);
    let mut noise = fractional_gaussian_noise(m, spec.hurst, &mut rng);
    for x in &mut noise {
        *x *= spec.sigma_bp;
    }
    integrate(spec, &noise)
}

pub fn gen_regime_trend(spec: &SynthSpec) -> Result<Series> {
    if spec.regime_len_mean.is_nan() || spec.regime_len_mean < 1.0 {
        return Err(Error::BadRegimeLength);
    }
    spec.check_common()?;
    let mut rng = rng::stream(spec.seed);
    let lengths = Geometric::new(1.0 / spec.regime_len_mean).map_err(|_| Error::BadRegimeLength)?;
    let mut sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut remaining = 1 + lengths.sample(&mut rng);
    let increments: Vec<f64> = (1..spec.n)
        .map(|_| {
            if remaining == 0 {
                sign = -sign;
                remaining = 1 + lengths.sample(&mut rng);
            }
            remaining -= 1;
            sign * spec.drift_bp + spec.sigma_bp * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    integrate(spec, &increments)
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(k: usize, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * (libm::pow(k + 1.0, h2) - 2.0 * libm::pow(k, h2) + libm::pow((k - 1.0).abs(), h2))
}

/// `m` samples of unit-variance fractional Gaussian noise (Davies-Harte).
fn fractional_gaussian_noise(m: usize, hurst: f64, rng: &mut rng::Stream) -> Vec<f64> {
    if m == 0 {
        return Vec::new();
    }
    let half = m.next_power_of_two();
    let size = 2 * half;
    let mut re = vec![0.0; size];
    let mut im = vec![0.0; size];
    for (k, r) in re.iter_mut().enumerate().take(half + 1) {
        *r = fgn_autocovariance(k, hurst);
    }
    for k in 1..half {
        re[size - k] = re[k];
    }
    fft(&mut re, &mut im);
    // eigenvalues of the symmetric circulant are real and, for fGn,
    // nonnegative; clamp rounding noise
    let scale = size as f64;
    for k in 0..size {
        let amp = libm::sqrt(re[k].max(0.0) / scale);
        re[k] = amp * rng.sample::<f64, _>(StandardNormal);
        im[k] = amp * rng.sample::<f64, _>(StandardNormal);
    }
    fft(&mut re, &mut im);
    re.truncate(m);
    re
}

fn integrate(spec: &SynthSpec, increments: &[f64]) -> Result<Series> {
    let mut bars = Vec::with_capacity(spec.n);
    if spec.n > 0 {
        let mut level = spec.start_price_bp as f64;
        bars.push(Bar::new(SYNTH_EPOCH, spec.start_price_bp));
        for (i, dx) in increments.iter().enumerate() {
            level += dx;
            let close = (libm::round(level) as i64).max(1);
            bars.push(Bar::new(SYNTH_EPOCH + (i as i64 + 1) * BAR_SECONDS, close));
        }
    }
    Series::new(bars, SYNTH_TICK_SIZE, 1)
}
