//! Statistical contracts of the generators and estimators, checked against
//! closed forms or independent samplers.

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use trendgate_core::indicators::{
    crossing_density_pred, detect_crossings, fit_shared_constant, hurst_rs, MaPair,
};
use trendgate_core::series::Series;
use trendgate_core::synth::{gen_fbm, gen_random_walk, gen_regime_trend, SynthSpec};

fn increments(s: &Series) -> Vec<f64> {
    s.bars()
        .windows(2)
        .map(|w| (w[1].close_bp - w[0].close_bp) as f64)
        .collect()
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn lag1(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    let cov: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    cov / var
}

/// Box-Muller on a different generator family, rounded like the synth path.
fn box_muller_walk_increments(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = SmallRng::seed_from_u64(seed);
    let mut level = 0.0f64;
    let mut prev = 0i64;
    (0..n)
        .map(|_| {
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random();
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            level += sigma * z;
            let r = level.round() as i64;
            let d = (r - prev) as f64;
            prev = r;
            d
        })
        .collect()
}

#[test]
fn random_walk_increment_scale() {
    let s = gen_random_walk(&SynthSpec::random_walk(1 << 20, 5.0, 8)).unwrap();
    let sd = std_dev(&increments(&s));
    let reference = std_dev(&box_muller_walk_increments(1 << 20, 5.0, 8));
    assert!((sd / 5.0 - 1.0).abs() < 0.02, "{sd}");
    assert!((reference / 5.0 - 1.0).abs() < 0.02, "{reference}");
    assert!((sd / reference - 1.0).abs() < 0.02);
}

#[test]
fn fbm_lag_one_autocorrelation() {
    let s = gen_fbm(&SynthSpec::fbm(1 << 17, 5.0, 0.7, 4)).unwrap();
    let expected = 2f64.powf(2.0 * 0.7 - 1.0) - 1.0;
    assert!((expected - 0.3195).abs() < 1e-4);
    let rho = lag1(&increments(&s));
    assert!((rho - expected).abs() < 0.02, "{rho} vs {expected}");

    let s = gen_fbm(&SynthSpec::fbm(1 << 17, 5.0, 0.3, 4)).unwrap();
    let expected = 2f64.powf(2.0 * 0.3 - 1.0) - 1.0;
    let rho = lag1(&increments(&s));
    assert!((rho - expected).abs() < 0.02, "{rho} vs {expected}");
}

#[test]
fn fbm_variance_scaling() {
    for h in [0.3, 0.7] {
        let lags: Vec<usize> = (4..=12).map(|k| 1usize << k).collect();
        let mut second_moment = vec![0.0; lags.len()];
        let seeds = 16;
        for seed in 0..seeds {
            let s = gen_fbm(&SynthSpec::fbm(1 << 16, 5.0, h, 100 + seed)).unwrap();
            let c: Vec<f64> = s.bars().iter().map(|b| b.close_bp as f64).collect();
            for (slot, &t) in second_moment.iter_mut().zip(&lags) {
                let m: f64 = c.windows(t + 1).map(|w| (w[t] - w[0]).powi(2)).sum::<f64>()
                    / (c.len() - t) as f64;
                *slot += m / seeds as f64;
            }
        }
        let xs: Vec<f64> = lags.iter().map(|&t| (t as f64).ln()).collect();
        let ys: Vec<f64> = second_moment.iter().map(|v| v.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let slope = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!(
            (slope / (2.0 * h) - 1.0).abs() < 0.05,
            "H={h} slope {slope}"
        );
        // absolute level at the shortest lag: sigma^2 t^{2H}
        let want = 25.0 * 16f64.powf(2.0 * h);
        assert!((second_moment[0] / want - 1.0).abs() < 0.05);
    }
}

#[test]
fn regime_trend_drift_cancels_across_seeds() {
    let means: Vec<f64> = (0..8)
        .map(|seed| {
            let s =
                gen_regime_trend(&SynthSpec::regime_trend(1 << 17, 5.0, 2.0, 500.0, seed)).unwrap();
            let inc = increments(&s);
            inc.iter().sum::<f64>() / inc.len() as f64
        })
        .collect();
    let pooled = means.iter().sum::<f64>() / 8.0;
    let se = std_dev(&means) / 8f64.sqrt();
    assert!(pooled.abs() < 3.0 * se, "pooled {pooled}, se {se}");
    // persistence is planted: lag-1 autocorrelation of increments is positive
    let s = gen_regime_trend(&SynthSpec::regime_trend(1 << 17, 5.0, 2.0, 500.0, 0)).unwrap();
    assert!(lag1(&increments(&s)) > 0.05);
}

#[test]
fn regime_trend_without_drift_is_a_random_walk() {
    let s = gen_regime_trend(&SynthSpec::regime_trend(1 << 18, 5.0, 0.0, 50.0, 2)).unwrap();
    let inc = increments(&s);
    assert!((std_dev(&inc) / 5.0 - 1.0).abs() < 0.02);
    assert!(lag1(&inc).abs() < 4.0 / (inc.len() as f64).sqrt());
}

#[test]
fn hurst_recovers_generator_exponent() {
    let half = hurst_rs(&gen_fbm(&SynthSpec::fbm(1 << 17, 5.0, 0.5, 1)).unwrap()).unwrap();
    assert!((0.45..=0.55).contains(&half), "{half}");
    let persistent = hurst_rs(&gen_fbm(&SynthSpec::fbm(1 << 17, 5.0, 0.8, 1)).unwrap()).unwrap();
    assert!((0.75..=0.85).contains(&persistent), "{persistent}");
    let walks: f64 = (0..8)
        .map(|seed| {
            hurst_rs(&gen_random_walk(&SynthSpec::random_walk(1 << 15, 5.0, seed)).unwrap())
                .unwrap()
        })
        .sum::<f64>()
        / 8.0;
    assert!((walks - 0.5).abs() < 0.05, "{walks}");
}

#[test]
fn crossing_rate_follows_density_shape_for_small_delta() {
    // dT in (0, 0.6]: the range where the proportionality holds to a few
    // percent on random walks
    let t2 = 100;
    let t1s = [63, 70, 80, 90, 95];
    let walks: Vec<Series> = (0..4)
        .map(|seed| gen_random_walk(&SynthSpec::random_walk(1 << 19, 5.0, 50 + seed)).unwrap())
        .collect();
    let mut observed = Vec::new();
    let mut predicted = Vec::new();
    for t1 in t1s {
        let pair = MaPair::new(t1, t2).unwrap();
        let (mut count, mut bars) = (0usize, 0usize);
        for w in &walks {
            count += detect_crossings(w, pair).unwrap().len();
            bars += w.len() - t2 + 1;
        }
        observed.push(count as f64 / bars as f64);
        predicted.push(crossing_density_pred(pair, 0.5).unwrap());
    }
    let c = fit_shared_constant(&observed, &predicted);
    for (o, p) in observed.iter().zip(&predicted) {
        assert!((o / (c * p) - 1.0).abs() < 0.1, "{o} vs {}", c * p);
    }
}
