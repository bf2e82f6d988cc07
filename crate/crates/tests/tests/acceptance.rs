//! Acceptance suite. Each test checks one criterion at its stated tolerance
//! and prints a single `[PASS]` or `[FAIL]` line straight to stdout, so the
//! verdicts stay visible under the test harness' output capture.

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use trendgate::cli::stress_parallel;
use trendgate::report::sha256_hex;
use trendgate_core::engine::{run_backtest, CostModel};
use trendgate_core::indicators::{
    crossing_density_pred, detect_crossings, fit_shared_constant, hurst_rs, MaPair,
};
use trendgate_core::metrics::{sharpe_ratio, skewness, Sharpe};
use trendgate_core::optimizer::{optimize, SearchSpace};
use trendgate_core::rng::derive_seed;
use trendgate_core::series::{split_samples, Bar, SampleSplit, Series};
use trendgate_core::synth::{gen_fbm, gen_random_walk, generate, SynthSpec};
use trendgate_core::validation::{
    default_suite, walk_forward, Distortion, DistortionSet, Gates, Verdict,
};
use trendgate_core::StrategyParams;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[{tag}] criterion {id}: {name}: {detail}");
    let _ = out.flush();
}

fn within(started: Instant, limit: Duration) -> (bool, String) {
    let took = started.elapsed();
    (
        took < limit,
        format!(
            "runtime {:.2}s (limit {}s)",
            took.as_secs_f64(),
            limit.as_secs()
        ),
    )
}

#[test]
fn criterion_1_fee_accounting() {
    let started = Instant::now();
    let mut closes = vec![13_800; 6];
    closes.extend([13_799; 4]);
    closes.extend([13_801, 13_802, 13_803, 13_805]);
    closes.resize(46, 13_805);
    let bars = closes
        .iter()
        .enumerate()
        .map(|(i, &c)| Bar::new(978_307_200 + 86_400 * i as i64, c))
        .collect();
    let series = Series::new(bars, 0.0001, 1).unwrap();
    let params = StrategyParams {
        t1: 2,
        t2: 4,
        vol_window: 2,
        vol_lo: 0,
        vol_hi: u32::MAX,
        stop_loss_bp: 1000,
        take_profit_bp: 1000,
        max_hold_bars: 1,
    };
    let result = run_backtest(&series, &params, &CostModel::new(1, 1), None).unwrap();
    let t = &result.trades;
    let exact = t.len() == 1
        && t[0].entry_price_bp == 13_802
        && t[0].exit_price_bp == 13_805
        && t[0].gross_bp == 3
        && t[0].net_bp == 1;
    let (fast, timing) = within(started, Duration::from_secs(1));
    let detail = match t.first() {
        Some(x) => format!(
            "{} trade(s); first {}->{} gross {} net {}; {timing}",
            t.len(),
            x.entry_price_bp,
            x.exit_price_bp,
            x.gross_bp,
            x.net_bp
        ),
        None => format!("no trades; {timing}"),
    };
    report(1, "fee accounting", exact && fast, &detail);
    assert!(exact && fast, "{detail}");
}

#[test]
fn criterion_2_crossing_density_shape() {
    let started = Instant::now();
    const N: usize = 1 << 20;
    const T2: usize = 128;
    const T1: [usize; 5] = [70, 80, 96, 112, 120];
    let worlds: Vec<Series> = (0..8u64)
        .into_par_iter()
        .map(|s| gen_random_walk(&SynthSpec::random_walk(N, 5.0, 0xC0FFEE + s)).unwrap())
        .collect();
    let observed: Vec<f64> = T1
        .iter()
        .map(|&t1| {
            let pair = MaPair::new(t1, T2).unwrap();
            let (events, bars) = worlds
                .par_iter()
                .map(|w| (detect_crossings(w, pair).unwrap().len(), w.len() - T2 + 1))
                .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            events as f64 / bars as f64
        })
        .collect();
    let predicted: Vec<f64> = T1
        .iter()
        .map(|&t1| crossing_density_pred(MaPair::new(t1, T2).unwrap(), 0.5).unwrap())
        .collect();
    let c = fit_shared_constant(&observed, &predicted);
    let errors: Vec<f64> = observed
        .iter()
        .zip(&predicted)
        .map(|(o, p)| c * p / o - 1.0)
        .collect();
    let shape_ok = errors.iter().all(|e| e.abs() <= 0.15);

    // Diagnostic only: the same law with the lag difference taken relative
    // to the slow window.
    let alt_pred: Vec<f64> = T1
        .iter()
        .map(|&t1| {
            let dt = (T2 - t1) as f64 / T2 as f64;
            (dt * (1.0 - dt)).powf(-0.5) / T2 as f64
        })
        .collect();
    let c_alt = fit_shared_constant(&observed, &alt_pred);
    let alt_worst = observed
        .iter()
        .zip(&alt_pred)
        .map(|(o, p)| (c_alt * p / o - 1.0).abs())
        .fold(0.0, f64::max);

    let (fast, timing) = within(started, Duration::from_secs(30));
    let cells: Vec<String> = T1
        .iter()
        .zip(observed.iter().zip(&errors))
        .map(|(t1, (o, e))| format!("T1={t1} rate={o:.6} err={:+.1}%", e * 100.0))
        .collect();
    let detail = format!(
        "c={c:.4}; {}; worst with dT=(T2-T1)/T2 would be {:.1}%; {timing}",
        cells.join(", "),
        alt_worst * 100.0
    );
    report(
        2,
        "crossing density shape within 15%",
        shape_ok && fast,
        &detail,
    );
    assert!(shape_ok && fast, "{detail}");
}

#[test]
fn criterion_3_hurst_estimator() {
    let started = Instant::now();
    let mut cells = Vec::new();
    let mut ok = true;
    for h in [0.3, 0.5, 0.7] {
        let estimates: Vec<f64> = (0..8u64)
            .into_par_iter()
            .map(|s| {
                hurst_rs(&gen_fbm(&SynthSpec::fbm(1 << 17, 5.0, h, 500 + s)).unwrap()).unwrap()
            })
            .collect();
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        ok &= (mean - h).abs() <= 0.05;
        cells.push(format!("H={h} mean={mean:.3}"));
    }
    let (fast, timing) = within(started, Duration::from_secs(60));
    let detail = format!("{}; {timing}", cells.join(", "));
    report(3, "Hurst estimate within 0.05", ok && fast, &detail);
    assert!(ok && fast, "{detail}");
}

const WORLD_BARS: usize = 100_000;
const BUDGET: usize = 300;

struct World {
    series: Series,
    bounds: (i64, i64),
    split: SampleSplit,
    params: StrategyParams,
    out_sharpe: Sharpe,
    out_total_bp: i64,
}

/// Optimizes on the first 60% and evaluates the frozen winner on the next 20%.
fn pipeline(series: Series, seed: u64) -> World {
    let cost = CostModel::default();
    let bars = series.bars();
    let bounds = (bars[WORLD_BARS * 6 / 10].ts, bars[WORLD_BARS * 8 / 10].ts);
    let split = split_samples(&series, bounds.0, bounds.1).unwrap();
    let best = optimize(
        &split.in_sample,
        &SearchSpace::default(),
        BUDGET,
        seed,
        &cost,
    )
    .unwrap();
    let out = run_backtest(&split.out_sample, &best.best_params, &cost, None).unwrap();
    World {
        out_sharpe: sharpe_ratio(&out).unwrap(),
        out_total_bp: out.total_net_bp(),
        params: best.best_params,
        series,
        bounds,
        split,
    }
}

fn null_worlds() -> &'static Vec<World> {
    static WORLDS: OnceLock<Vec<World>> = OnceLock::new();
    WORLDS.get_or_init(|| {
        (0..20u64)
            .into_par_iter()
            .map(|i| {
                let s = gen_random_walk(&SynthSpec::random_walk(
                    WORLD_BARS,
                    5.0,
                    derive_seed(4_000, i),
                ))
                .unwrap();
                pipeline(s, derive_seed(4_001, i))
            })
            .collect()
    })
}

fn trend_worlds() -> &'static Vec<World> {
    static WORLDS: OnceLock<Vec<World>> = OnceLock::new();
    WORLDS.get_or_init(|| {
        (0..20u64)
            .into_par_iter()
            .map(|i| {
                let spec =
                    SynthSpec::regime_trend(WORLD_BARS, 5.0, 2.0, 500.0, derive_seed(5_000, i));
                pipeline(generate(&spec).unwrap(), derive_seed(5_001, i))
            })
            .collect()
    })
}

#[test]
fn criterion_4_null_market_rejection() {
    let started = Instant::now();
    let worlds = null_worlds();
    let values: Vec<f64> = worlds.iter().filter_map(|w| w.out_sharpe.value()).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let t = mean / (sd / n.sqrt());
    let ok = values.len() >= 2 && mean < 0.5 && t < 2.0;
    let (fast, timing) = within(started, Duration::from_secs(600));
    let detail = format!(
        "{} worlds with defined out-sample Sharpe, mean {mean:.3}, sd {sd:.3}, t {t:.2}; {timing}",
        values.len()
    );
    report(
        4,
        "null-market mean out-sample Sharpe < 0.5 and t < 2",
        ok && fast,
        &detail,
    );
    assert!(ok && fast, "{detail}");
}

#[test]
fn criterion_5_positive_control() {
    let started = Instant::now();
    let worlds = trend_worlds();
    let wins = worlds.iter().filter(|w| w.out_total_bp > 0).count();
    let ok = wins * 10 >= worlds.len() * 8;
    let (fast, timing) = within(started, Duration::from_secs(600));
    let totals: Vec<String> = worlds.iter().map(|w| w.out_total_bp.to_string()).collect();
    let detail = format!(
        "{wins}/{} worlds with positive out-sample net; totals [{}]; {timing}",
        worlds.len(),
        totals.join(" ")
    );
    report(
        5,
        "positive control profitable in >= 80% of worlds",
        ok && fast,
        &detail,
    );
    assert!(ok && fast, "{detail}");
}

/// First positive-control world whose frozen parameters pass walk-forward.
fn accepted_world() -> Option<&'static World> {
    trend_worlds().iter().find(|w| {
        let r = walk_forward(
            &w.series,
            w.bounds,
            &w.params,
            &CostModel::default(),
            &Gates::default(),
        )
        .unwrap();
        r.verdict == Verdict::Accepted
    })
}

#[test]
fn criterion_6_stress_suite_soundness() {
    let started = Instant::now();
    let Some(world) = accepted_world() else {
        report(
            6,
            "stress suite soundness",
            false,
            "no accepted positive-control run",
        );
        panic!("no accepted positive-control run");
    };
    let cost = CostModel::default();
    let series = &world.split.in_sample;
    let params = &world.params;
    let suite = default_suite(series.len(), cost.slippage_bp);
    let outcomes = stress_parallel(series, params, &cost, &suite, 77).unwrap();
    let plain = run_backtest(series, params, &cost, None).unwrap();
    let plain_sharpe = sharpe_ratio(&plain).unwrap();

    let full = suite.len() == 15 && outcomes.len() == 15;
    let identity = &outcomes[0];
    let identity_ok = identity.distortion == DistortionSet::identity()
        && identity.sharpe == plain_sharpe
        && identity.total_net_bp == plain.total_net_bp();

    let fee2 = outcomes
        .iter()
        .find(|o| o.distortion.distortions == [Distortion::FeeMultiplier { m: 2 }])
        .unwrap();
    let expected_gap = 2 * i64::from(cost.slippage_bp) * plain.trades.len() as i64;
    let fee_ok = identity.total_net_bp - fee2.total_net_bp == expected_gap
        && fee2.n_trades == plain.trades.len();

    let neutral = |d: Distortion| {
        let set = DistortionSet::single("neutral", d);
        run_backtest(series, params, &cost, Some(&set))
            .unwrap()
            .trades
            == plain.trades
    };
    let delay0 = neutral(Distortion::DelayOrders { k: 0 });
    let adverse0 = neutral(Distortion::AdverseFill { penalty_bp: 0 });

    let ok = full && identity_ok && fee_ok && delay0 && adverse0;
    let (fast, timing) = within(started, Duration::from_secs(120));
    let detail = format!(
        "{} entries; identity sharpe {:?} vs plain {:?}; fee x2 gap {} (expected {expected_gap}); \
         delay 0 identical {delay0}; adverse 0 identical {adverse0}; {timing}",
        outcomes.len(),
        identity.sharpe,
        plain_sharpe,
        identity.total_net_bp - fee2.total_net_bp,
    );
    report(6, "stress suite soundness", ok && fast, &detail);
    assert!(ok && fast, "{detail}");
}

fn run_cli(args: &[&str]) -> ExitCode {
    trendgate::cli::run(std::iter::once("trendgate").chain(args.iter().copied()))
}

fn hashes(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                sha256_hex(&std::fs::read(&p).unwrap()),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_7_determinism() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let data = dir.join("bars.csv");
    let data_s = data.to_str().unwrap();
    let synth = [
        "synth",
        "--kind",
        "regime_trend",
        "--n",
        "40000",
        "--sigma",
        "5",
        "--drift",
        "2",
        "--seed",
        "21",
        "--out",
        data_s,
    ];
    assert_eq!(run_cli(&synth), ExitCode::SUCCESS);
    let config = dir.join("run.toml");
    std::fs::write(
        &config,
        "[data]\ncsv = \"bars.csv\"\n\n[split]\nb1 = \"2000-03-01T00:00:00Z\"\nb2 = \"2000-04-01T00:00:00Z\"\n\n\
         [strategy]\nt1 = 20\nt2 = 120\nvol_window = 60\nvol_lo = 0\nvol_hi = 12\nstop_loss_bp = 30\n\
         take_profit_bp = 300\nmax_hold_bars = 600\n\n[search]\nbudget = 40\nseed = 5\n\n[stress]\nbase_seed = 8\n",
    )
    .unwrap();
    let cfg = config.to_str().unwrap();

    let mut runs = Vec::new();
    for name in ["first", "second"] {
        let out = dir.join(name);
        let o = out.to_str().unwrap();
        for cmd in ["backtest", "optimize", "stress", "walkforward"] {
            let code = run_cli(&[cmd, "--config", cfg, "--out", o]);
            assert!(
                code == ExitCode::SUCCESS || code == ExitCode::from(3),
                "{cmd} failed"
            );
        }
        assert_eq!(
            run_cli(&["report", "--dir", o, "--plots"]),
            ExitCode::SUCCESS
        );
        runs.push(hashes(&out));
    }
    let differing: Vec<&str> = runs[0]
        .iter()
        .zip(&runs[1])
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.0.as_str())
        .collect();
    let ok = runs[0].len() == runs[1].len() && runs[0].len() >= 12 && differing.is_empty();
    let (fast, timing) = within(started, Duration::from_secs(60));
    let detail = format!(
        "{} report files hashed per run, {} differ; {timing}",
        runs[0].len(),
        differing.len()
    );
    report(7, "byte-identical reruns", ok && fast, &detail);
    assert!(ok && fast, "{detail} {differing:?}");
}

#[test]
fn criterion_8_throughput() {
    let series = generate(&SynthSpec::regime_trend(839_000, 5.0, 2.0, 500.0, 8)).unwrap();
    let params = StrategyParams {
        t1: 20,
        t2: 120,
        vol_window: 60,
        vol_lo: 0,
        vol_hi: 12,
        stop_loss_bp: 30,
        take_profit_bp: 300,
        max_hold_bars: 600,
    };
    let started = Instant::now();
    let result = run_backtest(&series, &params, &CostModel::default(), None).unwrap();
    let (fast, timing) = within(started, Duration::from_secs(2));
    let detail = format!(
        "{} bars, {} trades; {timing}",
        series.len(),
        result.trades.len()
    );
    report(8, "839k-bar backtest under 2 s", fast, &detail);
    assert!(fast, "{detail}");
}

#[test]
fn criterion_9_trend_follower_skew() {
    let Some(world) = accepted_world() else {
        report(
            9,
            "positive skew of trade returns",
            false,
            "no accepted positive-control run",
        );
        panic!("no accepted positive-control run");
    };
    let p = world.params;
    let cost = CostModel::default();
    let split = &world.split;
    let returns: Vec<f64> = [&split.in_sample, &split.out_sample, &split.live_sample]
        .into_iter()
        .flat_map(|s| run_backtest(s, &p, &cost, None).unwrap().trades)
        .map(|t| t.net_bp as f64)
        .collect();
    let skew = skewness(&returns);
    let ratio_ok = p.take_profit_bp >= 3 * p.stop_loss_bp;
    let ok = ratio_ok && skew > 0.0;
    let detail = format!(
        "stop {} take {}; {} trades over the accepted run, skewness {skew:.3}",
        p.stop_loss_bp,
        p.take_profit_bp,
        returns.len()
    );
    report(9, "positive skew of trade returns", ok, &detail);
    assert!(ok, "{detail}");
}
