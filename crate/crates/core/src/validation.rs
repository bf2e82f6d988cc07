//! Robustness methodology: execution and data distortions, the stress
//! battery, Sharpe-spread summaries and the three-phase walk-forward gate.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::{run_backtest, BacktestResult, CostModel};
use crate::error::{Error, Result};
use crate::metrics::{sharpe_ratio, MetricsReport, Sharpe};
use crate::rng::derive_seed;
use crate::series::{split_samples, Series};
use crate::strategy::StrategyParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distortion {
    /// Exit any open position with a signal at this bar.
    ForcedExit { bar: usize },
    /// Drop each entry signal with probability `p`.
    SkipTrades { p: f64, seed: u64 },
    /// Fill every order `k` bars later than normal.
    DelayOrders { k: usize },
    /// Move every fill price against the trade.
    AdverseFill { penalty_bp: u32 },
    /// Scale the round-trip fee.
    FeeMultiplier { m: u32 },
    /// Perturb the input series before the run.
    RandomizeSeries { amplitude_bp: u32, seed: u64 },
}

impl Distortion {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Distortion::SkipTrades { p, .. } if !(0.0..=1.0).contains(&p) => {
                Err(Error::BadDistortion("skip probability must lie in [0, 1]"))
            }
            Distortion::FeeMultiplier { m: 0 } => {
                Err(Error::BadDistortion("fee multiplier must be >= 1"))
            }
            _ => Ok(()),
        }
    }

    /// Same distortion with its seed (if any) mixed into `seed`.
    fn reseeded(&self, seed: u64) -> Self {
        match *self {
            Distortion::SkipTrades { p, seed: s } => Distortion::SkipTrades {
                p,
                seed: derive_seed(seed, s),
            },
            Distortion::RandomizeSeries {
                amplitude_bp,
                seed: s,
            } => Distortion::RandomizeSeries {
                amplitude_bp,
                seed: derive_seed(seed, s),
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionSet {
    pub name: String,
    #[serde(default)]
    pub distortions: Vec<Distortion>,
}

impl DistortionSet {
    pub fn identity() -> Self {
        Self::new("identity", Vec::new())
    }

    pub fn new(name: impl Into<String>, distortions: Vec<Distortion>) -> Self {
        Self {
            name: name.into(),
            distortions,
        }
    }

    pub fn single(name: impl Into<String>, d: Distortion) -> Self {
        Self::new(name, vec![d])
    }

    pub fn validate(&self) -> Result<()> {
        self.distortions.iter().try_for_each(Distortion::validate)
    }

    /// Whether the set suppresses every entry, making an empty ledger expected.
    pub fn is_degenerate(&self) -> bool {
        self.distortions
            .iter()
            .any(|d| matches!(d, Distortion::SkipTrades { p, .. } if *p >= 1.0))
    }
}

/// The default battery: identity, forced exits, skipped trades, delays,
/// adverse fills, fee multiples and a randomized-series ensemble. Fifteen
/// entries in all.
pub fn default_suite(series_len: usize, slippage_bp: u32) -> Vec<DistortionSet> {
    let mut suite = vec![DistortionSet::identity()];
    let q = series_len / 4;
    suite.push(DistortionSet::new(
        "forced_exit x3",
        (1..=3)
            .map(|k| Distortion::ForcedExit { bar: k * q })
            .collect(),
    ));
    for p in [0.1, 0.25] {
        suite.push(DistortionSet::single(
            format!("skip_trades p={p}"),
            Distortion::SkipTrades { p, seed: 0 },
        ));
    }
    for k in [1, 2, 5] {
        suite.push(DistortionSet::single(
            format!("delay_orders k={k}"),
            Distortion::DelayOrders { k },
        ));
    }
    suite.push(DistortionSet::single(
        "adverse_fill 1bp",
        Distortion::AdverseFill { penalty_bp: 1 },
    ));
    for m in [2, 3, 4] {
        suite.push(DistortionSet::single(
            format!("fee_multiplier x{m}"),
            Distortion::FeeMultiplier { m },
        ));
    }
    for seed in 0..4 {
        suite.push(DistortionSet::single(
            format!("randomize_series #{seed}"),
            Distortion::RandomizeSeries {
                amplitude_bp: 10 * slippage_bp,
                seed,
            },
        ));
    }
    suite
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressOutcome {
    pub distortion: DistortionSet,
    pub sharpe: Sharpe,
    pub total_net_bp: i64,
    pub n_trades: usize,
}

/// Runs one suite entry; its random streams derive from `(base_seed, index)`.
pub fn run_stress_entry(
    series: &Series,
    params: &StrategyParams,
    cost: &CostModel,
    entry: &DistortionSet,
    index: usize,
    base_seed: u64,
) -> Result<StressOutcome> {
    entry.validate()?;
    let slot = derive_seed(base_seed, index as u64);
    let effective = DistortionSet {
        name: entry.name.clone(),
        distortions: entry.distortions.iter().map(|d| d.reseeded(slot)).collect(),
    };
    let result = run_backtest(series, params, cost, Some(&effective))?;
    Ok(StressOutcome {
        distortion: entry.clone(),
        sharpe: sharpe_ratio(&result)?,
        total_net_bp: result.total_net_bp(),
        n_trades: result.trades.len(),
    })
}

pub fn run_stress_suite(
    series: &Series,
    params: &StrategyParams,
    cost: &CostModel,
    suite: &[DistortionSet],
    base_seed: u64,
) -> Result<Vec<StressOutcome>> {
    if suite.is_empty() {
        return Err(Error::EmptySuite);
    }
    suite.iter().try_for_each(DistortionSet::validate)?;
    suite
        .iter()
        .enumerate()
        .map(|(i, entry)| run_stress_entry(series, params, cost, entry, i, base_seed))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpeSpread {
    pub mean: f64,
    /// Standard deviation about the mean.
    pub rms: f64,
    pub min: f64,
    pub max: f64,
    pub n_defined: usize,
    pub n_undefined: usize,
}

pub fn aggregate_sharpe_spread(outcomes: &[StressOutcome]) -> Result<SharpeSpread> {
    let values: Vec<f64> = outcomes.iter().filter_map(|o| o.sharpe.value()).collect();
    if values.len() < 2 {
        return Err(Error::TooFewDefined(values.len()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(SharpeSpread {
        mean,
        rms: libm::sqrt(var),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        n_defined: values.len(),
        n_undefined: outcomes.len() - values.len(),
    })
}

/// Indices of outcomes with a defined Sharpe below `min_sharpe`, or an
/// undefined Sharpe on a non-degenerate entry.
pub fn pathological(outcomes: &[StressOutcome], min_sharpe: f64) -> Vec<usize> {
    outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| match o.sharpe {
            Sharpe::Value(v) => v < min_sharpe,
            Sharpe::Undefined => !o.distortion.is_degenerate(),
        })
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressGate {
    /// Suite run on the in-sample; `None` selects [`default_suite`].
    #[serde(default)]
    pub suite: Option<Vec<DistortionSet>>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_pathological_sharpe")]
    pub min_sharpe: f64,
}

fn default_pathological_sharpe() -> f64 {
    -1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Gates {
    pub min_out_sharpe: f64,
    pub min_out_trades: usize,
    pub min_live_sharpe: f64,
    pub min_live_trades: usize,
    pub stress: Option<StressGate>,
}

impl Default for Gates {
    fn default() -> Self {
        Self {
            min_out_sharpe: 0.0,
            min_out_trades: 30,
            min_live_sharpe: 0.0,
            min_live_trades: 0,
            stress: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    RejectedAtOut,
    RejectedAtLive,
    RejectedAtStress,
}

impl Verdict {
    pub fn is_accepted(self) -> bool {
        self == Verdict::Accepted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub metrics: MetricsReport,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkForwardReport {
    pub in_sample: PhaseReport,
    pub stress: Option<Vec<StressOutcome>>,
    pub out_sample: Option<PhaseReport>,
    pub live_sample: Option<PhaseReport>,
    pub verdict: Verdict,
}

fn clears(sharpe: Sharpe, min_sharpe: f64, n_trades: usize, min_trades: usize) -> bool {
    matches!(sharpe, Sharpe::Value(v) if v > min_sharpe) && n_trades >= min_trades
}

fn phase(series: &Series, params: &StrategyParams, cost: &CostModel) -> Result<MetricsReport> {
    let result: BacktestResult = run_backtest(series, params, cost, None)?;
    MetricsReport::from_result(&result)
}

/// Runs frozen parameters over in, out and live samples in order. A failed
/// stress or out-sample gate stops the pipeline before later phases run.
pub fn walk_forward(
    series: &Series,
    boundaries: (i64, i64),
    params: &StrategyParams,
    cost: &CostModel,
    gates: &Gates,
) -> Result<WalkForwardReport> {
    let split = split_samples(series, boundaries.0, boundaries.1)?;
    let in_metrics = phase(&split.in_sample, params, cost)?;
    let mut report = WalkForwardReport {
        in_sample: PhaseReport {
            passed: matches!(in_metrics.sharpe, Sharpe::Value(v) if v > 0.0),
            metrics: in_metrics,
        },
        stress: None,
        out_sample: None,
        live_sample: None,
        verdict: Verdict::RejectedAtOut,
    };

    if let Some(gate) = &gates.stress {
        let suite = gate
            .suite
            .clone()
            .unwrap_or_else(|| default_suite(split.in_sample.len(), cost.slippage_bp));
        let outcomes = run_stress_suite(&split.in_sample, params, cost, &suite, gate.base_seed)?;
        let bad = !pathological(&outcomes, gate.min_sharpe).is_empty();
        report.stress = Some(outcomes);
        if bad {
            report.verdict = Verdict::RejectedAtStress;
            return Ok(report);
        }
    }

    let out = phase(&split.out_sample, params, cost)?;
    let out_ok = clears(
        out.sharpe,
        gates.min_out_sharpe,
        out.n_trades,
        gates.min_out_trades,
    );
    report.out_sample = Some(PhaseReport {
        metrics: out,
        passed: out_ok,
    });
    if !out_ok {
        report.verdict = Verdict::RejectedAtOut;
        return Ok(report);
    }

    let live = phase(&split.live_sample, params, cost)?;
    let live_ok = clears(
        live.sharpe,
        gates.min_live_sharpe,
        live.n_trades,
        gates.min_live_trades,
    );
    report.live_sample = Some(PhaseReport {
        metrics: live,
        passed: live_ok,
    });
    report.verdict = if live_ok {
        Verdict::Accepted
    } else {
        Verdict::RejectedAtLive
    };
    Ok(report)
}
