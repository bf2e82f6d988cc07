//! In-sample parameter search maximizing the Sharpe ratio.
//!
//! A seeded random search draws `budget` points from the integer grid of a
//! [`SearchSpace`]; coordinate descent then walks the incumbent one grid
//! step at a time along each of the eight coordinates until a full sweep
//! brings no strict improvement. Points are evaluated at most once.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{run_backtest, CostModel};
use crate::error::{Error, Result};
use crate::metrics::{sharpe_ratio, Sharpe};
use crate::rng;
use crate::series::Series;
use crate::strategy::StrategyParams;

/// Inclusive grid `lo, lo + step, ...` not exceeding `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRange {
    pub lo: u32,
    pub hi: u32,
    #[serde(default = "unit_step")]
    pub step: u32,
}

fn unit_step() -> u32 {
    1
}

impl ParamRange {
    pub const fn new(lo: u32, hi: u32, step: u32) -> Self {
        Self { lo, hi, step }
    }

    pub const fn fixed(v: u32) -> Self {
        Self::new(v, v, 1)
    }

    pub fn len(&self) -> u32 {
        (self.hi - self.lo) / self.step + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, k: u32) -> u32 {
        self.lo + k * self.step
    }

    pub fn max_value(&self) -> u32 {
        self.value(self.len() - 1)
    }

    /// Grid index of `v`, if `v` lies on the grid.
    pub fn index_of(&self, v: u32) -> Option<u32> {
        (v >= self.lo && v <= self.hi && (v - self.lo).is_multiple_of(self.step))
            .then(|| (v - self.lo) / self.step)
    }

    pub fn contains(&self, v: u32) -> bool {
        self.index_of(v).is_some()
    }

    fn valid(&self) -> bool {
        self.step >= 1 && self.lo <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub t1: ParamRange,
    pub t2: ParamRange,
    pub vol_window: ParamRange,
    pub vol_lo: ParamRange,
    pub vol_hi: ParamRange,
    pub stop_loss_bp: ParamRange,
    pub take_profit_bp: ParamRange,
    pub max_hold_bars: ParamRange,
}

impl Default for SearchSpace {
    /// A grid sized for 5-minute bars with a few bp of per-bar noise. Every
    /// take-profit is at least three times every stop-loss.
    fn default() -> Self {
        Self {
            t1: ParamRange::new(5, 50, 5),
            t2: ParamRange::new(20, 300, 20),
            vol_window: ParamRange::new(20, 200, 20),
            vol_lo: ParamRange::new(0, 4, 1),
            vol_hi: ParamRange::new(6, 16, 2),
            stop_loss_bp: ParamRange::new(10, 40, 5),
            take_profit_bp: ParamRange::new(120, 400, 20),
            max_hold_bars: ParamRange::new(50, 1000, 50),
        }
    }
}

impl SearchSpace {
    /// Fixes every coordinate at the given parameters.
    pub fn point(p: &StrategyParams) -> Self {
        let a = p.to_array().map(ParamRange::fixed);
        Self::from_ranges(a)
    }

    pub fn ranges(&self) -> [ParamRange; StrategyParams::COUNT] {
        [
            self.t1,
            self.t2,
            self.vol_window,
            self.vol_lo,
            self.vol_hi,
            self.stop_loss_bp,
            self.take_profit_bp,
            self.max_hold_bars,
        ]
    }

    pub fn from_ranges(r: [ParamRange; StrategyParams::COUNT]) -> Self {
        Self {
            t1: r[0],
            t2: r[1],
            vol_window: r[2],
            vol_lo: r[3],
            vol_hi: r[4],
            stop_loss_bp: r[5],
            take_profit_bp: r[6],
            max_hold_bars: r[7],
        }
    }

    pub fn contains(&self, p: &StrategyParams) -> bool {
        self.ranges()
            .iter()
            .zip(p.to_array())
            .all(|(r, v)| r.contains(v))
    }

    /// Checks that the grid holds at least one valid parameter set, so
    /// rejection sampling terminates.
    pub fn validate(&self) -> Result<()> {
        let r = self.ranges();
        if !r.iter().all(ParamRange::valid) {
            return Err(Error::EmptySpace);
        }
        // smallest t1 that is >= 1
        let t1 = (0..self.t1.len())
            .map(|k| self.t1.value(k))
            .find(|&v| v >= 1)
            .ok_or(Error::EmptySpace)?;
        let feasible = t1 < self.t2.max_value()
            && self.vol_window.max_value() >= 2
            && self.vol_lo.lo < self.vol_hi.max_value()
            && self.stop_loss_bp.max_value() >= 1
            && self.take_profit_bp.max_value() >= 1
            && self.max_hold_bars.max_value() >= 1;
        if feasible {
            Ok(())
        } else {
            Err(Error::EmptySpace)
        }
    }

    fn sample(&self, rng: &mut rng::Stream) -> StrategyParams {
        loop {
            let v = self.ranges().map(|r| r.value(rng.random_range(0..r.len())));
            let p = StrategyParams::from_array(v);
            if p.validate().is_ok() {
                return p;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub params: StrategyParams,
    pub sharpe: Sharpe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_params: StrategyParams,
    pub best_sharpe: Sharpe,
    pub evaluations: usize,
    /// Distinct evaluations in schedule order.
    pub trace: Vec<Evaluation>,
}

/// In-sample Sharpe of one parameter set. Sets whose windows do not fit
/// the series score as `Undefined`.
pub fn objective(series: &Series, params: &StrategyParams, cost: &CostModel) -> Result<Sharpe> {
    match run_backtest(series, params, cost, None) {
        Ok(result) => sharpe_ratio(&result),
        Err(Error::SeriesTooShort { .. }) => Ok(Sharpe::Undefined),
        Err(e) => Err(e),
    }
}

struct Search<'a> {
    series: &'a Series,
    cost: &'a CostModel,
    seen: BTreeMap<StrategyParams, usize>,
    trace: Vec<Evaluation>,
    best: Option<usize>,
}

impl<'a> Search<'a> {
    fn new(series: &'a Series, cost: &'a CostModel) -> Self {
        Self {
            series,
            cost,
            seen: BTreeMap::new(),
            trace: Vec::new(),
            best: None,
        }
    }

    fn eval(&mut self, params: StrategyParams) -> Result<Sharpe> {
        if let Some(&i) = self.seen.get(&params) {
            return Ok(self.trace[i].sharpe);
        }
        let sharpe = objective(self.series, &params, self.cost)?;
        self.record(params, sharpe);
        Ok(sharpe)
    }

    fn record(&mut self, params: StrategyParams, sharpe: Sharpe) {
        let idx = self.trace.len();
        self.trace.push(Evaluation { params, sharpe });
        self.seen.insert(params, idx);
        let better = match self.best {
            None => true,
            Some(b) => sharpe.rank() > self.trace[b].sharpe.rank(),
        };
        if better {
            self.best = Some(idx);
        }
    }

    fn incumbent(&self) -> Evaluation {
        self.trace[self.best.expect("at least one evaluation")]
    }

    fn refine(&mut self, space: &SearchSpace) -> Result<()> {
        let ranges = space.ranges();
        loop {
            let mut improved = false;
            for (c, range) in ranges.iter().enumerate() {
                let current = self.incumbent();
                let values = current.params.to_array();
                let Some(k) = range.index_of(values[c]) else {
                    continue;
                };
                let mut candidate: Option<Evaluation> = None;
                for nk in [k.checked_sub(1), Some(k + 1)].into_iter().flatten() {
                    if nk >= range.len() {
                        continue;
                    }
                    let mut v = values;
                    v[c] = range.value(nk);
                    let p = StrategyParams::from_array(v);
                    if p.validate().is_err() {
                        continue;
                    }
                    let sharpe = self.eval(p)?;
                    if candidate.is_none_or(|best| sharpe.rank() > best.sharpe.rank()) {
                        candidate = Some(Evaluation { params: p, sharpe });
                    }
                }
                if let Some(cand) = candidate {
                    if cand.sharpe.rank() > current.sharpe.rank() {
                        self.best = self.seen.get(&cand.params).copied();
                        improved = true;
                    }
                }
            }
            if !improved {
                return Ok(());
            }
        }
    }

    fn finish(self) -> OptimizationResult {
        let best = self.incumbent();
        OptimizationResult {
            best_params: best.params,
            best_sharpe: best.sharpe,
            evaluations: self.trace.len(),
            trace: self.trace,
        }
    }
}

fn check(space: &SearchSpace, budget: usize) -> Result<()> {
    if budget == 0 {
        return Err(Error::ZeroBudget);
    }
    space.validate()
}

/// Scores a batch of independent parameter sets, returning results in input
/// order. Implementations may evaluate concurrently.
pub trait Evaluator {
    fn evaluate(
        &self,
        series: &Series,
        cost: &CostModel,
        points: &[StrategyParams],
    ) -> Vec<Result<Sharpe>>;
}

/// Evaluates one point after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Evaluator for Sequential {
    fn evaluate(
        &self,
        series: &Series,
        cost: &CostModel,
        points: &[StrategyParams],
    ) -> Vec<Result<Sharpe>> {
        points.iter().map(|p| objective(series, p, cost)).collect()
    }
}

fn random_phase<'a>(
    in_sample: &'a Series,
    space: &SearchSpace,
    budget: usize,
    seed: u64,
    cost: &'a CostModel,
    evaluator: &dyn Evaluator,
) -> Result<Search<'a>> {
    check(space, budget)?;
    let mut rng = rng::stream(seed);
    let mut distinct = BTreeMap::new();
    let mut schedule = Vec::new();
    for _ in 0..budget {
        let p = space.sample(&mut rng);
        if distinct.insert(p, ()).is_none() {
            schedule.push(p);
        }
    }
    let scores = evaluator.evaluate(in_sample, cost, &schedule);
    debug_assert_eq!(scores.len(), schedule.len());
    let mut search = Search::new(in_sample, cost);
    for (p, sharpe) in schedule.into_iter().zip(scores) {
        search.record(p, sharpe?);
    }
    Ok(search)
}

/// The random-search phase alone.
pub fn random_search(
    in_sample: &Series,
    space: &SearchSpace,
    budget: usize,
    seed: u64,
    cost: &CostModel,
) -> Result<OptimizationResult> {
    random_search_with(in_sample, space, budget, seed, cost, &Sequential)
}

pub fn random_search_with(
    in_sample: &Series,
    space: &SearchSpace,
    budget: usize,
    seed: u64,
    cost: &CostModel,
    evaluator: &dyn Evaluator,
) -> Result<OptimizationResult> {
    Ok(random_phase(in_sample, space, budget, seed, cost, evaluator)?.finish())
}

/// Random search followed by coordinate-descent refinement.
pub fn optimize(
    in_sample: &Series,
    space: &SearchSpace,
    budget: usize,
    seed: u64,
    cost: &CostModel,
) -> Result<OptimizationResult> {
    optimize_with(in_sample, space, budget, seed, cost, &Sequential)
}

/// [`optimize`] with the random-search batch scored by `evaluator`;
/// refinement stays sequential. The result does not depend on the evaluator.
pub fn optimize_with(
    in_sample: &Series,
    space: &SearchSpace,
    budget: usize,
    seed: u64,
    cost: &CostModel,
    evaluator: &dyn Evaluator,
) -> Result<OptimizationResult> {
    let mut search = random_phase(in_sample, space, budget, seed, cost, evaluator)?;
    search.refine(space)?;
    Ok(search.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_grid() {
        let r = ParamRange::new(10, 35, 10);
        assert_eq!(r.len(), 3);
        assert_eq!(r.max_value(), 30);
        assert_eq!(r.index_of(20), Some(1));
        assert_eq!(r.index_of(25), None);
        assert_eq!(r.index_of(40), None);
    }

    #[test]
    fn infeasible_spaces() {
        let mut r = [ParamRange::fixed(5); 8];
        // t1 == t2
        assert_eq!(
            SearchSpace::from_ranges(r).validate(),
            Err(Error::EmptySpace)
        );
        r[1] = ParamRange::fixed(9);
        r[4] = ParamRange::fixed(9);
        assert!(SearchSpace::from_ranges(r).validate().is_ok());
        r[2] = ParamRange::fixed(1);
        assert_eq!(
            SearchSpace::from_ranges(r).validate(),
            Err(Error::EmptySpace)
        );
        r[2] = ParamRange::new(3, 2, 1);
        assert_eq!(
            SearchSpace::from_ranges(r).validate(),
            Err(Error::EmptySpace)
        );
    }
}
