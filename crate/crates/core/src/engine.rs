//! Event-driven backtest loop.
//!
//! Bars are visited in order. A signal raised on bar `i` fills at the close
//! of bar `i + 1` (plus any configured delay). Each closed trade is charged a
//! flat round trip of `2 * slippage_bp * fee_multiplier` and equity is
//! recognized when a trade closes. All money arithmetic is integer bp.

use alloc::borrow::Cow;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::series::{self, Series};
use crate::strategy::{Action, PositionState, Reason, Side, Signal, Strategy, StrategyParams};
use crate::validation::{Distortion, DistortionSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub slippage_bp: u32,
    pub fee_multiplier: u32,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            slippage_bp: 1,
            fee_multiplier: 1,
        }
    }
}

impl CostModel {
    pub fn new(slippage_bp: u32, fee_multiplier: u32) -> Self {
        Self {
            slippage_bp,
            fee_multiplier,
        }
    }

    pub fn round_trip_bp(&self) -> i64 {
        2 * i64::from(self.slippage_bp) * i64::from(self.fee_multiplier)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trade {
    pub direction: Side,
    pub entry_index: usize,
    pub exit_index: usize,
    pub entry_price_bp: i64,
    pub exit_price_bp: i64,
    pub gross_bp: i64,
    pub net_bp: i64,
    pub duration_bars: usize,
    pub exit_reason: Reason,
}

impl Trade {
    /// Books a round trip, deriving gross, net and duration.
    pub fn close(
        direction: Side,
        entry_index: usize,
        entry_price_bp: i64,
        exit_index: usize,
        exit_price_bp: i64,
        exit_reason: Reason,
        cost: &CostModel,
    ) -> Self {
        let gross_bp = direction.sign() * (exit_price_bp - entry_price_bp);
        Self {
            direction,
            entry_index,
            exit_index,
            entry_price_bp,
            exit_price_bp,
            gross_bp,
            net_bp: gross_bp - cost.round_trip_bp(),
            duration_bars: exit_index - entry_index,
            exit_reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub trades: Vec<Trade>,
    /// Cumulative realized net P&L at each bar, starting at 0.
    pub equity_bp: Vec<i64>,
    /// Bar timestamps aligned with `equity_bp`.
    pub timestamps: Vec<i64>,
    pub params: StrategyParams,
    pub cost: CostModel,
}

impl BacktestResult {
    pub fn total_net_bp(&self) -> i64 {
        self.trades.iter().map(|t| t.net_bp).sum()
    }

    pub fn total_gross_bp(&self) -> i64 {
        self.trades.iter().map(|t| t.gross_bp).sum()
    }
}

/// Closes whatever is open at the final bar at its close, reason `Forced`.
pub fn force_close(
    state: &PositionState,
    final_index: usize,
    final_close_bp: i64,
    cost: &CostModel,
) -> Option<Trade> {
    match *state {
        PositionState::Flat => None,
        PositionState::Open {
            side,
            entry_index,
            entry_price_bp,
        } => Some(Trade::close(
            side,
            entry_index,
            entry_price_bp,
            final_index,
            final_close_bp,
            Reason::Forced,
            cost,
        )),
    }
}

#[derive(Debug, Clone, Copy)]
enum Order {
    Enter(Side),
    Exit(Reason),
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    order: Order,
    fill_index: usize,
}

/// Execution-side distortions folded into one plan.
struct Plan {
    delay: usize,
    penalty_bp: i64,
    fee_factor: u32,
    forced_exits: Vec<usize>,
    skips: Vec<(f64, rng::Stream)>,
}

impl Plan {
    fn build(set: Option<&DistortionSet>) -> Result<Self> {
        let mut plan = Plan {
            delay: 0,
            penalty_bp: 0,
            fee_factor: 1,
            forced_exits: Vec::new(),
            skips: Vec::new(),
        };
        let Some(set) = set else {
            return Ok(plan);
        };
        set.validate()?;
        for d in &set.distortions {
            match *d {
                Distortion::ForcedExit { bar } => plan.forced_exits.push(bar),
                Distortion::SkipTrades { p, seed } => plan.skips.push((p, rng::stream(seed))),
                Distortion::DelayOrders { k } => plan.delay += k,
                Distortion::AdverseFill { penalty_bp } => plan.penalty_bp += i64::from(penalty_bp),
                Distortion::FeeMultiplier { m } => plan.fee_factor *= m,
                Distortion::RandomizeSeries { .. } => {}
            }
        }
        plan.forced_exits.sort_unstable();
        Ok(plan)
    }

    /// Every skip stream draws once per entry signal, in order.
    fn suppress_entry(&mut self) -> bool {
        let mut suppressed = false;
        for (p, stream) in &mut self.skips {
            suppressed |= stream.random::<f64>() < *p;
        }
        suppressed
    }
}

fn distorted_series<'a>(series: &'a Series, set: Option<&DistortionSet>) -> Cow<'a, Series> {
    let mut out = Cow::Borrowed(series);
    for d in set.into_iter().flat_map(|s| s.distortions.iter()) {
        if let Distortion::RandomizeSeries { amplitude_bp, seed } = *d {
            out = Cow::Owned(series::randomize(&out, amplitude_bp, seed));
        }
    }
    out
}

#[allow(clippy::needless_range_loop)]
pub fn run_backtest(
    series: &Series,
    params: &StrategyParams,
    cost: &CostModel,
    distortions: Option<&DistortionSet>,
) -> Result<BacktestResult> {
    if cost.slippage_bp < 1 || cost.fee_multiplier < 1 {
        return Err(Error::BadSlippage);
    }
    let mut plan = Plan::build(distortions)?;
    let series = distorted_series(series, distortions);
    let series = series.as_ref();
    let strategy = Strategy::new(series, *params)?;
    let charged = CostModel {
        fee_multiplier: cost.fee_multiplier * plan.fee_factor,
        ..*cost
    };

    let n = series.len();
    let last = n - 1;
    let mut equity = vec![0i64; n];
    let mut trades = Vec::new();
    let mut running = 0i64;
    let mut state = PositionState::Flat;
    let mut pending: Option<Pending> = None;
    let mut forced = plan.forced_exits.clone().into_iter().peekable();

    for i in strategy.warmup()..n {
        if let Some(p) = pending.filter(|p| p.fill_index == i) {
            pending = None;
            let close = series.close(i);
            match (p.order, state) {
                (Order::Enter(side), PositionState::Flat) => {
                    // stops and targets track the market fill; the
                    // adverse penalty only touches booked prices
                    state = PositionState::Open {
                        side,
                        entry_index: i,
                        entry_price_bp: close,
                    };
                }
                (
                    Order::Exit(reason),
                    PositionState::Open {
                        side,
                        entry_index,
                        entry_price_bp,
                    },
                ) => {
                    let trade = Trade::close(
                        side,
                        entry_index,
                        entry_price_bp + side.sign() * plan.penalty_bp,
                        i,
                        close - side.sign() * plan.penalty_bp,
                        reason,
                        &charged,
                    );
                    running += trade.net_bp;
                    trades.push(trade);
                    state = PositionState::Flat;
                }
                _ => unreachable!("orders are only queued from a compatible state"),
            }
        }

        while forced.next_if(|&b| b < i).is_some() {}
        let forced_here = forced.next_if_eq(&i).is_some();

        if pending.is_none() {
            if i == last {
                if let PositionState::Open {
                    side,
                    entry_index,
                    entry_price_bp,
                } = state
                {
                    let trade = Trade::close(
                        side,
                        entry_index,
                        entry_price_bp + side.sign() * plan.penalty_bp,
                        i,
                        series.close(i) - side.sign() * plan.penalty_bp,
                        Reason::Forced,
                        &charged,
                    );
                    running += trade.net_bp;
                    trades.push(trade);
                    state = PositionState::Flat;
                }
            } else {
                let signal = if forced_here && state != PositionState::Flat {
                    Signal::new(Action::Exit, Reason::Forced)
                } else {
                    strategy.on_bar(&state, i)?
                };
                debug_assert!(signal.compatible_with(&state));
                let fill_index = i + 1 + plan.delay;
                match signal.action {
                    Action::EnterLong | Action::EnterShort => {
                        let side = if signal.action == Action::EnterLong {
                            Side::Long
                        } else {
                            Side::Short
                        };
                        // an entry needs at least one bar after its fill
                        if !plan.suppress_entry() && fill_index < last {
                            pending = Some(Pending {
                                order: Order::Enter(side),
                                fill_index,
                            });
                        }
                    }
                    Action::Exit => {
                        pending = Some(Pending {
                            order: Order::Exit(signal.reason.unwrap_or(Reason::Forced)),
                            fill_index: fill_index.min(last),
                        });
                    }
                    Action::None => {}
                }
            }
        }
        equity[i] = running;
    }

    Ok(BacktestResult {
        trades,
        equity_bp: equity,
        timestamps: series.bars().iter().map(|b| b.ts).collect(),
        params: *params,
        cost: charged,
    })
}
