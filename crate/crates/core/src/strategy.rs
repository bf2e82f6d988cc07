//! Volatility-gated dual moving-average trend follower.
//!
//! Eight integer parameters drive a flat/long/short state machine: a fast
//! over slow crossing opens a position in the crossing direction when the
//! rolling volatility lies inside `[vol_lo, vol_hi]`; an open position exits
//! on a stop loss, a take profit, or after `max_hold_bars`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{self, Direction, Lagged, MaPair};
use crate::series::Series;

/// `vol_hi` value meaning "no upper gate".
pub const VOL_UNBOUNDED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyParams {
    pub t1: u32,
    pub t2: u32,
    pub vol_window: u32,
    pub vol_lo: u32,
    pub vol_hi: u32,
    pub stop_loss_bp: u32,
    pub take_profit_bp: u32,
    pub max_hold_bars: u32,
}

impl StrategyParams {
    pub const COUNT: usize = 8;

    pub fn validate(&self) -> Result<()> {
        if self.t1 < 1 || self.t1 >= self.t2 {
            return Err(Error::BadParams("need 1 <= t1 < t2"));
        }
        if self.vol_window < 2 {
            return Err(Error::BadParams("need vol_window >= 2"));
        }
        if self.vol_lo >= self.vol_hi {
            return Err(Error::BadParams("need vol_lo < vol_hi"));
        }
        if self.stop_loss_bp < 1 || self.take_profit_bp < 1 || self.max_hold_bars < 1 {
            return Err(Error::BadParams(
                "stop_loss_bp, take_profit_bp and max_hold_bars must be >= 1",
            ));
        }
        Ok(())
    }

    /// First bar at which every indicator is defined.
    pub fn warmup(&self) -> usize {
        self.t2.max(self.vol_window) as usize
    }

    pub fn to_array(&self) -> [u32; Self::COUNT] {
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

    pub fn from_array(v: [u32; Self::COUNT]) -> Self {
        Self {
            t1: v[0],
            t2: v[1],
            vol_window: v[2],
            vol_lo: v[3],
            vol_hi: v[4],
            stop_loss_bp: v[5],
            take_profit_bp: v[6],
            max_hold_bars: v[7],
        }
    }

    fn gate_admits(&self, vol: f64) -> bool {
        let hi = if self.vol_hi == VOL_UNBOUNDED {
            f64::INFINITY
        } else {
            f64::from(self.vol_hi)
        };
        f64::from(self.vol_lo) <= vol && vol <= hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Long,
    Short,
}

impl Side {
    /// +1 for long, -1 for short.
    pub fn sign(self) -> i64 {
        match self {
            Side::Long => 1,
            Side::Short => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PositionState {
    #[default]
    Flat,
    Open {
        side: Side,
        entry_index: usize,
        entry_price_bp: i64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    None,
    EnterLong,
    EnterShort,
    Exit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Crossover,
    StopLoss,
    TakeProfit,
    MaxHold,
    GateBlocked,
    Forced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signal {
    pub action: Action,
    pub reason: Option<Reason>,
}

impl Signal {
    pub const NONE: Signal = Signal {
        action: Action::None,
        reason: None,
    };

    pub fn new(action: Action, reason: Reason) -> Self {
        Self {
            action,
            reason: Some(reason),
        }
    }

    /// Entries only from flat, exits only from an open position.
    pub fn compatible_with(&self, state: &PositionState) -> bool {
        match (self.action, state) {
            (Action::EnterLong | Action::EnterShort, PositionState::Flat) => true,
            (Action::EnterLong | Action::EnterShort, _) => false,
            (Action::Exit, PositionState::Flat) => false,
            _ => true,
        }
    }
}

/// Indicators precomputed for one (series, params) pair.
#[derive(Debug, Clone)]
pub struct Strategy<'a> {
    series: &'a Series,
    params: StrategyParams,
    crossings: Vec<Option<Direction>>,
    volatility: Lagged,
}

impl<'a> Strategy<'a> {
    pub fn new(series: &'a Series, params: StrategyParams) -> Result<Self> {
        params.validate()?;
        let needed = params.warmup() + 1;
        if series.len() < needed {
            return Err(Error::SeriesTooShort {
                needed,
                len: series.len(),
            });
        }
        let pair = MaPair::new(params.t1 as usize, params.t2 as usize)?;
        let mut crossings = vec![None; series.len()];
        for ev in indicators::detect_crossings(series, pair)? {
            crossings[ev.index] = Some(ev.direction);
        }
        let volatility = indicators::rolling_volatility(series, params.vol_window as usize)?;
        Ok(Self {
            series,
            params,
            crossings,
            volatility,
        })
    }

    pub fn params(&self) -> &StrategyParams {
        &self.params
    }

    pub fn warmup(&self) -> usize {
        self.params.warmup()
    }

    pub fn crossing_at(&self, index: usize) -> Option<Direction> {
        self.crossings.get(index).copied().flatten()
    }

    /// Exit rules are checked before entry rules.
    pub fn on_bar(&self, state: &PositionState, index: usize) -> Result<Signal> {
        if index < self.warmup() || index >= self.series.len() {
            return Err(Error::IndicatorUndefined { index });
        }
        let p = &self.params;
        match *state {
            PositionState::Open {
                side,
                entry_index,
                entry_price_bp,
            } => {
                let unrealized = side.sign() * (self.series.close(index) - entry_price_bp);
                if unrealized <= -i64::from(p.stop_loss_bp) {
                    Ok(Signal::new(Action::Exit, Reason::StopLoss))
                } else if unrealized >= i64::from(p.take_profit_bp) {
                    Ok(Signal::new(Action::Exit, Reason::TakeProfit))
                } else if index.saturating_sub(entry_index) >= p.max_hold_bars as usize {
                    Ok(Signal::new(Action::Exit, Reason::MaxHold))
                } else {
                    Ok(Signal::NONE)
                }
            }
            PositionState::Flat => {
                let Some(direction) = self.crossing_at(index) else {
                    return Ok(Signal::NONE);
                };
                let vol = self
                    .volatility
                    .get(index)
                    .ok_or(Error::IndicatorUndefined { index })?;
                if !p.gate_admits(vol) {
                    return Ok(Signal {
                        action: Action::None,
                        reason: Some(Reason::GateBlocked),
                    });
                }
                let action = match direction {
                    Direction::Up => Action::EnterLong,
                    Direction::Down => Action::EnterShort,
                };
                Ok(Signal::new(action, Reason::Crossover))
            }
        }
    }
}
