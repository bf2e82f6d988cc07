//! A 40-bar fixture traced by an independent naive simulator.

use trendgate_core::engine::{run_backtest, CostModel};
use trendgate_core::series::{Bar, Series};
use trendgate_core::strategy::{Reason, Side, StrategyParams, VOL_UNBOUNDED};

fn fixture_closes() -> Vec<i64> {
    let mut c = Vec::new();
    c.extend((0..10).map(|i| 1020 - 2 * i));
    c.extend((10..20).map(|i| 1002 + 6 * (i - 9)));
    c.extend((20..30).map(|i| 1062 - 6 * (i - 19)));
    c.extend((30..40).map(|i| 1002 + 3 * (i - 29)));
    c
}

fn params() -> StrategyParams {
    StrategyParams {
        t1: 2,
        t2: 3,
        vol_window: 2,
        vol_lo: 0,
        vol_hi: VOL_UNBOUNDED,
        stop_loss_bp: 1000,
        take_profit_bp: 1000,
        max_hold_bars: 5,
    }
}

type Row = (Side, usize, usize, i64, i64, i64, i64, Reason);

/// Float moving averages, one bar at a time, no shared code with the engine.
fn oracle(closes: &[i64], t1: usize, t2: usize, max_hold: usize, slip: i64) -> Vec<Row> {
    let n = closes.len();
    let avg = |i: usize, t: usize| closes[i + 1 - t..=i].iter().sum::<i64>() as f64 / t as f64;
    let mut cross = vec![0i32; n];
    let mut last = 0i32;
    for (i, slot) in cross.iter_mut().enumerate().skip(t2 - 1) {
        let d = avg(i, t1) - avg(i, t2);
        let s = if d > 1e-9 {
            1
        } else if d < -1e-9 {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                *slot = s;
            }
            last = s;
        }
    }
    let mut rows = Vec::new();
    let mut open: Option<(Side, usize, i64)> = None;
    let mut pending: Option<(usize, Option<Side>, Reason)> = None;
    for i in t2.max(2)..n {
        if let Some((at, what, reason)) = pending {
            if at == i {
                pending = None;
                match what {
                    Some(side) => open = Some((side, i, closes[i])),
                    None => {
                        let (side, ei, ep) = open.take().unwrap();
                        let sign = if side == Side::Long { 1 } else { -1 };
                        let gross = sign * (closes[i] - ep);
                        rows.push((side, ei, i, ep, closes[i], gross, gross - 2 * slip, reason));
                    }
                }
            }
        }
        if pending.is_some() {
            continue;
        }
        if i == n - 1 {
            if let Some((side, ei, ep)) = open.take() {
                let sign = if side == Side::Long { 1 } else { -1 };
                let gross = sign * (closes[i] - ep);
                rows.push((
                    side,
                    ei,
                    i,
                    ep,
                    closes[i],
                    gross,
                    gross - 2 * slip,
                    Reason::Forced,
                ));
            }
            continue;
        }
        match open {
            Some((_, ei, _)) => {
                if i - ei >= max_hold {
                    pending = Some((i + 1, None, Reason::MaxHold));
                }
            }
            None => {
                if cross[i] != 0 && i + 1 < n - 1 {
                    let side = if cross[i] > 0 {
                        Side::Long
                    } else {
                        Side::Short
                    };
                    pending = Some((i + 1, Some(side), Reason::Crossover));
                }
            }
        }
    }
    rows
}

// frozen from `oracle` on the fixture
const EXPECTED: [Row; 3] = [
    (Side::Long, 11, 17, 1014, 1050, 36, 34, Reason::MaxHold),
    (Side::Short, 22, 28, 1044, 1008, 36, 34, Reason::MaxHold),
    (Side::Long, 32, 38, 1011, 1029, 18, 16, Reason::MaxHold),
];

fn series() -> Series {
    let bars = fixture_closes()
        .into_iter()
        .enumerate()
        .map(|(i, c)| Bar::new(i as i64 * 300, c))
        .collect();
    Series::new(bars, 0.0001, 1).unwrap()
}

fn rows_of(result: &trendgate_core::BacktestResult) -> Vec<Row> {
    result
        .trades
        .iter()
        .map(|t| {
            (
                t.direction,
                t.entry_index,
                t.exit_index,
                t.entry_price_bp,
                t.exit_price_bp,
                t.gross_bp,
                t.net_bp,
                t.exit_reason,
            )
        })
        .collect()
}

#[test]
fn oracle_reproduces_frozen_ledger() {
    assert_eq!(oracle(&fixture_closes(), 2, 3, 5, 1), EXPECTED.to_vec());
}

#[test]
fn engine_matches_hand_trace() {
    let result = run_backtest(&series(), &params(), &CostModel::default(), None).unwrap();
    assert_eq!(rows_of(&result), EXPECTED.to_vec());
    assert_eq!(*result.equity_bp.last().unwrap(), 34 + 34 + 16);
    assert_eq!(result.equity_bp[16], 0);
    assert_eq!(result.equity_bp[17], 34);
    assert_eq!(result.equity_bp[28], 68);
}

#[test]
fn never_triggering_series_has_no_trades() {
    let bars = (0..200).map(|i| Bar::new(i * 300, 13_802)).collect();
    let s = Series::new(bars, 0.0001, 1).unwrap();
    let r = run_backtest(&s, &params(), &CostModel::default(), None).unwrap();
    assert!(r.trades.is_empty());
    assert!(r.equity_bp.iter().all(|&e| e == 0));
}
