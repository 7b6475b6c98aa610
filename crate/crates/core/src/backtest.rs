//! Long-only portfolio simulation over daily bars.
//!
//! Protocol: a signal dated `t` executes at the open of bar `t + 1`, with a
//! one-way proportional cost folded into the fill price (buys pay
//! `open · (1 + cost_bps/10^4)`, sells receive `open · (1 - cost_bps/10^4)`).
//! Buys invest all available cash in whole shares; sells liquidate the whole
//! position. Buys while long and sells while flat are ignored, a signal on
//! the window's last bar is dropped (no next open), and equity is marked to
//! close every day.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::OhlcvSeries;
use crate::signals::{Side, TradeSignal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub initial_capital: f64,
    /// One-way transaction cost in basis points of the fill price.
    pub cost_bps: f64,
    /// Share lot size; fills are floored to a multiple of this.
    pub min_unit: u64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            initial_capital: 100_000.0,
            cost_bps: 4.0,
            min_unit: 1,
        }
    }
}

/// A completed round trip. `pnl` is `shares · (exit_price - entry_price)`,
/// with both prices already cost-adjusted — exactly what hit the cash
/// account.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub entry_date: NaiveDate,
    pub exit_date: NaiveDate,
    pub shares: u64,
    pub entry_price: f64,
    pub exit_price: f64,
    pub pnl: f64,
}

/// A position still open when the window ended. It is marked to market in
/// the equity curve but produces no [`Trade`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenPosition {
    pub entry_date: NaiveDate,
    pub shares: u64,
    pub entry_price: f64,
}

/// Portfolio value at each bar's close, aligned with the evaluated window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityCurve {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl EquityCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn final_value(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

/// Non-fatal events the simulation recorded instead of acting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BacktestWarning {
    /// A buy execution could not afford a single lot at the effective price.
    InsufficientCapital { date: NaiveDate },
}

/// Everything a simulation produced: completed trades, the daily equity
/// curve, whatever position was still open at the end, and warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Ledger {
    pub trades: Vec<Trade>,
    pub equity: EquityCurve,
    pub open_position: Option<OpenPosition>,
    pub warnings: Vec<BacktestWarning>,
}

#[derive(Debug, Error, PartialEq)]
pub enum BacktestError {
    #[error("cannot backtest an empty series")]
    EmptySeries,
    #[error("initial capital must be positive")]
    NonPositiveCapital,
    #[error("transaction cost must be non-negative")]
    NegativeCost,
    #[error("minimum share unit must be at least 1")]
    ZeroMinUnit,
    #[error("signal dated {0} does not fall on a bar of the series")]
    SignalDateNotInSeries(NaiveDate),
    #[error("more than one signal dated {0}")]
    DuplicateSignalDate(NaiveDate),
    #[error("equity curve needs at least {needed} points, got {len}")]
    SeriesTooShort { needed: usize, len: usize },
}

/// Runs the long-only protocol over one evaluation window.
///
/// `signals` must fall on bar dates of `series`, at most one per date. The
/// returned equity curve has one value per bar, starting at
/// `initial_capital`.
pub fn run_backtest(
    series: &OhlcvSeries,
    signals: &[TradeSignal],
    config: &BacktestConfig,
) -> Result<Ledger, BacktestError> {
    if series.is_empty() {
        return Err(BacktestError::EmptySeries);
    }
    if config.initial_capital.is_nan() || config.initial_capital <= 0.0 {
        return Err(BacktestError::NonPositiveCapital);
    }
    if config.cost_bps.is_nan() || config.cost_bps < 0.0 {
        return Err(BacktestError::NegativeCost);
    }
    if config.min_unit == 0 {
        return Err(BacktestError::ZeroMinUnit);
    }

    let mut signal_on = vec![None; series.len()];
    for s in signals {
        let i = series
            .index_of(s.date)
            .ok_or(BacktestError::SignalDateNotInSeries(s.date))?;
        if signal_on[i].is_some() {
            return Err(BacktestError::DuplicateSignalDate(s.date));
        }
        signal_on[i] = Some(s.side);
    }

    let cost = config.cost_bps / 10_000.0;
    let mut cash = config.initial_capital;
    let mut shares: u64 = 0;
    let mut entry: Option<(NaiveDate, f64)> = None;
    let mut pending: Option<Side> = None;

    let mut trades = Vec::new();
    let mut warnings = Vec::new();
    let mut equity_values = Vec::with_capacity(series.len());

    for (i, bar) in series.bars.iter().enumerate() {
        // Yesterday's signal executes at today's open.
        match pending.take() {
            Some(Side::Buy) => {
                let fill = bar.open * (1.0 + cost);
                let mut lots = (cash / fill).floor() as u64;
                lots -= lots % config.min_unit;
                if lots >= config.min_unit {
                    cash -= lots as f64 * fill;
                    shares = lots;
                    entry = Some((bar.date, fill));
                } else {
                    warnings.push(BacktestWarning::InsufficientCapital { date: bar.date });
                }
            }
            Some(Side::Sell) => {
                let fill = bar.open * (1.0 - cost);
                cash += shares as f64 * fill;
                let (entry_date, entry_price) = entry.take().expect("sell executes only while long");
                trades.push(Trade {
                    entry_date,
                    exit_date: bar.date,
                    shares,
                    entry_price,
                    exit_price: fill,
                    pnl: shares as f64 * (fill - entry_price),
                });
                shares = 0;
            }
            None => {}
        }

        // Today's signal is read against the post-execution position and
        // waits for tomorrow's open. On the last bar there is no tomorrow,
        // so whatever lands in `pending` is dropped when the loop ends.
        match signal_on[i] {
            Some(Side::Buy) if shares == 0 => pending = Some(Side::Buy),
            Some(Side::Sell) if shares > 0 => pending = Some(Side::Sell),
            _ => {}
        }

        equity_values.push(cash + shares as f64 * bar.close);
    }

    let open_position = entry.map(|(entry_date, entry_price)| OpenPosition {
        entry_date,
        shares,
        entry_price,
    });
    Ok(Ledger {
        trades,
        equity: EquityCurve {
            dates: series.dates(),
            values: equity_values,
        },
        open_position,
        warnings,
    })
}

/// Simple daily returns `v_t / v_{t-1} - 1` of an equity curve.
pub fn daily_returns(equity: &EquityCurve) -> Result<Vec<f64>, BacktestError> {
    if equity.len() < 2 {
        return Err(BacktestError::SeriesTooShort {
            needed: 2,
            len: equity.len(),
        });
    }
    Ok(equity
        .values
        .windows(2)
        .map(|w| w[1] / w[0] - 1.0)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::Bar;
    use chrono::Days;

    fn date(i: usize) -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 1, 1).unwrap() + Days::new(i as u64)
    }

    /// Flat bars whose opens and closes are pinned per index.
    fn series(opens: &[f64]) -> OhlcvSeries {
        let bars = opens
            .iter()
            .enumerate()
            .map(|(i, &open)| Bar {
                date: date(i),
                open,
                high: open * 1.02,
                low: open * 0.98,
                close: open,
                volume: 1_000.0,
            })
            .collect();
        OhlcvSeries {
            symbol: "TEST".into(),
            bars,
        }
    }

    fn sig(day: usize, side: Side) -> TradeSignal {
        TradeSignal {
            date: date(day),
            side,
        }
    }

    #[test]
    fn buy_fills_next_open_with_cost_and_whole_shares() {
        let s = series(&[99.0, 100.0, 101.0, 102.0]);
        let ledger = run_backtest(&s, &[sig(0, Side::Buy)], &BacktestConfig::default()).unwrap();
        // Fill at 100 · 1.0004 = 100.04 → floor(100000 / 100.04) = 999 shares,
        // leaving 60.04 in cash.
        let fill = 100.0 * 1.0004;
        let position = ledger.open_position.expect("still long at the end");
        assert_eq!(position.shares, 999);
        assert_eq!(position.entry_price, fill);
        assert_eq!(position.entry_date, date(1));
        let cash = 100_000.0 - 999.0 * fill;
        assert!((cash - 60.04).abs() < 1e-9);
        // Equity starts at capital and is marked to close daily.
        assert_eq!(ledger.equity.values[0], 100_000.0);
        assert_eq!(ledger.equity.values[1], cash + 999.0 * 100.0);
        assert_eq!(ledger.equity.values[3], cash + 999.0 * 102.0);
        assert!(ledger.trades.is_empty());
    }

    #[test]
    fn flat_round_trip_loses_exactly_the_double_cost() {
        // Entry and exit both fill at 100, so the only pnl is the cost:
        // 999 shares · 100 · 8e-4 = 79.92.
        let s = series(&[100.0, 100.0, 100.0, 100.0]);
        let signals = [sig(0, Side::Buy), sig(2, Side::Sell)];
        let ledger = run_backtest(&s, &signals, &BacktestConfig::default()).unwrap();
        assert_eq!(ledger.trades.len(), 1);
        let trade = ledger.trades[0];
        assert_eq!(trade.shares, 999);
        assert_eq!(trade.entry_date, date(1));
        assert_eq!(trade.exit_date, date(3));
        let expected_loss = 999.0 * 100.0 * 8e-4;
        assert!(
            (trade.pnl + expected_loss).abs() <= 1e-9 * expected_loss,
            "pnl {} vs -{expected_loss}",
            trade.pnl
        );
        // Cash accounting agrees with the trade's pnl.
        let end = ledger.equity.final_value().unwrap();
        assert!((end - (100_000.0 + trade.pnl)).abs() <= 1e-9);
        assert!(ledger.open_position.is_none());
    }

    #[test]
    fn zero_cost_round_trip_conserves_cash_exactly() {
        let s = series(&[100.0, 100.0, 104.0, 104.0]);
        let config = BacktestConfig {
            cost_bps: 0.0,
            ..BacktestConfig::default()
        };
        let signals = [sig(0, Side::Buy), sig(2, Side::Sell)];
        let ledger = run_backtest(&s, &signals, &config).unwrap();
        let trade = ledger.trades[0];
        assert_eq!(trade.entry_price, 100.0);
        assert_eq!(trade.exit_price, 104.0);
        assert_eq!(trade.pnl, 1000.0 * 4.0);
        assert_eq!(ledger.equity.final_value().unwrap(), 100_000.0 + trade.pnl);
    }

    #[test]
    fn no_signals_means_flat_equity_and_no_trades() {
        let s = series(&[100.0, 101.0, 99.0, 103.0]);
        let ledger = run_backtest(&s, &[], &BacktestConfig::default()).unwrap();
        assert!(ledger.trades.is_empty());
        assert!(ledger.open_position.is_none());
        assert!(ledger.equity.values.iter().all(|&v| v == 100_000.0));
        assert!(daily_returns(&ledger.equity).unwrap().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn redundant_signals_are_ignored() {
        // Second buy arrives while long, second sell while flat.
        let s = series(&[100.0; 7]);
        let signals = [
            sig(0, Side::Buy),
            sig(1, Side::Buy),
            sig(3, Side::Sell),
            sig(5, Side::Sell),
        ];
        let ledger = run_backtest(&s, &signals, &BacktestConfig::default()).unwrap();
        assert_eq!(ledger.trades.len(), 1);
        assert_eq!(ledger.trades[0].entry_date, date(1));
        assert_eq!(ledger.trades[0].exit_date, date(4));
        assert!(ledger.open_position.is_none());
        assert!(ledger.warnings.is_empty());
    }

    #[test]
    fn sell_while_flat_from_the_start_does_nothing() {
        let s = series(&[100.0, 101.0, 102.0]);
        let ledger =
            run_backtest(&s, &[sig(0, Side::Sell)], &BacktestConfig::default()).unwrap();
        assert!(ledger.trades.is_empty());
        assert!(ledger.equity.values.iter().all(|&v| v == 100_000.0));
    }

    #[test]
    fn signal_on_the_last_bar_is_dropped() {
        let s = series(&[100.0, 101.0, 102.0]);
        let ledger = run_backtest(&s, &[sig(2, Side::Buy)], &BacktestConfig::default()).unwrap();
        assert!(ledger.trades.is_empty());
        assert!(ledger.open_position.is_none());
        assert_eq!(ledger.equity.final_value().unwrap(), 100_000.0);
    }

    #[test]
    fn sell_signal_followed_by_buy_reenters_cleanly() {
        let s = series(&[100.0; 6]);
        let signals = [sig(0, Side::Buy), sig(2, Side::Sell), sig(3, Side::Buy)];
        let ledger = run_backtest(&s, &signals, &BacktestConfig::default()).unwrap();
        // Sell executes at bar 3's open; the buy signal on bar 3 sees a flat
        // book and re-enters at bar 4.
        assert_eq!(ledger.trades.len(), 1);
        let position = ledger.open_position.expect("re-entered");
        assert_eq!(position.entry_date, date(4));
    }

    #[test]
    fn unaffordable_buy_leaves_a_warning_not_an_error() {
        let s = series(&[100.0, 100.0, 100.0]);
        let config = BacktestConfig {
            initial_capital: 50.0,
            ..BacktestConfig::default()
        };
        let ledger = run_backtest(&s, &[sig(0, Side::Buy)], &config).unwrap();
        assert!(ledger.trades.is_empty());
        assert!(ledger.open_position.is_none());
        assert_eq!(
            ledger.warnings,
            vec![BacktestWarning::InsufficientCapital { date: date(1) }]
        );
        assert!(ledger.equity.values.iter().all(|&v| v == 50.0));
    }

    #[test]
    fn fills_respect_the_lot_size() {
        let s = series(&[100.0, 100.0, 100.0]);
        let config = BacktestConfig {
            initial_capital: 2_590.0,
            cost_bps: 0.0,
            min_unit: 10,
        };
        let ledger = run_backtest(&s, &[sig(0, Side::Buy)], &config).unwrap();
        assert_eq!(ledger.open_position.unwrap().shares, 20);
    }

    #[test]
    fn signal_off_the_calendar_is_an_error() {
        let s = series(&[100.0, 101.0]);
        let stray = TradeSignal {
            date: date(9),
            side: Side::Buy,
        };
        assert_eq!(
            run_backtest(&s, &[stray], &BacktestConfig::default()),
            Err(BacktestError::SignalDateNotInSeries(date(9)))
        );
    }

    #[test]
    fn two_signals_on_one_date_are_rejected() {
        let s = series(&[100.0, 101.0, 102.0]);
        let signals = [sig(0, Side::Buy), sig(0, Side::Sell)];
        assert_eq!(
            run_backtest(&s, &signals, &BacktestConfig::default()),
            Err(BacktestError::DuplicateSignalDate(date(0)))
        );
    }

    #[test]
    fn config_preconditions_are_enforced() {
        let s = series(&[100.0, 101.0]);
        let bad_capital = BacktestConfig {
            initial_capital: 0.0,
            ..BacktestConfig::default()
        };
        assert_eq!(
            run_backtest(&s, &[], &bad_capital),
            Err(BacktestError::NonPositiveCapital)
        );
        let bad_cost = BacktestConfig {
            cost_bps: -1.0,
            ..BacktestConfig::default()
        };
        assert_eq!(run_backtest(&s, &[], &bad_cost), Err(BacktestError::NegativeCost));
        let bad_unit = BacktestConfig {
            min_unit: 0,
            ..BacktestConfig::default()
        };
        assert_eq!(run_backtest(&s, &[], &bad_unit), Err(BacktestError::ZeroMinUnit));
        assert_eq!(
            run_backtest(&series(&[]), &[], &BacktestConfig::default()),
            Err(BacktestError::EmptySeries)
        );
    }

    #[test]
    fn daily_returns_are_simple_ratios() {
        let curve = EquityCurve {
            dates: vec![date(0), date(1), date(2)],
            values: vec![100.0, 110.0, 99.0],
        };
        let r = daily_returns(&curve).unwrap();
        assert!((r[0] - 0.1).abs() < 1e-12);
        assert!((r[1] + 0.1).abs() < 1e-12);
        let short = EquityCurve {
            dates: vec![date(0)],
            values: vec![100.0],
        };
        assert_eq!(
            daily_returns(&short),
            Err(BacktestError::SeriesTooShort { needed: 2, len: 1 })
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Random walk plus a random alternating signal schedule.
        fn arb_fixture() -> impl Strategy<Value = (OhlcvSeries, Vec<TradeSignal>)> {
            (
                proptest::collection::vec(0.9f64..1.1, 10..80),
                proptest::collection::vec(proptest::bool::ANY, 10..80),
            )
                .prop_map(|(steps, mask)| {
                    let mut price = 100.0;
                    let opens: Vec<f64> = steps
                        .iter()
                        .map(|m| {
                            price *= m;
                            price
                        })
                        .collect();
                    let s = series(&opens);
                    let mut side = Side::Buy;
                    let mut signals = Vec::new();
                    for (i, &fire) in mask.iter().take(opens.len()).enumerate() {
                        if fire {
                            signals.push(TradeSignal {
                                date: date(i),
                                side,
                            });
                            side = match side {
                                Side::Buy => Side::Sell,
                                Side::Sell => Side::Buy,
                            };
                        }
                    }
                    (s, signals)
                })
        }

        proptest! {
            #[test]
            fn equity_equals_cash_plus_position_recomputed_from_fills(
                (s, signals) in arb_fixture(),
            ) {
                let config = BacktestConfig::default();
                let ledger = run_backtest(&s, &signals, &config).unwrap();

                // Replay the blotter independently: every fill moves cash,
                // the curve must equal cash + shares · close on every day.
                let mut cash = config.initial_capital;
                let mut shares = 0u64;
                let mut fills: Vec<(NaiveDate, i64, f64)> = Vec::new();
                for t in &ledger.trades {
                    fills.push((t.entry_date, t.shares as i64, t.entry_price));
                    fills.push((t.exit_date, -(t.shares as i64), t.exit_price));
                }
                if let Some(p) = ledger.open_position {
                    fills.push((p.entry_date, p.shares as i64, p.entry_price));
                }
                fills.sort_by_key(|f| f.0);
                let mut next = fills.into_iter().peekable();
                for (i, bar) in s.bars.iter().enumerate() {
                    while next.peek().is_some_and(|f| f.0 == bar.date) {
                        let (_, qty, price) = next.next().unwrap();
                        cash -= qty as f64 * price;
                        shares = (shares as i64 + qty) as u64;
                    }
                    let expected = cash + shares as f64 * bar.close;
                    let got = ledger.equity.values[i];
                    prop_assert!(
                        (got - expected).abs() <= 1e-9 * expected.abs().max(1.0),
                        "day {i}: {got} vs {expected}"
                    );
                }
            }

            #[test]
            fn truncating_the_series_preserves_earlier_trades(
                (s, signals) in arb_fixture(),
                cut in 2usize..80,
            ) {
                prop_assume!(cut < s.len());
                let config = BacktestConfig::default();
                let full = run_backtest(&s, &signals, &config).unwrap();

                let cut_date = s.bars[cut - 1].date;
                let part_series = OhlcvSeries {
                    symbol: s.symbol.clone(),
                    bars: s.bars[..cut].to_vec(),
                };
                let part_signals: Vec<TradeSignal> = signals
                    .iter()
                    .filter(|sig| sig.date <= cut_date)
                    .copied()
                    .collect();
                let part = run_backtest(&part_series, &part_signals, &config).unwrap();

                let earlier: Vec<&Trade> = full
                    .trades
                    .iter()
                    .filter(|t| t.exit_date <= cut_date)
                    .collect();
                prop_assert_eq!(earlier.len(), part.trades.len());
                for (a, b) in earlier.into_iter().zip(&part.trades) {
                    prop_assert_eq!(a, b);
                }
                // Equity history up to the cut is identical too.
                for i in 0..cut {
                    prop_assert_eq!(full.equity.values[i], part.equity.values[i]);
                }
            }
        }
    }
}
