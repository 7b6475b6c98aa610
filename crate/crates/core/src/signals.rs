//! Trading-signal rules over MACD-style line pairs.
//!
//! All three rules compare yesterday's values with today's, with the tie on
//! the *previous* day counting toward the crossing (`<=`/`>=` at `t-1`,
//! strict inequality at `t`). A rule never reads a line outside its
//! warmed-up region, and each date carries at most one signal.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::{IndicatorSeries, MacdTriple};

/// Inclusive bounds every scaling factor must respect.
pub const LAMBDA_MIN: f64 = 0.8;
pub const LAMBDA_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Buy,
    Sell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeSignal {
    pub date: NaiveDate,
    pub side: Side,
}

/// Which crossing rule generates signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TradingRule {
    /// MACD line crossing its signal line.
    SignalCross,
    /// MACD line crossing zero.
    ZeroCross,
    /// Like [`TradingRule::SignalCross`] but the *buy* threshold is the
    /// signal line scaled by `lambda`; the sell threshold stays unscaled,
    /// so entries trigger earlier (for positive signal values) while exits
    /// are unchanged.
    LambdaAdjusted { lambda: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("lambda {lambda} outside [{LAMBDA_MIN}, {LAMBDA_MAX}]")]
    LambdaOutOfRange { lambda: f64 },
    #[error("macd and signal lines are not aligned on the same dates")]
    MisalignedLines,
}

fn check_aligned(lines: &MacdTriple) -> Result<(), SignalError> {
    if lines.macd.dates != lines.signal.dates {
        return Err(SignalError::MisalignedLines);
    }
    Ok(())
}

/// Walks a line pair and emits a signal wherever one of the two case
/// conditions fires. Buy is evaluated first: on the (λ < 1) edge case where
/// both conditions hold on the same bar, the buy wins and the date still
/// carries exactly one signal.
fn cross_signals(
    dates: &[NaiveDate],
    line: &IndicatorSeries,
    buy_threshold: impl Fn(usize) -> Option<f64>,
    sell_threshold: impl Fn(usize) -> Option<f64>,
) -> Vec<TradeSignal> {
    let mut signals = Vec::new();
    for (t, &date) in dates.iter().enumerate().take(line.len()).skip(1) {
        let (Some(prev), Some(curr)) = (line.value(t - 1), line.value(t)) else {
            continue;
        };
        let buy = matches!(
            (buy_threshold(t - 1), buy_threshold(t)),
            (Some(b_prev), Some(b_curr)) if prev <= b_prev && curr > b_curr
        );
        if buy {
            signals.push(TradeSignal {
                date,
                side: Side::Buy,
            });
            continue;
        }
        let sell = matches!(
            (sell_threshold(t - 1), sell_threshold(t)),
            (Some(s_prev), Some(s_curr)) if prev >= s_prev && curr < s_curr
        );
        if sell {
            signals.push(TradeSignal {
                date,
                side: Side::Sell,
            });
        }
    }
    signals
}

/// Buy when the MACD line closes above its signal line after being at or
/// below it the day before; sell on the mirrored downward cross.
pub fn crossover_signals(lines: &MacdTriple) -> Result<Vec<TradeSignal>, SignalError> {
    check_aligned(lines)?;
    let threshold = |i: usize| lines.signal.value(i);
    Ok(cross_signals(
        &lines.macd.dates,
        &lines.macd,
        threshold,
        threshold,
    ))
}

/// Buy when the MACD line crosses above zero, sell when it crosses below.
pub fn zero_cross_signals(macd_line: &IndicatorSeries) -> Vec<TradeSignal> {
    let zero = |_: usize| Some(0.0);
    cross_signals(&macd_line.dates, macd_line, zero, zero)
}

/// Crossover rule with the buy threshold scaled by `lambda` in
/// `[`[`LAMBDA_MIN`]`, `[`LAMBDA_MAX`]`]`. Only the buy leg is scaled —
/// λ = 1 reduces exactly to [`crossover_signals`].
pub fn lambda_adjusted_signals(
    lines: &MacdTriple,
    lambda: f64,
) -> Result<Vec<TradeSignal>, SignalError> {
    if !(LAMBDA_MIN..=LAMBDA_MAX).contains(&lambda) {
        return Err(SignalError::LambdaOutOfRange { lambda });
    }
    check_aligned(lines)?;
    Ok(cross_signals(
        &lines.macd.dates,
        &lines.macd,
        |i| lines.signal.value(i).map(|s| lambda * s),
        |i| lines.signal.value(i),
    ))
}

/// Dispatches to the rule named by `rule`.
pub fn signals_for_rule(
    lines: &MacdTriple,
    rule: &TradingRule,
) -> Result<Vec<TradeSignal>, SignalError> {
    match rule {
        TradingRule::SignalCross => crossover_signals(lines),
        TradingRule::ZeroCross => {
            check_aligned(lines)?;
            Ok(zero_cross_signals(&lines.macd))
        }
        TradingRule::LambdaAdjusted { lambda } => lambda_adjusted_signals(lines, *lambda),
    }
}
