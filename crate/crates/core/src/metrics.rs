//! Performance metrics over completed trades and equity curves.
//!
//! Undefined values (no trades, no losing trades, zero return variance) are
//! *absent*, never sentinel numbers: the per-metric functions return typed
//! errors and [`build_report`] maps those to `None` fields, which reports
//! render as "—".

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backtest::{daily_returns, EquityCurve, Ledger, Trade};

/// Annualization base: trading days per year.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Which variance denominator the Sharpe ratio uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StdDevMode {
    /// `T - 1` denominator (the default).
    #[default]
    Sample,
    /// `T` denominator.
    Population,
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("metric needs at least one trade")]
    NoTrades,
    #[error("pnl ratio is undefined without a losing trade")]
    NoLosses,
    #[error("sharpe ratio is undefined for zero return variance")]
    ZeroVariance,
    #[error("needs at least {needed} observations, got {len}")]
    SeriesTooShort { needed: usize, len: usize },
    #[error("equity curve is empty")]
    EmptyCurve,
}

/// Fraction of trades with strictly positive pnl. A zero-pnl trade counts
/// as a non-win.
pub fn win_ratio(trades: &[Trade]) -> Result<f64, MetricsError> {
    if trades.is_empty() {
        return Err(MetricsError::NoTrades);
    }
    let wins = trades.iter().filter(|t| t.pnl > 0.0).count();
    Ok(wins as f64 / trades.len() as f64)
}

/// Average winning pnl divided by average losing magnitude.
///
/// No winners → 0 by convention. No strictly losing trades → undefined
/// ([`MetricsError::NoLosses`]): there is no loss magnitude to divide by.
pub fn pnl_ratio(trades: &[Trade]) -> Result<f64, MetricsError> {
    if trades.is_empty() {
        return Err(MetricsError::NoTrades);
    }
    let (mut gain_sum, mut gains) = (0.0, 0usize);
    let (mut loss_sum, mut losses) = (0.0, 0usize);
    for t in trades {
        if t.pnl > 0.0 {
            gain_sum += t.pnl;
            gains += 1;
        } else if t.pnl < 0.0 {
            loss_sum += -t.pnl;
            losses += 1;
        }
    }
    if losses == 0 {
        return Err(MetricsError::NoLosses);
    }
    if gains == 0 {
        return Ok(0.0);
    }
    Ok((gain_sum / gains as f64) / (loss_sum / losses as f64))
}

/// Expected pnl per trade: `win_ratio · avg_gain - (1 - win_ratio) · avg_loss`.
///
/// The loss side averages |pnl| over *all* non-winning trades, so zero-pnl
/// trades dilute it with zero magnitude; with that convention the result
/// equals mean trade pnl identically.
pub fn expectancy(trades: &[Trade]) -> Result<f64, MetricsError> {
    if trades.is_empty() {
        return Err(MetricsError::NoTrades);
    }
    let total = trades.len() as f64;
    let (mut gain_sum, mut gains) = (0.0, 0usize);
    let mut loss_mag_sum = 0.0;
    for t in trades {
        if t.pnl > 0.0 {
            gain_sum += t.pnl;
            gains += 1;
        } else {
            loss_mag_sum += -t.pnl;
        }
    }
    let non_wins = trades.len() - gains;
    let wr = gains as f64 / total;
    let avg_gain = if gains > 0 { gain_sum / gains as f64 } else { 0.0 };
    let avg_loss = if non_wins > 0 {
        loss_mag_sum / non_wins as f64
    } else {
        0.0
    };
    Ok(wr * avg_gain - (1.0 - wr) * avg_loss)
}

/// Final equity minus starting equity.
pub fn total_pnl(equity: &EquityCurve) -> Result<f64, MetricsError> {
    match (equity.values.first(), equity.values.last()) {
        (Some(first), Some(last)) => Ok(last - first),
        _ => Err(MetricsError::EmptyCurve),
    }
}

/// Annualized Sharpe ratio of daily returns: `mean / std · sqrt(252)`,
/// no risk-free adjustment.
pub fn sharpe(returns: &[f64], mode: StdDevMode) -> Result<f64, MetricsError> {
    if returns.len() < 2 {
        return Err(MetricsError::SeriesTooShort {
            needed: 2,
            len: returns.len(),
        });
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let ss: f64 = returns.iter().map(|r| (r - mean) * (r - mean)).sum();
    let denom = match mode {
        StdDevMode::Sample => n - 1.0,
        StdDevMode::Population => n,
    };
    let std = (ss / denom).sqrt();
    if std == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    Ok(mean / std * TRADING_DAYS_PER_YEAR.sqrt())
}

/// Deepest peak-to-trough decline as a fraction of the peak, in `[0, 1]`.
/// A monotone non-decreasing curve scores exactly 0.
pub fn max_drawdown(equity: &EquityCurve) -> Result<f64, MetricsError> {
    if equity.is_empty() {
        return Err(MetricsError::EmptyCurve);
    }
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &v in &equity.values {
        peak = peak.max(v);
        worst = worst.max((peak - v) / peak);
    }
    Ok(worst)
}

/// One strategy's scorecard. `None` means the metric is undefined for this
/// run, and reports must say so rather than print a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub total_trades: usize,
    pub win_ratio: Option<f64>,
    pub total_pnl: f64,
    pub pnl_ratio: Option<f64>,
    pub sharpe: Option<f64>,
    pub max_drawdown: f64,
    pub expectancy: Option<f64>,
}

/// Assembles the scorecard for one simulation, mapping each undefined
/// metric to an absent field.
pub fn build_report(ledger: &Ledger, mode: StdDevMode) -> Result<StrategyReport, MetricsError> {
    Ok(StrategyReport {
        total_trades: ledger.trades.len(),
        win_ratio: win_ratio(&ledger.trades).ok(),
        total_pnl: total_pnl(&ledger.equity)?,
        pnl_ratio: pnl_ratio(&ledger.trades).ok(),
        sharpe: daily_returns(&ledger.equity)
            .ok()
            .and_then(|r| sharpe(&r, mode).ok()),
        max_drawdown: max_drawdown(&ledger.equity)?,
        expectancy: expectancy(&ledger.trades).ok(),
    })
}
