//! Wiring from bars to a finished simulation: price source → MACD lines →
//! rule signals → backtest → scorecard.
//!
//! Indicators warm up on history *before* the evaluation window (everything
//! up to the window's end is computed, only signals dated inside the window
//! trade), so a window that starts mid-series is not cold-started.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::backtest::{run_backtest, BacktestConfig, Ledger};
use crate::indicators::{adjusted_price, macd_lines, vp_macd_lines};
use crate::indicators::{AdjustedPriceParams, MacdParams, MacdTriple};
use crate::market_data::{MarketDataError, OhlcvSeries};
use crate::metrics::{build_report, StdDevMode, StrategyReport};
use crate::signals::{signals_for_rule, TradeSignal, TradingRule};
use crate::EngineError;

/// Which price series feeds the MACD computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PriceSource {
    /// Raw closes.
    Close,
    /// Volume/volatility/body weighted trailing price.
    VolumeAdjusted(AdjustedPriceParams),
}

/// A complete strategy definition: where the line comes from and which rule
/// turns it into signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyDef {
    pub name: String,
    pub price: PriceSource,
    pub macd: MacdParams,
    pub rule: TradingRule,
}

impl StrategyDef {
    /// Same strategy with the buy-threshold scale replaced.
    pub fn with_lambda(&self, lambda: f64) -> StrategyDef {
        StrategyDef {
            rule: TradingRule::LambdaAdjusted { lambda },
            ..self.clone()
        }
    }
}

/// MACD/signal/histogram lines for the strategy's price source.
pub fn indicator_lines(
    series: &OhlcvSeries,
    def: &StrategyDef,
) -> Result<MacdTriple, EngineError> {
    let triple = match &def.price {
        PriceSource::Close => macd_lines(&series.dates(), &series.closes(), def.macd)?,
        PriceSource::VolumeAdjusted(params) => {
            let adjusted = adjusted_price(series, params)?;
            vp_macd_lines(&adjusted, def.macd)?
        }
    };
    Ok(triple)
}

/// Signals the strategy's rule emits over the whole series.
pub fn generate_signals(
    series: &OhlcvSeries,
    def: &StrategyDef,
) -> Result<Vec<TradeSignal>, EngineError> {
    let lines = indicator_lines(series, def)?;
    Ok(signals_for_rule(&lines, &def.rule)?)
}

/// One finished simulation of a strategy over an evaluation window.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRun {
    pub name: String,
    pub signals: Vec<TradeSignal>,
    pub ledger: Ledger,
    pub report: StrategyReport,
}

/// Runs `def` over `[start, end]` of `full`, warming indicators on all
/// history up to `end`. Only signals dated within the window trade, and the
/// equity curve covers exactly the window's bars.
pub fn run_strategy(
    full: &OhlcvSeries,
    start: NaiveDate,
    end: NaiveDate,
    def: &StrategyDef,
    config: &BacktestConfig,
    mode: StdDevMode,
) -> Result<StrategyRun, EngineError> {
    let history = full.through(end);
    let evaluation = full.window(start, end);
    if evaluation.is_empty() {
        return Err(MarketDataError::EmptyPartition {
            partition: "evaluation",
        }
        .into());
    }
    let signals: Vec<TradeSignal> = generate_signals(&history, def)?
        .into_iter()
        .filter(|s| s.date >= start && s.date <= end)
        .collect();
    let ledger = run_backtest(&evaluation, &signals, config)?;
    let report = build_report(&ledger, mode)?;
    Ok(StrategyRun {
        name: def.name.clone(),
        signals,
        ledger,
        report,
    })
}
