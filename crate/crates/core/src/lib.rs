//! Deterministic daily-bar backtesting engine for MACD-family trading
//! strategies, including a volume-price-adjusted variant.
//!
//! The crate is organised as a pipeline:
//!
//! 1. [`market_data`] — OHLCV ingestion, validation, and train/test splits.
//! 2. [`indicators`] — SMA/EMA, MACD lines, and the volume-, volatility-,
//!    and body-weighted adjusted price series.
//! 3. [`signals`] — crossover trading rules, including the λ-adjusted
//!    buy threshold.
//! 4. [`backtest`] — long-only, next-open execution with multiplicative
//!    transaction costs and whole-lot sizing.
//! 5. [`metrics`] — trade and equity scorecards.
//! 6. [`stats`] — pairwise significance tests (one-sided t, Newey–West,
//!    circular block bootstrap).
//! 7. [`calibration`] — λ grid search with lexicographic selection.
//! 8. [`strategy`] / [`report`] — end-to-end runs and deterministic output
//!    rendering.
//!
//! Everything is deterministic: the only randomness in the engine is the
//! bootstrap's resampling, which is driven by an explicit seed.

pub mod backtest;
pub mod calibration;
pub mod indicators;
pub mod market_data;
pub mod metrics;
pub mod report;
pub mod signals;
pub mod stats;
pub mod strategy;

pub use backtest::{BacktestConfig, BacktestError, EquityCurve, Ledger, Trade};
pub use calibration::{
    lambda_grid, select_lambda, sweep_lambda, CalibrationError, GridResult, MetricKey,
    SelectionPolicy,
};
pub use indicators::{AdjustedPriceParams, IndicatorError, IndicatorSeries, MacdParams};
pub use market_data::{Bar, MarketDataError, OhlcvSeries, SplitSpec};
pub use metrics::{MetricsError, StdDevMode, StrategyReport};
pub use signals::{Side, SignalError, TradeSignal, TradingRule};
pub use stats::{compare_pair, BootstrapParams, LagSelection, PairComparison, StatsError};
pub use strategy::{run_strategy, PriceSource, StrategyDef, StrategyRun};

/// Version stamped into output file headers.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Any failure the engine can produce, for callers that drive the whole
/// pipeline and want one error type.
#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    MarketData(#[from] MarketDataError),
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Backtest(#[from] BacktestError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}
