//! Buy-threshold (λ) grid search on a training window.
//!
//! The sweep is embarrassingly parallel in principle but runs sequentially
//! for determinism; selection is a pure lexicographic fold over the results,
//! so the chosen λ is independent of input order and reruns are
//! reproducible bit for bit.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backtest::BacktestConfig;
use crate::market_data::OhlcvSeries;
use crate::metrics::{StdDevMode, StrategyReport};
use crate::signals::TradingRule;
use crate::strategy::{run_strategy, StrategyDef};
use crate::EngineError;

/// The default search grid: 0.80 to 1.00 inclusive in 0.02 steps, 11 values.
pub fn lambda_grid() -> Vec<f64> {
    (80..=100).step_by(2).map(|i| i as f64 / 100.0).collect()
}

/// Scorecard for a single grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub lambda: f64,
    pub report: StrategyReport,
}

/// A rankable scorecard column. Every key prefers larger values except
/// [`MetricKey::MaxDrawdown`], where smaller is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKey {
    WinRatio,
    TotalPnl,
    PnlRatio,
    Sharpe,
    MaxDrawdown,
    Expectancy,
}

impl MetricKey {
    fn value(&self, report: &StrategyReport) -> Option<f64> {
        match self {
            MetricKey::WinRatio => report.win_ratio,
            MetricKey::TotalPnl => Some(report.total_pnl),
            MetricKey::PnlRatio => report.pnl_ratio,
            MetricKey::Sharpe => report.sharpe,
            MetricKey::MaxDrawdown => Some(report.max_drawdown),
            MetricKey::Expectancy => report.expectancy,
        }
    }

    fn higher_is_better(&self) -> bool {
        !matches!(self, MetricKey::MaxDrawdown)
    }
}

/// How the winning grid point is chosen: rank by `primary`, break ties with
/// each `tie_breakers` entry in order, and if everything ties exactly, take
/// the smallest λ. An absent metric ranks below any present value.
/// Constraints mark grid points infeasible before ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPolicy {
    pub primary: MetricKey,
    pub tie_breakers: Vec<MetricKey>,
    pub max_drawdown_limit: Option<f64>,
    pub min_trades: Option<usize>,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        SelectionPolicy {
            primary: MetricKey::Sharpe,
            tie_breakers: vec![MetricKey::Expectancy, MetricKey::MaxDrawdown],
            max_drawdown_limit: None,
            min_trades: None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("grid is empty")]
    EmptyGrid,
    #[error("strategy rule has no scale to calibrate")]
    RuleHasNoLambda,
    #[error("no grid point satisfies the selection constraints")]
    NoFeasibleLambda,
}

/// Runs the strategy once per grid λ over the training window and collects
/// the scorecards. The base strategy must use the λ-adjusted rule; its own
/// λ is ignored in favor of each grid value.
pub fn sweep_lambda(
    train: &OhlcvSeries,
    window: (NaiveDate, NaiveDate),
    base: &StrategyDef,
    grid: &[f64],
    config: &BacktestConfig,
    mode: StdDevMode,
) -> Result<Vec<GridResult>, EngineError> {
    if grid.is_empty() {
        return Err(CalibrationError::EmptyGrid.into());
    }
    if !matches!(base.rule, TradingRule::LambdaAdjusted { .. }) {
        return Err(CalibrationError::RuleHasNoLambda.into());
    }
    let mut results = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let def = base.with_lambda(lambda);
        let run = run_strategy(train, window.0, window.1, &def, config, mode)?;
        results.push(GridResult {
            lambda,
            report: run.report,
        });
    }
    Ok(results)
}

fn ranks_better(candidate: &GridResult, best: &GridResult, keys: &[MetricKey]) -> bool {
    for key in keys {
        let a = key.value(&candidate.report);
        let b = key.value(&best.report);
        let ordering = match (a, b) {
            (Some(x), Some(y)) => {
                let cmp = x.partial_cmp(&y).expect("metrics are finite");
                if key.higher_is_better() {
                    cmp
                } else {
                    cmp.reverse()
                }
            }
            (Some(_), None) => std::cmp::Ordering::Greater,
            (None, Some(_)) => std::cmp::Ordering::Less,
            (None, None) => std::cmp::Ordering::Equal,
        };
        match ordering {
            std::cmp::Ordering::Greater => return true,
            std::cmp::Ordering::Less => return false,
            std::cmp::Ordering::Equal => continue,
        }
    }
    false
}

/// Picks the winning grid point under `policy`. Deterministic and
/// permutation-invariant: results are ranked after sorting by λ, and a
/// candidate must be *strictly* better to displace the incumbent, so exact
/// ties resolve to the smallest λ.
pub fn select_lambda(
    results: &[GridResult],
    policy: &SelectionPolicy,
) -> Result<GridResult, CalibrationError> {
    if results.is_empty() {
        return Err(CalibrationError::EmptyGrid);
    }
    let mut ordered: Vec<&GridResult> = results.iter().collect();
    ordered.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).expect("lambda is finite"));

    let feasible = |r: &GridResult| {
        policy
            .max_drawdown_limit
            .is_none_or(|limit| r.report.max_drawdown <= limit)
            && policy
                .min_trades
                .is_none_or(|min| r.report.total_trades >= min)
    };
    let mut keys = vec![policy.primary];
    keys.extend(&policy.tie_breakers);

    let mut best: Option<&GridResult> = None;
    for candidate in ordered.into_iter().filter(|r| feasible(r)) {
        best = match best {
            None => Some(candidate),
            Some(current) if ranks_better(candidate, current, &keys) => Some(candidate),
            keep => keep,
        };
    }
    best.cloned().ok_or(CalibrationError::NoFeasibleLambda)
}
