//! Minimal library walkthrough: load a CSV, define a strategy, run it over
//! a date window, and print the scorecard. Run from the repository root:
//!
//! ```sh
//! cargo run -p vpmacd --example quickstart
//! ```

use vpmacd::{
    market_data, run_strategy, BacktestConfig, MacdParams, PriceSource, StdDevMode, StrategyDef,
    TradingRule,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let series = market_data::parse_csv("data/demo.csv", "DEMO")?;
    let def = StrategyDef {
        name: "vp-macd".into(),
        price: PriceSource::VolumeAdjusted(Default::default()),
        macd: MacdParams::default(),
        rule: TradingRule::LambdaAdjusted { lambda: 0.9 },
    };
    let run = run_strategy(
        &series,
        "2021-01-01".parse()?,
        "2021-05-16".parse()?,
        &def,
        &BacktestConfig::default(),
        StdDevMode::Sample,
    )?;
    println!(
        "{} trades, final equity {:.2}",
        run.report.total_trades,
        run.ledger.equity.values.last().copied().unwrap_or_default(),
    );
    Ok(())
}
