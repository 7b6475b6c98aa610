//! The four subcommands. Each one loads instruments and strategies in
//! config order and writes deterministically named files into the output
//! directory, so identical (config, data, seed) inputs produce a
//! byte-identical output tree.

use std::path::Path;

use vpmacd::backtest::BacktestWarning;
use vpmacd::calibration::{lambda_grid, select_lambda, sweep_lambda, GridResult, SelectionPolicy};
use vpmacd::market_data::{parse_csv, OhlcvSeries};
use vpmacd::metrics::{StdDevMode, StrategyReport};
use vpmacd::report::{
    render_equity_csv, render_histogram_csv, render_lambda_summary_csv, render_report_csv,
    render_report_table, render_sweep_csv, render_tests_csv, render_trades_csv, OutputMeta,
};
use vpmacd::signals::{TradingRule, LAMBDA_MIN};
use vpmacd::stats::compare_pair;
use vpmacd::strategy::{run_strategy, PriceSource, StrategyDef, StrategyRun};
use vpmacd::BacktestConfig;

use crate::config::{InstrumentSection, LambdaSpec, LoadedConfig, PriceKind, RuleKind, StrategySection};
use crate::CliError;

pub struct Runner<'a> {
    pub loaded: &'a LoadedConfig,
    pub out_dir: &'a Path,
    /// Effective bootstrap seed (`--seed` flag beats the config value).
    pub seed: u64,
    pub meta: OutputMeta,
}

impl Runner<'_> {
    fn bt(&self) -> BacktestConfig {
        self.loaded.run.backtest.engine_config()
    }

    fn mode(&self) -> StdDevMode {
        self.loaded.run.backtest.stddev
    }

    fn policy(&self) -> SelectionPolicy {
        self.loaded.run.calibration.policy()
    }

    fn load_series(&self, instrument: &InstrumentSection) -> Result<OhlcvSeries, CliError> {
        let path = self.loaded.data_path(instrument);
        parse_csv(&path, &instrument.symbol)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    fn base_def(&self, section: &StrategySection, rule: TradingRule) -> StrategyDef {
        StrategyDef {
            name: section.name.clone(),
            price: match section.price {
                PriceKind::Close => PriceSource::Close,
                PriceKind::VolumeAdjusted => PriceSource::VolumeAdjusted(section.adjusted),
            },
            macd: section.macd,
            rule,
        }
    }

    /// Concrete per-instrument strategy: fixed λ used as-is, per-instrument
    /// tables looked up, `"calibrate"` resolved by a grid search on the
    /// training window.
    fn resolve_def(
        &self,
        section: &StrategySection,
        series: &OhlcvSeries,
    ) -> Result<StrategyDef, CliError> {
        let rule = match section.rule {
            RuleKind::SignalCross => TradingRule::SignalCross,
            RuleKind::ZeroCross => TradingRule::ZeroCross,
            RuleKind::Lambda => {
                let lambda = match section.lambda.as_ref().expect("validated at load") {
                    LambdaSpec::Fixed(value) => *value,
                    LambdaSpec::PerInstrument(map) => map[&series.symbol],
                    LambdaSpec::Keyword(_) => self.calibrated_lambda(section, series)?.lambda,
                };
                TradingRule::LambdaAdjusted { lambda }
            }
        };
        Ok(self.base_def(section, rule))
    }

    fn sweep(
        &self,
        section: &StrategySection,
        series: &OhlcvSeries,
    ) -> Result<Vec<GridResult>, CliError> {
        let split = &self.loaded.run.split;
        let base = self.base_def(section, TradingRule::LambdaAdjusted { lambda: LAMBDA_MIN });
        sweep_lambda(
            series,
            (split.train_start, split.train_end),
            &base,
            &lambda_grid(),
            &self.bt(),
            self.mode(),
        )
        .map_err(|e| {
            CliError::Data(format!(
                "calibrating '{}' on {}: {e}",
                section.name, series.symbol
            ))
        })
    }

    fn calibrated_lambda(
        &self,
        section: &StrategySection,
        series: &OhlcvSeries,
    ) -> Result<GridResult, CliError> {
        let sweep = self.sweep(section, series)?;
        select_lambda(&sweep, &self.policy()).map_err(|e| {
            CliError::Data(format!(
                "selecting lambda for '{}' on {}: {e}",
                section.name, series.symbol
            ))
        })
    }

    fn test_run(
        &self,
        series: &OhlcvSeries,
        def: &StrategyDef,
    ) -> Result<StrategyRun, CliError> {
        let split = &self.loaded.run.split;
        let run = run_strategy(
            series,
            split.test_start,
            split.test_end,
            def,
            &self.bt(),
            self.mode(),
        )
        .map_err(|e| {
            CliError::Data(format!("running '{}' on {}: {e}", def.name, series.symbol))
        })?;
        for warning in &run.ledger.warnings {
            let BacktestWarning::InsufficientCapital { date } = warning;
            eprintln!(
                "warning: {}/{}: insufficient capital for one lot on {date}",
                series.symbol, def.name
            );
        }
        Ok(run)
    }

    fn write(&self, name: &str, content: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(self.out_dir)
            .map_err(|e| CliError::Data(format!("creating {}: {e}", self.out_dir.display())))?;
        let path = self.out_dir.join(name);
        std::fs::write(&path, content)
            .map_err(|e| CliError::Data(format!("writing {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    /// Backtests every strategy on the test window of every instrument and
    /// writes per-instrument scorecards plus per-strategy blotters and
    /// equity curves.
    pub fn cmd_backtest(&self) -> Result<(), CliError> {
        for instrument in &self.loaded.run.data.instruments {
            let series = self.load_series(instrument)?;
            let mut rows: Vec<(String, StrategyReport)> = Vec::new();
            for section in &self.loaded.run.strategies {
                let def = self.resolve_def(section, &series)?;
                let run = self.test_run(&series, &def)?;
                self.write(
                    &format!("trades_{}_{}.csv", instrument.symbol, section.name),
                    &render_trades_csv(&run.ledger.trades, &self.meta),
                )?;
                self.write(
                    &format!("equity_{}_{}.csv", instrument.symbol, section.name),
                    &render_equity_csv(&run.ledger.equity, &self.meta),
                )?;
                rows.push((section.name.clone(), run.report));
            }
            self.write(
                &format!("report_{}.csv", instrument.symbol),
                &render_report_csv(&rows, &self.meta),
            )?;
            let table = render_report_table(&rows, &self.meta);
            self.write(&format!("report_{}.txt", instrument.symbol), &table)?;
            println!("\n{}:", instrument.symbol);
            for line in table.lines().filter(|l| !l.starts_with('#')) {
                println!("  {line}");
            }
            println!();
        }
        Ok(())
    }

    /// Grid-searches λ on the training window for every λ-rule strategy and
    /// writes the sweep scorecards plus a summary of the policy's choices.
    pub fn cmd_calibrate(&self) -> Result<(), CliError> {
        let lambda_strategies: Vec<&StrategySection> = self
            .loaded
            .run
            .strategies
            .iter()
            .filter(|s| s.rule == RuleKind::Lambda)
            .collect();
        if lambda_strategies.is_empty() {
            return Err(CliError::Usage(
                "calibrate: no strategy uses rule = \"lambda\"".into(),
            ));
        }
        let mut summary: Vec<(String, String, f64, Option<f64>)> = Vec::new();
        for instrument in &self.loaded.run.data.instruments {
            let series = self.load_series(instrument)?;
            for section in &lambda_strategies {
                let sweep = self.sweep(section, &series)?;
                self.write(
                    &format!("sweep_{}_{}.csv", instrument.symbol, section.name),
                    &render_sweep_csv(&sweep, &self.meta),
                )?;
                let chosen = select_lambda(&sweep, &self.policy()).map_err(|e| {
                    CliError::Data(format!(
                        "selecting lambda for '{}' on {}: {e}",
                        section.name, instrument.symbol
                    ))
                })?;
                println!(
                    "{} / {}: lambda {} (train sharpe {})",
                    instrument.symbol,
                    section.name,
                    chosen.lambda,
                    chosen
                        .report
                        .sharpe
                        .map_or("—".into(), |s| format!("{s:.4}")),
                );
                summary.push((
                    instrument.symbol.clone(),
                    section.name.clone(),
                    chosen.lambda,
                    chosen.report.sharpe,
                ));
            }
        }
        self.write(
            "lambda_summary.csv",
            &render_lambda_summary_csv(&summary, &self.meta),
        )
    }

    /// Runs all strategies on the test window and writes pairwise test
    /// results (three methods per pair) plus one bootstrap histogram per
    /// pair. Pair k follows the convention: later strategies are "new",
    /// earlier ones the benchmark.
    pub fn cmd_compare(&self) -> Result<(), CliError> {
        let strategies = &self.loaded.run.strategies;
        if strategies.len() < 2 {
            return Err(CliError::Usage(
                "compare: needs at least two strategies".into(),
            ));
        }
        let lag = self.loaded.run.tests.lag_selection();
        let bootstrap = self.loaded.run.tests.bootstrap_params(self.seed);
        let bins = self.loaded.run.tests.histogram_bins;
        for instrument in &self.loaded.run.data.instruments {
            let series = self.load_series(instrument)?;
            let mut runs: Vec<StrategyRun> = Vec::with_capacity(strategies.len());
            for section in strategies {
                let def = self.resolve_def(section, &series)?;
                runs.push(self.test_run(&series, &def)?);
            }
            let mut comparisons = Vec::new();
            let mut pair_no = 0usize;
            for j in 1..runs.len() {
                for i in 0..j {
                    pair_no += 1;
                    let label =
                        format!("Pair {pair_no}: {} vs {}", runs[j].name, runs[i].name);
                    let comparison = compare_pair(
                        &label,
                        &runs[j].ledger.equity,
                        &runs[i].ledger.equity,
                        lag,
                        &bootstrap,
                    )
                    .map_err(|e| {
                        CliError::Data(format!(
                            "comparing '{}' vs '{}' on {}: {e}",
                            runs[j].name, runs[i].name, instrument.symbol
                        ))
                    })?;
                    let centered: &[f64] = match &comparison.bootstrap {
                        Ok(b) => &b.centered_means,
                        Err(_) => &[],
                    };
                    self.write(
                        &format!("hist_{}_pair{pair_no}.csv", instrument.symbol),
                        &render_histogram_csv(centered, bins, &self.meta),
                    )?;
                    comparisons.push(comparison);
                }
            }
            self.write(
                &format!("tests_{}.csv", instrument.symbol),
                &render_tests_csv(&comparisons, &self.meta),
            )?;
        }
        Ok(())
    }

    /// The full composition: backtest everything, calibrate what has a λ
    /// grid, compare when there is more than one strategy.
    pub fn cmd_report(&self) -> Result<(), CliError> {
        self.cmd_backtest()?;
        if self
            .loaded
            .run
            .strategies
            .iter()
            .any(|s| s.rule == RuleKind::Lambda)
        {
            self.cmd_calibrate()?;
        }
        if self.loaded.run.strategies.len() >= 2 {
            self.cmd_compare()?;
        }
        Ok(())
    }
}
