//! Declarative run configuration: one TOML file drives every subcommand.
//!
//! The file is hashed (SHA-256) at load time and the hex digest is stamped
//! into every output header, so results stay traceable to the exact
//! configuration that produced them. Relative data paths resolve against
//! the config file's own directory.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use vpmacd::calibration::{MetricKey, SelectionPolicy};
use vpmacd::indicators::{AdjustedPriceParams, MacdParams};
use vpmacd::metrics::StdDevMode;
use vpmacd::signals::{LAMBDA_MAX, LAMBDA_MIN};
use vpmacd::stats::{BootstrapParams, LagSelection};
use vpmacd::BacktestConfig;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    pub split: SplitSection,
    #[serde(default)]
    pub backtest: BacktestSection,
    pub strategies: Vec<StrategySection>,
    #[serde(default)]
    pub tests: TestsSection,
    #[serde(default)]
    pub calibration: CalibrationSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub instruments: Vec<InstrumentSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentSection {
    pub symbol: String,
    pub file: PathBuf,
}

/// Calendar windows; dates are quoted ISO strings (`"2018-01-01"`).
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_start: NaiveDate,
    pub test_end: NaiveDate,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BacktestSection {
    pub initial_capital: f64,
    /// One-way transaction cost in basis points.
    pub cost_bps: f64,
    pub min_unit: u64,
    /// `"sample"` (default) or `"population"` — Sharpe denominator.
    pub stddev: StdDevMode,
}

impl Default for BacktestSection {
    fn default() -> Self {
        let base = BacktestConfig::default();
        BacktestSection {
            initial_capital: base.initial_capital,
            cost_bps: base.cost_bps,
            min_unit: base.min_unit,
            stddev: StdDevMode::default(),
        }
    }
}

impl BacktestSection {
    pub fn engine_config(&self) -> BacktestConfig {
        BacktestConfig {
            initial_capital: self.initial_capital,
            cost_bps: self.cost_bps,
            min_unit: self.min_unit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    SignalCross,
    ZeroCross,
    Lambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriceKind {
    Close,
    VolumeAdjusted,
}

/// The `lambda` key accepts a number, the string `"calibrate"`, or a
/// per-instrument table like `{ SPY = 0.90, QQQ = 0.84 }`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Fixed(f64),
    Keyword(String),
    PerInstrument(BTreeMap<String, f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySection {
    pub name: String,
    pub rule: RuleKind,
    pub price: PriceKind,
    pub lambda: Option<LambdaSpec>,
    #[serde(default)]
    pub macd: MacdParams,
    #[serde(default)]
    pub adjusted: AdjustedPriceParams,
}

/// `newey_west_lag` accepts an integer or the string `"auto"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LagSpec {
    Fixed(usize),
    Keyword(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestsSection {
    pub newey_west_lag: LagSpec,
    pub resamples: usize,
    pub block_len: usize,
    pub seed: u64,
    pub histogram_bins: usize,
}

impl Default for TestsSection {
    fn default() -> Self {
        let base = BootstrapParams::default();
        TestsSection {
            newey_west_lag: LagSpec::Keyword("auto".into()),
            resamples: base.resamples,
            block_len: base.block_len,
            seed: base.seed,
            histogram_bins: 30,
        }
    }
}

impl TestsSection {
    /// Bootstrap parameters with the effective seed (config or `--seed`).
    pub fn bootstrap_params(&self, seed: u64) -> BootstrapParams {
        BootstrapParams {
            resamples: self.resamples,
            block_len: self.block_len,
            seed,
        }
    }

    pub fn lag_selection(&self) -> LagSelection {
        match &self.newey_west_lag {
            LagSpec::Fixed(lag) => LagSelection::Fixed(*lag),
            LagSpec::Keyword(_) => LagSelection::Auto,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub primary: MetricKey,
    pub tie_breakers: Vec<MetricKey>,
    pub max_drawdown_limit: Option<f64>,
    pub min_trades: Option<usize>,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        let base = SelectionPolicy::default();
        CalibrationSection {
            primary: base.primary,
            tie_breakers: base.tie_breakers,
            max_drawdown_limit: base.max_drawdown_limit,
            min_trades: base.min_trades,
        }
    }
}

impl CalibrationSection {
    pub fn policy(&self) -> SelectionPolicy {
        SelectionPolicy {
            primary: self.primary,
            tie_breakers: self.tie_breakers.clone(),
            max_drawdown_limit: self.max_drawdown_limit,
            min_trades: self.min_trades,
        }
    }
}

/// A parsed, validated config plus its provenance.
#[derive(Debug)]
pub struct LoadedConfig {
    pub run: RunConfig,
    /// Lowercase hex SHA-256 of the raw config bytes.
    pub hash: String,
    /// Directory the config lives in; relative data paths resolve here.
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn data_path(&self, instrument: &InstrumentSection) -> PathBuf {
        if instrument.file.is_absolute() {
            instrument.file.clone()
        } else {
            self.base_dir.join(&instrument.file)
        }
    }
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let raw = std::fs::read(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let hash = Sha256::digest(&raw)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<String>();
    let text = String::from_utf8(raw)
        .map_err(|_| CliError::Usage(format!("config {} is not UTF-8", path.display())))?;
    let run: RunConfig = toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    let base_dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let loaded = LoadedConfig {
        run,
        hash,
        base_dir,
    };
    validate(&loaded)?;
    Ok(loaded)
}

fn validate(loaded: &LoadedConfig) -> Result<(), CliError> {
    let run = &loaded.run;
    let usage = |msg: String| Err(CliError::Usage(msg));

    if run.data.instruments.is_empty() {
        return usage("config lists no instruments".into());
    }
    let mut symbols = HashSet::new();
    for instrument in &run.data.instruments {
        if !symbols.insert(instrument.symbol.as_str()) {
            return usage(format!("duplicate instrument symbol '{}'", instrument.symbol));
        }
        let path = loaded.data_path(instrument);
        if !path.is_file() {
            // Not a config-shape problem: the config is well-formed but the
            // market data it points at is absent.
            return Err(CliError::Data(format!(
                "market data file not found: {}",
                path.display()
            )));
        }
    }

    let split = &run.split;
    if split.train_start > split.train_end {
        return usage("split: train_start is after train_end".into());
    }
    if split.test_start > split.test_end {
        return usage("split: test_start is after test_end".into());
    }
    if split.train_end >= split.test_start {
        return usage("split: train and test windows overlap".into());
    }

    let bt = &run.backtest;
    if bt.initial_capital.is_nan() || bt.initial_capital <= 0.0 {
        return usage("backtest: initial_capital must be positive".into());
    }
    if bt.cost_bps.is_nan() || bt.cost_bps < 0.0 {
        return usage("backtest: cost_bps must be non-negative".into());
    }
    if bt.min_unit == 0 {
        return usage("backtest: min_unit must be at least 1".into());
    }

    if run.strategies.is_empty() {
        return usage("config lists no strategies".into());
    }
    let mut names = HashSet::new();
    for strategy in &run.strategies {
        if strategy.name.is_empty()
            || !strategy
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return usage(format!(
                "strategy name '{}' must be non-empty and use only letters, digits, '-', '_' \
                 (it becomes part of output file names)",
                strategy.name
            ));
        }
        if !names.insert(strategy.name.as_str()) {
            return usage(format!("duplicate strategy name '{}'", strategy.name));
        }
        match (strategy.rule, &strategy.lambda) {
            (RuleKind::Lambda, None) => {
                return usage(format!(
                    "strategy '{}': rule \"lambda\" needs a lambda value",
                    strategy.name
                ));
            }
            (RuleKind::Lambda, Some(spec)) => validate_lambda(&strategy.name, spec, run)?,
            (_, Some(_)) => {
                return usage(format!(
                    "strategy '{}': lambda is only meaningful with rule = \"lambda\"",
                    strategy.name
                ));
            }
            (_, None) => {}
        }
        let macd = &strategy.macd;
        if macd.n_fast == 0 || macd.n_slow == 0 || macd.n_signal == 0 {
            return usage(format!(
                "strategy '{}': MACD windows must be at least 1",
                strategy.name
            ));
        }
        if macd.n_fast >= macd.n_slow {
            return usage(format!(
                "strategy '{}': n_fast must be shorter than n_slow",
                strategy.name
            ));
        }
        if strategy.price == PriceKind::VolumeAdjusted
            && (strategy.adjusted.n_window == 0 || strategy.adjusted.sigma_window < 2)
        {
            return usage(format!(
                "strategy '{}': adjusted needs n_window >= 1 and sigma_window >= 2",
                strategy.name
            ));
        }
    }

    let tests = &run.tests;
    if let LagSpec::Keyword(word) = &tests.newey_west_lag {
        if word != "auto" {
            return usage(format!(
                "tests: newey_west_lag must be an integer or \"auto\", got \"{word}\""
            ));
        }
    }
    if tests.resamples == 0 {
        return usage("tests: resamples must be at least 1".into());
    }
    if tests.block_len == 0 {
        return usage("tests: block_len must be at least 1".into());
    }
    if tests.histogram_bins == 0 {
        return usage("tests: histogram_bins must be at least 1".into());
    }

    if let Some(limit) = run.calibration.max_drawdown_limit {
        if !(0.0..=1.0).contains(&limit) {
            return usage("calibration: max_drawdown_limit must lie in [0, 1]".into());
        }
    }

    Ok(())
}

fn validate_lambda(name: &str, spec: &LambdaSpec, run: &RunConfig) -> Result<(), CliError> {
    let check = |value: f64, context: &str| {
        if (LAMBDA_MIN..=LAMBDA_MAX).contains(&value) {
            Ok(())
        } else {
            Err(CliError::Usage(format!(
                "strategy '{name}': lambda {context}{value} outside [{LAMBDA_MIN}, {LAMBDA_MAX}]"
            )))
        }
    };
    match spec {
        LambdaSpec::Fixed(value) => check(*value, "")?,
        LambdaSpec::Keyword(word) => {
            if word != "calibrate" {
                return Err(CliError::Usage(format!(
                    "strategy '{name}': lambda must be a number, \"calibrate\", \
                     or a per-instrument table; got \"{word}\""
                )));
            }
        }
        LambdaSpec::PerInstrument(map) => {
            for instrument in &run.data.instruments {
                let Some(value) = map.get(&instrument.symbol) else {
                    return Err(CliError::Usage(format!(
                        "strategy '{name}': per-instrument lambda table has no entry \
                         for '{}'",
                        instrument.symbol
                    )));
                };
                check(*value, &format!("for {}: ", instrument.symbol))?;
            }
        }
    }
    Ok(())
}
