//! Deterministic CSV and aligned-text rendering of engine outputs.
//!
//! Every artifact starts with the same comment header (engine version,
//! config hash, seed), so a result file is traceable to the exact inputs
//! that produced it, and identical runs produce byte-identical files.
//! Undefined metrics render as "—" in text and as an empty CSV field —
//! never as a sentinel number.

use crate::backtest::{EquityCurve, Trade};
use crate::calibration::GridResult;
use crate::metrics::StrategyReport;
use crate::stats::{PairComparison, StatsError, TestMethod, TestResult};

/// Provenance stamped on every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputMeta {
    /// Engine name and version, e.g. `vpmacd 0.1.0`.
    pub engine: String,
    /// Hex SHA-256 of the run's config file.
    pub config_hash: String,
    pub seed: u64,
}

impl OutputMeta {
    fn header(&self) -> String {
        format!(
            "# engine: {}\n# config-sha256: {}\n# seed: {}\n",
            self.engine, self.config_hash, self.seed
        )
    }
}

const ABSENT_TEXT: &str = "—";

fn opt_fixed(value: Option<f64>, decimals: usize) -> String {
    value.map_or(String::new(), |v| format!("{v:.decimals$}"))
}

/// Groups an already-formatted unsigned integer part with commas.
fn group_thousands(digits: &str) -> String {
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    let offset = digits.len() % 3;
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (i + 3 - offset).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// `12345.678` → `$12,345.68`; negatives keep the sign ahead of `$`.
fn dollars(value: f64) -> String {
    let rounded = format!("{:.2}", value.abs());
    let (int_part, frac_part) = rounded.split_once('.').expect("fixed-point format");
    let sign = if value < 0.0 { "-" } else { "" };
    format!("{sign}${}.{frac_part}", group_thousands(int_part))
}

fn percent(value: Option<f64>) -> String {
    value.map_or(ABSENT_TEXT.into(), |v| format!("{:.2}%", v * 100.0))
}

fn plain(value: Option<f64>, decimals: usize) -> String {
    value.map_or(ABSENT_TEXT.into(), |v| format!("{v:.decimals$}"))
}

const REPORT_COLUMNS: [&str; 8] = [
    "strategy",
    "trades",
    "win_rate",
    "total_pnl",
    "pnl_ratio",
    "sharpe",
    "max_drawdown",
    "expectancy",
];

/// Per-strategy scorecards as CSV, one row per strategy.
pub fn render_report_csv(rows: &[(String, StrategyReport)], meta: &OutputMeta) -> String {
    let mut out = meta.header();
    out.push_str(&REPORT_COLUMNS.join(","));
    out.push('\n');
    for (name, r) in rows {
        out.push_str(&format!(
            "{},{},{},{:.2},{},{},{:.6},{}\n",
            name,
            r.total_trades,
            opt_fixed(r.win_ratio, 6),
            r.total_pnl,
            opt_fixed(r.pnl_ratio, 6),
            opt_fixed(r.sharpe, 6),
            r.max_drawdown,
            opt_fixed(r.expectancy, 6),
        ));
    }
    out
}

/// The same scorecards as an aligned, human-readable table.
pub fn render_report_table(rows: &[(String, StrategyReport)], meta: &OutputMeta) -> String {
    let headers = [
        "Strategy",
        "Trades",
        "Win Rate",
        "Total PnL",
        "PnL Ratio",
        "Sharpe",
        "Max DD",
        "Expectancy",
    ];
    let mut table: Vec<[String; 8]> = Vec::with_capacity(rows.len());
    for (name, r) in rows {
        table.push([
            name.clone(),
            r.total_trades.to_string(),
            percent(r.win_ratio),
            dollars(r.total_pnl),
            plain(r.pnl_ratio, 2),
            plain(r.sharpe, 2),
            percent(Some(r.max_drawdown)),
            r.expectancy.map_or(ABSENT_TEXT.into(), dollars),
        ]);
    }
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in &table {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = meta.header();
    let render_row = |cells: &[String]| -> String {
        let mut line = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            // Left-align the strategy column, right-align numbers.
            if i == 0 {
                line.push_str(&format!("{cell:<w$}"));
            } else {
                line.push_str(&format!("{cell:>w$}"));
            }
        }
        line.push('\n');
        line
    };
    out.push_str(&render_row(&headers.map(String::from)));
    out.push_str(&format!("{}\n", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))));
    for row in &table {
        out.push_str(&render_row(row));
    }
    out
}

/// Completed round trips as CSV.
pub fn render_trades_csv(trades: &[Trade], meta: &OutputMeta) -> String {
    let mut out = meta.header();
    out.push_str("entry_date,exit_date,shares,entry_price,exit_price,pnl\n");
    for t in trades {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.entry_date, t.exit_date, t.shares, t.entry_price, t.exit_price, t.pnl
        ));
    }
    out
}

/// Daily equity values as CSV (full float precision, for replotting).
pub fn render_equity_csv(curve: &EquityCurve, meta: &OutputMeta) -> String {
    let mut out = meta.header();
    out.push_str("date,equity\n");
    for (date, value) in curve.dates.iter().zip(&curve.values) {
        out.push_str(&format!("{date},{value}\n"));
    }
    out
}

/// Grid-search scorecards as CSV, one row per λ.
pub fn render_sweep_csv(results: &[GridResult], meta: &OutputMeta) -> String {
    let mut out = meta.header();
    out.push_str("lambda,win_ratio,total_pnl,pnl_ratio,sharpe,max_drawdown,expectancy\n");
    for g in results {
        let r = &g.report;
        out.push_str(&format!(
            "{},{},{:.2},{},{},{:.6},{}\n",
            g.lambda,
            opt_fixed(r.win_ratio, 6),
            r.total_pnl,
            opt_fixed(r.pnl_ratio, 6),
            opt_fixed(r.sharpe, 6),
            r.max_drawdown,
            opt_fixed(r.expectancy, 6),
        ));
    }
    out
}

fn method_params(method: &TestMethod) -> String {
    match method {
        TestMethod::OneSidedT => String::new(),
        TestMethod::NeweyWest { lag } => format!("lag={lag}"),
        TestMethod::CircularBlockBootstrap {
            block_len,
            resamples,
            seed,
        } => format!("block_len={block_len};resamples={resamples};seed={seed}"),
    }
}

fn test_row(pair: &str, method_name: &str, outcome: &Result<TestResult, StatsError>) -> String {
    match outcome {
        Ok(r) => format!(
            "{pair},{},{},{:.6},{},\n",
            r.method.name(),
            opt_fixed(r.statistic, 6),
            r.p_value,
            method_params(&r.method),
        ),
        Err(e) => format!("{pair},{method_name},,,,{e}\n"),
    }
}

/// Pairwise test outcomes as CSV: three rows per comparison, one per
/// method. Degenerate outcomes keep their row with the reason in `note`.
pub fn render_tests_csv(comparisons: &[PairComparison], meta: &OutputMeta) -> String {
    let mut out = meta.header();
    out.push_str("pair,method,statistic,p_value,params,note\n");
    for c in comparisons {
        out.push_str(&test_row(&c.label, "t-test", &c.t_test));
        out.push_str(&test_row(&c.label, "newey-west", &c.newey_west));
        let bootstrap = c
            .bootstrap
            .as_ref()
            .map(|b| b.result)
            .map_err(Clone::clone);
        out.push_str(&test_row(&c.label, "block-bootstrap", &bootstrap));
    }
    out
}

/// Histogram of the bootstrap's centered resample means: exactly `bins`
/// rows of `bin_left,bin_right,count` covering `[min, max]`. A degenerate
/// distribution (all means equal) lands entirely in the first bin.
pub fn render_histogram_csv(centered_means: &[f64], bins: usize, meta: &OutputMeta) -> String {
    let mut out = meta.header();
    out.push_str("bin_left,bin_right,count\n");
    if bins == 0 {
        return out;
    }
    let lo = centered_means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = centered_means
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut counts = vec![0usize; bins];
    if centered_means.is_empty() || lo == hi {
        counts[0] = centered_means.len();
        let (lo, hi) = if centered_means.is_empty() {
            (0.0, 0.0)
        } else {
            (lo, hi)
        };
        for count in &counts {
            out.push_str(&format!("{lo},{hi},{count}\n"));
        }
        return out;
    }
    let width = (hi - lo) / bins as f64;
    for &m in centered_means {
        let idx = (((m - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    for (i, count) in counts.iter().enumerate() {
        let left = lo + width * i as f64;
        let right = if i + 1 == bins { hi } else { lo + width * (i + 1) as f64 };
        out.push_str(&format!("{left},{right},{count}\n"));
    }
    out
}

/// One chosen λ per instrument/strategy, with the metric that won it.
pub fn render_lambda_summary_csv(
    rows: &[(String, String, f64, Option<f64>)],
    meta: &OutputMeta,
) -> String {
    let mut out = meta.header();
    out.push_str("instrument,strategy,lambda,train_sharpe\n");
    for (instrument, strategy, lambda, sharpe) in rows {
        out.push_str(&format!(
            "{instrument},{strategy},{lambda},{}\n",
            opt_fixed(*sharpe, 6)
        ));
    }
    out
}
