//! Indicator calculations (pure functions, no IO).
//!
//! Key invariant: a value at index `t` depends only on bars `0..=t`, so
//! truncating the input after `t` never changes it. Warm-up is explicit:
//! every output carries a `valid_from` index, values before it are `None`,
//! and nothing downstream may consume them.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::{Bar, OhlcvSeries};

/// A per-date indicator line aligned with its source series.
///
/// `values[i]` is `None` before `valid_from` (warm-up). A `None` *after*
/// `valid_from` marks a date where the value is undefined for data reasons
/// (currently only zero-volume adjusted-price windows).
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<Option<f64>>,
    pub valid_from: usize,
}

impl IndicatorSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> Option<f64> {
        self.values.get(i).copied().flatten()
    }

    /// True when both indices hold usable values (used by signal rules that
    /// compare a line at `t-1` and `t`).
    pub fn valid_pair(&self, prev: usize, curr: usize) -> bool {
        self.value(prev).is_some() && self.value(curr).is_some()
    }
}

/// Exponential moving average window; the smoothing factor is `2 / (n + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmaParams {
    pub n: usize,
}

/// Fast/slow/signal windows for the MACD family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacdParams {
    pub n_fast: usize,
    pub n_slow: usize,
    pub n_signal: usize,
}

impl Default for MacdParams {
    fn default() -> Self {
        MacdParams {
            n_fast: 12,
            n_slow: 26,
            n_signal: 9,
        }
    }
}

/// Windows for the volume/volatility/body weighted price.
///
/// `n_window` is the trailing average length; `sigma_window` is the lookback
/// for the range-volatility estimate feeding the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjustedPriceParams {
    pub n_window: usize,
    pub sigma_window: usize,
}

impl Default for AdjustedPriceParams {
    fn default() -> Self {
        AdjustedPriceParams {
            n_window: 20,
            sigma_window: 20,
        }
    }
}

/// MACD line, its signal line, and their difference, on shared dates.
///
/// Invariant: wherever the signal line is valid,
/// `histogram[t] == macd[t] - signal[t]` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct MacdTriple {
    pub macd: IndicatorSeries,
    pub signal: IndicatorSeries,
    pub histogram: IndicatorSeries,
}

#[derive(Debug, Error, PartialEq)]
pub enum IndicatorError {
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("window {window} exceeds series length {len}")]
    WindowExceedsSeries { window: usize, len: usize },
    #[error("volatility window {window} must be at least {min}")]
    WindowTooSmall { window: usize, min: usize },
    #[error("fast window {n_fast} must be shorter than slow window {n_slow}")]
    FastWindowNotBelowSlow { n_fast: usize, n_slow: usize },
    #[error("dates ({dates}) and values ({values}) have different lengths")]
    MismatchedLengths { dates: usize, values: usize },
    #[error("non-positive close on {0}")]
    NonPositiveClose(NaiveDate),
    #[error("undefined value inside the warmed-up region on {0}")]
    GapInValidRegion(NaiveDate),
}

fn check_aligned(dates: &[NaiveDate], values: &[f64]) -> Result<(), IndicatorError> {
    if dates.len() != values.len() {
        return Err(IndicatorError::MismatchedLengths {
            dates: dates.len(),
            values: values.len(),
        });
    }
    Ok(())
}

fn check_window(n: usize, len: usize) -> Result<(), IndicatorError> {
    if n == 0 {
        return Err(IndicatorError::ZeroWindow);
    }
    if n > len {
        return Err(IndicatorError::WindowExceedsSeries { window: n, len });
    }
    Ok(())
}

fn sma_core(values: &[f64], n: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; values.len()];
    for (k, window) in values.windows(n).enumerate() {
        out[k + n - 1] = Some(window.iter().sum::<f64>() / n as f64);
    }
    out
}

fn ema_core(values: &[f64], n: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; values.len()];
    let alpha = 2.0 / (n as f64 + 1.0);
    let mut prev = values[..n].iter().sum::<f64>() / n as f64;
    out[n - 1] = Some(prev);
    for (i, &x) in values.iter().enumerate().skip(n) {
        prev = alpha * x + (1.0 - alpha) * prev;
        out[i] = Some(prev);
    }
    out
}

/// Simple moving average over a trailing window of `n` observations.
pub fn sma(
    dates: &[NaiveDate],
    values: &[f64],
    n: usize,
) -> Result<IndicatorSeries, IndicatorError> {
    check_aligned(dates, values)?;
    check_window(n, values.len())?;
    Ok(IndicatorSeries {
        dates: dates.to_vec(),
        values: sma_core(values, n),
        valid_from: n - 1,
    })
}

/// Exponential moving average, seeded with the simple average of the first
/// `n` observations; recursion starts on observation `n` (index `n - 1` is
/// the seed itself).
pub fn ema(
    dates: &[NaiveDate],
    values: &[f64],
    params: EmaParams,
) -> Result<IndicatorSeries, IndicatorError> {
    check_aligned(dates, values)?;
    check_window(params.n, values.len())?;
    Ok(IndicatorSeries {
        dates: dates.to_vec(),
        values: ema_core(values, params.n),
        valid_from: params.n - 1,
    })
}

fn macd_core(
    dates: &[NaiveDate],
    prices: &[f64],
    params: MacdParams,
) -> Result<MacdTriple, IndicatorError> {
    let MacdParams {
        n_fast,
        n_slow,
        n_signal,
    } = params;
    if n_fast == 0 || n_slow == 0 || n_signal == 0 {
        return Err(IndicatorError::ZeroWindow);
    }
    if n_fast >= n_slow {
        return Err(IndicatorError::FastWindowNotBelowSlow { n_fast, n_slow });
    }
    // The signal line needs at least one valid point of its own.
    let min_len = n_slow + n_signal - 1;
    if prices.len() < min_len {
        return Err(IndicatorError::WindowExceedsSeries {
            window: min_len,
            len: prices.len(),
        });
    }

    let fast = ema_core(prices, n_fast);
    let slow = ema_core(prices, n_slow);
    let macd_from = n_slow - 1;
    let mut macd = vec![None; prices.len()];
    for i in macd_from..prices.len() {
        macd[i] = Some(fast[i].unwrap() - slow[i].unwrap());
    }

    // The signal line smooths only the warmed-up stretch of the MACD line.
    let macd_tail: Vec<f64> = macd[macd_from..].iter().map(|v| v.unwrap()).collect();
    let signal_tail = ema_core(&macd_tail, n_signal);
    let signal_from = macd_from + n_signal - 1;
    let mut signal = vec![None; prices.len()];
    for (k, v) in signal_tail.into_iter().enumerate() {
        signal[macd_from + k] = v;
    }

    let mut histogram = vec![None; prices.len()];
    for i in signal_from..prices.len() {
        histogram[i] = Some(macd[i].unwrap() - signal[i].unwrap());
    }

    let series = |values: Vec<Option<f64>>, valid_from: usize| IndicatorSeries {
        dates: dates.to_vec(),
        values,
        valid_from,
    };
    Ok(MacdTriple {
        macd: series(macd, macd_from),
        signal: series(signal, signal_from),
        histogram: series(histogram, signal_from),
    })
}

/// MACD line (fast EMA minus slow EMA), signal line (EMA of the MACD line),
/// and histogram (their difference) over a price series.
///
/// Warm-up: the MACD line is valid from `n_slow - 1`, the signal line and
/// histogram from `(n_slow - 1) + (n_signal - 1)`.
pub fn macd_lines(
    dates: &[NaiveDate],
    prices: &[f64],
    params: MacdParams,
) -> Result<MacdTriple, IndicatorError> {
    check_aligned(dates, prices)?;
    macd_core(dates, prices, params)
}

/// Fraction of a bar's range covered by its body: `|close - open| / (high - low)`.
///
/// A zero-range bar (high == low) reads as 0 — no conviction either way.
pub fn body_ratio(bar: &Bar) -> f64 {
    let range = bar.high - bar.low;
    if range == 0.0 {
        return 0.0;
    }
    (bar.close - bar.open).abs() / range
}

/// Close-relative volatility of the daily range: the sample standard
/// deviation of `high - low` over a trailing window, divided by that day's
/// close. Valid from `sigma_window - 1`.
pub fn range_volatility(
    series: &OhlcvSeries,
    sigma_window: usize,
) -> Result<IndicatorSeries, IndicatorError> {
    if sigma_window < 2 {
        return Err(IndicatorError::WindowTooSmall {
            window: sigma_window,
            min: 2,
        });
    }
    check_window(sigma_window, series.len())?;
    for bar in &series.bars {
        if bar.close.is_nan() || bar.close <= 0.0 {
            return Err(IndicatorError::NonPositiveClose(bar.date));
        }
    }

    let ranges: Vec<f64> = series.bars.iter().map(|b| b.high - b.low).collect();
    let mut values = vec![None; series.len()];
    for (k, window) in ranges.windows(sigma_window).enumerate() {
        let i = k + sigma_window - 1;
        let mean = window.iter().sum::<f64>() / sigma_window as f64;
        let ss: f64 = window.iter().map(|x| (x - mean) * (x - mean)).sum();
        let std = (ss / (sigma_window - 1) as f64).sqrt();
        values[i] = Some(std / series.bars[i].close);
    }
    Ok(IndicatorSeries {
        dates: series.dates(),
        values,
        valid_from: sigma_window - 1,
    })
}

/// Volume-, volatility-, and body-weighted trailing price:
///
/// ```text
///           Σ close_i · volume_i · sigma_i · body_i
/// value_t = ----------------------------------------   over i = t-N .. t-1
///                      Σ volume_i
/// ```
///
/// The window ends the day *before* `t`, so the value never sees bar `t`.
/// Warm-up composes the volatility lookback with the window length:
/// `valid_from = (sigma_window - 1) + n_window`. A window whose volume sums
/// to zero yields `None` on that date (the weights are undefined there).
pub fn adjusted_price(
    series: &OhlcvSeries,
    params: &AdjustedPriceParams,
) -> Result<IndicatorSeries, IndicatorError> {
    let n = params.n_window;
    if n == 0 {
        return Err(IndicatorError::ZeroWindow);
    }
    let min_len = n + params.sigma_window;
    if series.len() < min_len {
        return Err(IndicatorError::WindowExceedsSeries {
            window: min_len,
            len: series.len(),
        });
    }
    let sigma = range_volatility(series, params.sigma_window)?;

    let valid_from = (params.sigma_window - 1) + n;
    let mut values = vec![None; series.len()];
    for (t, slot) in values.iter_mut().enumerate().skip(valid_from) {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in (t - n)..t {
            let bar = &series.bars[i];
            let weight = bar.volume * sigma.value(i).unwrap() * body_ratio(bar);
            num += bar.close * weight;
            den += bar.volume;
        }
        *slot = if den == 0.0 { None } else { Some(num / den) };
    }
    Ok(IndicatorSeries {
        dates: series.dates(),
        values,
        valid_from,
    })
}

/// MACD triple computed over an already-warmed indicator line (in practice
/// the adjusted price). Warm-ups compose: the output's `valid_from` offsets
/// the input's by the usual MACD warm-up.
pub fn vp_macd_lines(
    adjusted: &IndicatorSeries,
    params: MacdParams,
) -> Result<MacdTriple, IndicatorError> {
    let tail_len = adjusted.len().saturating_sub(adjusted.valid_from);
    let mut tail = Vec::with_capacity(tail_len);
    for i in adjusted.valid_from..adjusted.len() {
        match adjusted.value(i) {
            Some(v) => tail.push(v),
            None => return Err(IndicatorError::GapInValidRegion(adjusted.dates[i])),
        }
    }
    let triple = macd_core(&adjusted.dates[adjusted.valid_from..], &tail, params)?;

    let offset = adjusted.valid_from;
    let pad = |sub: IndicatorSeries| {
        let mut values = vec![None; offset];
        values.extend(sub.values);
        IndicatorSeries {
            dates: adjusted.dates.clone(),
            values,
            valid_from: offset + sub.valid_from,
        }
    };
    Ok(MacdTriple {
        macd: pad(triple.macd),
        signal: pad(triple.signal),
        histogram: pad(triple.histogram),
    })
}
