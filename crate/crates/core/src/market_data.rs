//! OHLCV ingestion, validation, and train/test splitting.
//!
//! Parsing is strict about structure (required columns present, every field
//! parsable, dates unique) and deliberately lenient about content: bars that
//! violate price/volume sanity rules are kept and reported by [`validate`],
//! so callers decide whether flagged data is acceptable.

use std::fmt;
use std::fs::File;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One daily OHLCV bar.
///
/// Volume is stored as a float so vendor files with decimal volumes survive a
/// parse → write → parse round trip unchanged; [`validate`] flags negative
/// values instead of the parser rejecting them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

/// A single instrument's bars, sorted strictly ascending by date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OhlcvSeries {
    pub symbol: String,
    pub bars: Vec<Bar>,
}

impl OhlcvSeries {
    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.bars.iter().map(|b| b.date).collect()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    /// Bars with `date <= end`, preserving order.
    pub fn through(&self, end: NaiveDate) -> OhlcvSeries {
        OhlcvSeries {
            symbol: self.symbol.clone(),
            bars: self.bars.iter().filter(|b| b.date <= end).copied().collect(),
        }
    }

    /// Bars with `start <= date <= end`, preserving order.
    pub fn window(&self, start: NaiveDate, end: NaiveDate) -> OhlcvSeries {
        OhlcvSeries {
            symbol: self.symbol.clone(),
            bars: self
                .bars
                .iter()
                .filter(|b| b.date >= start && b.date <= end)
                .copied()
                .collect(),
        }
    }

    /// Index of the bar carrying `date`, if present.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.bars.binary_search_by_key(&date, |b| b.date).ok()
    }
}

/// Calendar windows for a chronological train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_start: NaiveDate,
    pub test_end: NaiveDate,
}

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing required column '{0}'")]
    MissingColumn(&'static str),
    #[error("unparsable row at line {line}: {reason}")]
    UnparsableRow { line: u64, reason: String },
    #[error("file contains no data rows")]
    EmptyFile,
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("{0} window is inverted (start after end)")]
    InvertedWindow(&'static str),
    #[error("split windows overlap: train ends {train_end}, test starts {test_start}")]
    OverlappingSplit {
        train_end: NaiveDate,
        test_start: NaiveDate,
    },
    #[error("{partition} partition is empty for the requested window")]
    EmptyPartition { partition: &'static str },
}

const REQUIRED_COLUMNS: [&str; 6] = ["date", "open", "high", "low", "close", "volume"];

/// Parses a daily OHLCV CSV file.
///
/// Header names are matched case-insensitively in any column order; extra
/// vendor columns (e.g. dividend-adjusted closes) are ignored. Rows may
/// arrive out of order — the result is sorted ascending by date. Structural
/// problems (missing column, unparsable or incomplete row, duplicate date,
/// no data rows) are errors; content sanity is [`validate`]'s job.
pub fn parse_csv(
    path: impl AsRef<Path>,
    symbol: impl Into<String>,
) -> Result<OhlcvSeries, MarketDataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| MarketDataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers = reader
        .headers()
        .map_err(|e| MarketDataError::UnparsableRow {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    let mut column_index = [0usize; REQUIRED_COLUMNS.len()];
    for (slot, name) in column_index.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or(MarketDataError::MissingColumn(match name {
                "date" => "date",
                "open" => "open",
                "high" => "high",
                "low" => "low",
                "close" => "close",
                _ => "volume",
            }))?;
    }

    let mut bars = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| MarketDataError::UnparsableRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |idx: usize| -> Result<&str, MarketDataError> {
            match record.get(column_index[idx]) {
                Some(s) if !s.is_empty() => Ok(s),
                _ => Err(MarketDataError::UnparsableRow {
                    line,
                    reason: format!("missing '{}' field", REQUIRED_COLUMNS[idx]),
                }),
            }
        };
        let date = NaiveDate::parse_from_str(field(0)?, "%Y-%m-%d").map_err(|e| {
            MarketDataError::UnparsableRow {
                line,
                reason: format!("bad date: {e}"),
            }
        })?;
        let mut prices = [0.0f64; 5];
        for (i, slot) in prices.iter_mut().enumerate() {
            let raw = field(i + 1)?;
            let value: f64 = raw.parse().map_err(|_| MarketDataError::UnparsableRow {
                line,
                reason: format!("bad {} value '{raw}'", REQUIRED_COLUMNS[i + 1]),
            })?;
            if !value.is_finite() {
                return Err(MarketDataError::UnparsableRow {
                    line,
                    reason: format!("non-finite {} value '{raw}'", REQUIRED_COLUMNS[i + 1]),
                });
            }
            *slot = value;
        }
        bars.push(Bar {
            date,
            open: prices[0],
            high: prices[1],
            low: prices[2],
            close: prices[3],
            volume: prices[4],
        });
    }

    if bars.is_empty() {
        return Err(MarketDataError::EmptyFile);
    }
    bars.sort_by_key(|b| b.date);
    for pair in bars.windows(2) {
        if pair[0].date == pair[1].date {
            return Err(MarketDataError::DuplicateDate(pair[0].date));
        }
    }
    Ok(OhlcvSeries {
        symbol: symbol.into(),
        bars,
    })
}

/// Writes a series back out in the same column order [`parse_csv`] reads.
///
/// Floats use shortest round-trip formatting, so parse → write → parse
/// reproduces the series bit for bit.
pub fn write_csv(series: &OhlcvSeries, path: impl AsRef<Path>) -> Result<(), MarketDataError> {
    let path = path.as_ref();
    let io_err = |source: std::io::Error| MarketDataError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut writer = csv::Writer::from_writer(file);
    let write_record = |w: &mut csv::Writer<File>, fields: [String; 6]| {
        w.write_record(&fields).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => MarketDataError::Io {
                path: path.display().to_string(),
                source,
            },
            other => MarketDataError::UnparsableRow {
                line: 0,
                reason: format!("{other:?}"),
            },
        })
    };
    write_record(
        &mut writer,
        ["Date", "Open", "High", "Low", "Close", "Volume"].map(String::from),
    )?;
    for bar in &series.bars {
        write_record(
            &mut writer,
            [
                bar.date.format("%Y-%m-%d").to_string(),
                bar.open.to_string(),
                bar.high.to_string(),
                bar.low.to_string(),
                bar.close.to_string(),
                bar.volume.to_string(),
            ],
        )?;
    }
    writer.flush().map_err(io_err)
}

/// A sanity rule a bar failed. Flagged bars stay in the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    NonPositivePrice,
    HighBelowLow,
    OpenOutsideRange,
    CloseOutsideRange,
    NegativeVolume,
    ZeroVolume,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            ViolationKind::NonPositivePrice => "non-positive price",
            ViolationKind::HighBelowLow => "high below low",
            ViolationKind::OpenOutsideRange => "open outside [low, high]",
            ViolationKind::CloseOutsideRange => "close outside [low, high]",
            ViolationKind::NegativeVolume => "negative volume",
            ViolationKind::ZeroVolume => "zero volume",
        };
        f.write_str(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub date: NaiveDate,
    pub kind: ViolationKind,
}

/// Checks every bar against the OHLCV sanity rules and returns all failures.
///
/// A clean series returns an empty list. Zero-volume bars are flagged but not
/// treated as errors anywhere in the engine.
pub fn validate(series: &OhlcvSeries) -> Vec<Violation> {
    let mut violations = Vec::new();
    for bar in &series.bars {
        let mut push = |kind| violations.push(Violation { date: bar.date, kind });
        let prices = [bar.open, bar.high, bar.low, bar.close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            push(ViolationKind::NonPositivePrice);
        }
        if bar.high < bar.low {
            push(ViolationKind::HighBelowLow);
        }
        if bar.open < bar.low || bar.open > bar.high {
            push(ViolationKind::OpenOutsideRange);
        }
        if bar.close < bar.low || bar.close > bar.high {
            push(ViolationKind::CloseOutsideRange);
        }
        if bar.volume < 0.0 {
            push(ViolationKind::NegativeVolume);
        } else if bar.volume == 0.0 {
            push(ViolationKind::ZeroVolume);
        }
    }
    violations
}

/// Splits a series into chronological train and test partitions.
///
/// Bars are copied bit-for-bit; a date outside both windows is dropped.
pub fn split(
    series: &OhlcvSeries,
    spec: &SplitSpec,
) -> Result<(OhlcvSeries, OhlcvSeries), MarketDataError> {
    if spec.train_start > spec.train_end {
        return Err(MarketDataError::InvertedWindow("train"));
    }
    if spec.test_start > spec.test_end {
        return Err(MarketDataError::InvertedWindow("test"));
    }
    if spec.train_end >= spec.test_start {
        return Err(MarketDataError::OverlappingSplit {
            train_end: spec.train_end,
            test_start: spec.test_start,
        });
    }
    let train = series.window(spec.train_start, spec.train_end);
    if train.is_empty() {
        return Err(MarketDataError::EmptyPartition { partition: "train" });
    }
    let test = series.window(spec.test_start, spec.test_end);
    if test.is_empty() {
        return Err(MarketDataError::EmptyPartition { partition: "test" });
    }
    Ok((train, test))
}
