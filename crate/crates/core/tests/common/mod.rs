//! Shared fixture generators for the integration suites.

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use vpmacd::market_data::{Bar, OhlcvSeries};

pub fn base_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 2).unwrap()
}

/// Geometric random walk with internally consistent bars: `high` is the
/// day's true maximum, `low` its true minimum, volume positive. Daily
/// moves are ~1.5%, enough for a 12/26/9 MACD to cross several times over
/// a few hundred bars.
pub fn random_ohlcv(seed: u64, n: usize) -> OhlcvSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = base_date();
    let mut close = 100.0_f64;
    let mut bars = Vec::with_capacity(n);
    for i in 0..n {
        let open = close;
        let step: f64 = StandardNormal.sample(&mut rng);
        let next = (open * (1.0 + 0.015 * step)).max(1.0);
        let body_hi = open.max(next);
        let body_lo = open.min(next);
        let high = body_hi * (1.0 + rng.random_range(0.0..0.01));
        let low = (body_lo * (1.0 - rng.random_range(0.0..0.01))).max(0.5);
        let volume = rng.random_range(1_000.0..100_000.0_f64).round();
        bars.push(Bar {
            date: start + Days::new(i as u64),
            open,
            high,
            low,
            close: next,
            volume,
        });
        close = next;
    }
    OhlcvSeries {
        symbol: format!("SYN{seed}"),
        bars,
    }
}

/// The same series with every price multiplied by `factor` (volume kept).
pub fn scale_prices(series: &OhlcvSeries, factor: f64) -> OhlcvSeries {
    OhlcvSeries {
        symbol: series.symbol.clone(),
        bars: series
            .bars
            .iter()
            .map(|b| Bar {
                date: b.date,
                open: b.open * factor,
                high: b.high * factor,
                low: b.low * factor,
                close: b.close * factor,
                volume: b.volume,
            })
            .collect(),
    }
}
