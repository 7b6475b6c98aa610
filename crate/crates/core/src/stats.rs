//! Significance tests for daily-return differences between two strategies.
//!
//! All three tests address the same one-sided hypothesis — is the mean of
//! the difference series positive — under increasingly weaker assumptions:
//! an i.i.d. t-test, a Newey–West (Bartlett-kernel) autocorrelation-robust
//! t-test, and a circular block bootstrap that sidesteps distributional
//! assumptions entirely. The bootstrap draws from a seeded ChaCha stream,
//! whose output is identical across platforms, so every p-value is exactly
//! reproducible from the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::backtest::{daily_returns, EquityCurve};

#[derive(Debug, Error, PartialEq, Clone)]
pub enum StatsError {
    #[error("test needs at least {needed} observations, got {len}")]
    SeriesTooShort { needed: usize, len: usize },
    #[error("difference series has zero variance")]
    ZeroVariance,
    #[error("long-run variance estimate is not positive")]
    NonPositiveLongRunVariance,
    #[error("block length {block_len} exceeds series length {len}")]
    BlockLongerThanSeries { block_len: usize, len: usize },
    #[error("block length must be at least 1")]
    ZeroBlockLength,
    #[error("bootstrap needs at least one resample")]
    ZeroResamples,
    #[error("equity curves cover different dates")]
    DateMismatch,
}

/// Identifies a test and the parameters it actually ran with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestMethod {
    OneSidedT,
    NeweyWest { lag: usize },
    CircularBlockBootstrap {
        block_len: usize,
        resamples: usize,
        seed: u64,
    },
}

impl TestMethod {
    pub fn name(&self) -> &'static str {
        match self {
            TestMethod::OneSidedT => "t-test",
            TestMethod::NeweyWest { .. } => "newey-west",
            TestMethod::CircularBlockBootstrap { .. } => "block-bootstrap",
        }
    }
}

/// Outcome of one test. `statistic` is absent for the bootstrap, which is
/// defined by its p-value alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub method: TestMethod,
    pub statistic: Option<f64>,
    pub p_value: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn upper_tail_p(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    dist.sf(t)
}

/// One-sided t-test of `H0: mean(d) <= 0` against `H1: mean(d) > 0`,
/// using the sample standard deviation and `T - 1` degrees of freedom.
pub fn one_sided_t(d: &[f64]) -> Result<TestResult, StatsError> {
    let t_len = d.len();
    if t_len < 2 {
        return Err(StatsError::SeriesTooShort {
            needed: 2,
            len: t_len,
        });
    }
    let m = mean(d);
    let ss: f64 = d.iter().map(|x| (x - m) * (x - m)).sum();
    let sd = (ss / (t_len - 1) as f64).sqrt();
    if sd == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let t = m / (sd / (t_len as f64).sqrt());
    Ok(TestResult {
        method: TestMethod::OneSidedT,
        statistic: Some(t),
        p_value: upper_tail_p(t, (t_len - 1) as f64),
    })
}

/// How the Newey–West truncation lag is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagSelection {
    /// Plug-in rule `floor(4 · (T/100)^(2/9))`.
    Auto,
    Fixed(usize),
}

/// The plug-in truncation lag for a series of length `len`.
pub fn auto_lag(len: usize) -> usize {
    (4.0 * (len as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Bartlett-weighted long-run variance of a demeaned series:
/// `gamma_0 + 2 · Σ_{j=1..lag} (1 - j/(lag+1)) · gamma_j`, with
/// autocovariances normalized by `T`.
pub fn bartlett_long_run_variance(d: &[f64], lag: usize) -> Result<f64, StatsError> {
    let t_len = d.len();
    if t_len < 2 {
        return Err(StatsError::SeriesTooShort {
            needed: 2,
            len: t_len,
        });
    }
    let lag = lag.min(t_len - 1);
    let m = mean(d);
    let centered: Vec<f64> = d.iter().map(|x| x - m).collect();
    let gamma = |j: usize| -> f64 {
        centered[j..]
            .iter()
            .zip(&centered[..t_len - j])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / t_len as f64
    };
    let mut s = gamma(0);
    for j in 1..=lag {
        let weight = 1.0 - j as f64 / (lag as f64 + 1.0);
        s += 2.0 * weight * gamma(j);
    }
    Ok(s)
}

/// Newey–West one-sided t-test: like [`one_sided_t`] but the variance in
/// the denominator is the Bartlett long-run variance, making the statistic
/// robust to autocorrelation in `d`. With `lag = 0` it degenerates to the
/// plain t statistic computed with the population variance.
pub fn newey_west_t(d: &[f64], lag: LagSelection) -> Result<TestResult, StatsError> {
    let t_len = d.len();
    let lag = match lag {
        LagSelection::Auto => auto_lag(t_len),
        LagSelection::Fixed(l) => l,
    };
    let s = bartlett_long_run_variance(d, lag)?;
    if s <= 0.0 {
        return Err(StatsError::NonPositiveLongRunVariance);
    }
    let t = mean(d) / (s / t_len as f64).sqrt();
    Ok(TestResult {
        method: TestMethod::NeweyWest { lag: lag.min(t_len - 1) },
        statistic: Some(t),
        p_value: upper_tail_p(t, (t_len - 1) as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapParams {
    pub resamples: usize,
    pub block_len: usize,
    pub seed: u64,
}

impl Default for BootstrapParams {
    fn default() -> Self {
        BootstrapParams {
            resamples: 1_000,
            block_len: 5,
            seed: 42,
        }
    }
}

/// Bootstrap outcome plus the centered resample means behind it, kept so
/// callers can render the resampling distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapTest {
    pub result: TestResult,
    pub observed_mean: f64,
    pub centered_means: Vec<f64>,
}

/// Circular block bootstrap of `H0: mean(d) <= 0`.
///
/// Each resample concatenates `ceil(T / block_len)` blocks of consecutive
/// observations (wrapping past the end) drawn from a ChaCha stream seeded
/// with `params.seed`, truncated to `T`. Resample means are centered by
/// subtracting the observed mean to impose the null, and
/// `p = (1 + #{centered mean >= observed mean}) / (resamples + 1)`,
/// so p is never exactly zero.
pub fn circular_block_bootstrap(
    d: &[f64],
    params: &BootstrapParams,
) -> Result<BootstrapTest, StatsError> {
    let t_len = d.len();
    if t_len == 0 {
        return Err(StatsError::SeriesTooShort { needed: 1, len: 0 });
    }
    if params.block_len == 0 {
        return Err(StatsError::ZeroBlockLength);
    }
    if params.block_len > t_len {
        return Err(StatsError::BlockLongerThanSeries {
            block_len: params.block_len,
            len: t_len,
        });
    }
    if params.resamples == 0 {
        return Err(StatsError::ZeroResamples);
    }

    let observed_mean = mean(d);
    let blocks = t_len.div_ceil(params.block_len);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centered_means = Vec::with_capacity(params.resamples);
    let mut extreme = 0usize;
    for _ in 0..params.resamples {
        let mut sum = 0.0;
        let mut taken = 0usize;
        'blocks: for _ in 0..blocks {
            let start = rng.random_range(0..t_len);
            for j in 0..params.block_len {
                if taken == t_len {
                    break 'blocks;
                }
                sum += d[(start + j) % t_len];
                taken += 1;
            }
        }
        let centered = sum / t_len as f64 - observed_mean;
        if centered >= observed_mean {
            extreme += 1;
        }
        centered_means.push(centered);
    }
    let p_value = (1 + extreme) as f64 / (params.resamples + 1) as f64;
    Ok(BootstrapTest {
        result: TestResult {
            method: TestMethod::CircularBlockBootstrap {
                block_len: params.block_len,
                resamples: params.resamples,
                seed: params.seed,
            },
            statistic: None,
            p_value,
        },
        observed_mean,
        centered_means,
    })
}

/// All three tests for one strategy pair on one instrument. Individual
/// tests may be degenerate (e.g. identical curves → zero variance); those
/// outcomes are carried as explicit errors, not dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct PairComparison {
    pub label: String,
    pub t_test: Result<TestResult, StatsError>,
    pub newey_west: Result<TestResult, StatsError>,
    pub bootstrap: Result<BootstrapTest, StatsError>,
}

/// Compares two equity curves over the same dates: forms the daily return
/// difference `d_t = r_new,t - r_old,t` and runs the three tests of
/// `H0: mean(d) <= 0`.
pub fn compare_pair(
    label: impl Into<String>,
    new: &EquityCurve,
    old: &EquityCurve,
    lag: LagSelection,
    bootstrap_params: &BootstrapParams,
) -> Result<PairComparison, StatsError> {
    if new.dates != old.dates {
        return Err(StatsError::DateMismatch);
    }
    let to_short = |needed: usize, len: usize| StatsError::SeriesTooShort { needed, len };
    let new_returns = daily_returns(new).map_err(|_| to_short(2, new.len()))?;
    let old_returns = daily_returns(old).map_err(|_| to_short(2, old.len()))?;
    let d: Vec<f64> = new_returns
        .iter()
        .zip(&old_returns)
        .map(|(a, b)| a - b)
        .collect();
    Ok(PairComparison {
        label: label.into(),
        t_test: one_sided_t(&d),
        newey_west: newey_west_t(&d, lag),
        bootstrap: circular_block_bootstrap(&d, bootstrap_params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Days, NaiveDate};

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected}, got {actual}"
        );
    }

    fn alternating(len: usize) -> Vec<f64> {
        (0..len).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect()
    }

    #[test]
    fn zero_mean_series_scores_t_zero_and_p_half() {
        let r = one_sided_t(&alternating(16)).unwrap();
        assert_eq!(r.statistic, Some(0.0));
        assert_close(r.p_value, 0.5, 1e-12);
    }

    #[test]
    fn strongly_positive_mean_drives_p_toward_zero() {
        let d: Vec<f64> = (0..200)
            .map(|i| 1.0 + if i % 2 == 0 { 1e-3 } else { -1e-3 })
            .collect();
        let r = one_sided_t(&d).unwrap();
        assert!(r.statistic.unwrap() > 100.0);
        assert!(r.p_value < 1e-12);
    }

    #[test]
    fn t_test_rejects_degenerate_series() {
        assert_eq!(one_sided_t(&[0.5; 8]), Err(StatsError::ZeroVariance));
        assert_eq!(
            one_sided_t(&[0.5]),
            Err(StatsError::SeriesTooShort { needed: 2, len: 1 })
        );
    }

    #[test]
    fn plug_in_lag_matches_hand_computed_values() {
        assert_eq!(auto_lag(100), 4);
        assert_eq!(auto_lag(252), 4);
        assert_eq!(auto_lag(50), 3);
        assert_eq!(auto_lag(10_000), 11);
    }

    #[test]
    fn lag_zero_newey_west_is_the_population_variance_t() {
        let d = [0.8, -0.3, 1.2, 0.4, -0.9, 1.5, 0.2, -0.1, 0.7, 0.05];
        let t_len = d.len() as f64;
        let nw = newey_west_t(&d, LagSelection::Fixed(0)).unwrap();
        let plain = one_sided_t(&d).unwrap();
        let ratio = (t_len / (t_len - 1.0)).sqrt();
        assert_close(
            nw.statistic.unwrap(),
            plain.statistic.unwrap() * ratio,
            1e-12,
        );
        assert_eq!(
            nw.statistic.unwrap().signum(),
            plain.statistic.unwrap().signum()
        );
    }

    #[test]
    fn positive_autocorrelation_inflates_the_long_run_variance() {
        // A slow sine wave is strongly positively autocorrelated at small
        // lags, so the Bartlett estimate must exceed gamma_0.
        let d: Vec<f64> = (0..400).map(|i| (i as f64 * 0.05).sin()).collect();
        let gamma0 = bartlett_long_run_variance(&d, 0).unwrap();
        let s = bartlett_long_run_variance(&d, 8).unwrap();
        assert!(s > 1.5 * gamma0, "s = {s}, gamma0 = {gamma0}");
        // And the robust t is correspondingly smaller in magnitude than the
        // naive one.
        let nw = newey_west_t(&d, LagSelection::Fixed(8)).unwrap();
        let plain = one_sided_t(&d).unwrap();
        assert!(nw.statistic.unwrap().abs() < plain.statistic.unwrap().abs());
    }

    #[test]
    fn constant_series_has_no_positive_long_run_variance() {
        assert_eq!(
            newey_west_t(&[0.25; 40], LagSelection::Auto),
            Err(StatsError::NonPositiveLongRunVariance)
        );
    }

    #[test]
    fn requested_lag_is_capped_by_the_series_length() {
        let d = [0.3, -0.2, 0.5, 0.1];
        let capped = newey_west_t(&d, LagSelection::Fixed(100)).unwrap();
        let exact = newey_west_t(&d, LagSelection::Fixed(3)).unwrap();
        assert_eq!(capped, exact);
        assert_eq!(capped.method, TestMethod::NeweyWest { lag: 3 });
    }

    #[test]
    fn constant_positive_difference_hits_the_minimum_p() {
        // Every resample of a constant series has the observed mean, so the
        // centered means are all 0 < mean and only the +1 guard counts.
        let d = [0.02; 30];
        let b = circular_block_bootstrap(&d, &BootstrapParams::default()).unwrap();
        assert_close(b.result.p_value, 1.0 / 1001.0, 1e-15);
        assert!(b.centered_means.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn all_zero_difference_cannot_be_significant() {
        let d = [0.0; 30];
        let b = circular_block_bootstrap(&d, &BootstrapParams::default()).unwrap();
        assert_eq!(b.result.p_value, 1.0);
    }

    #[test]
    fn same_seed_reproduces_the_full_resampling_distribution() {
        let d: Vec<f64> = (0..60).map(|i| (i as f64 * 0.7).sin() * 0.01).collect();
        let params = BootstrapParams {
            resamples: 500,
            block_len: 5,
            seed: 1234,
        };
        let a = circular_block_bootstrap(&d, &params).unwrap();
        let b = circular_block_bootstrap(&d, &params).unwrap();
        assert_eq!(a, b);

        let other = circular_block_bootstrap(
            &d,
            &BootstrapParams {
                seed: 1235,
                ..params
            },
        )
        .unwrap();
        assert_ne!(a.centered_means, other.centered_means);
    }

    #[test]
    fn bootstrap_rejects_impossible_parameters() {
        let d = [0.1, 0.2, 0.3];
        assert_eq!(
            circular_block_bootstrap(
                &d,
                &BootstrapParams {
                    block_len: 4,
                    ..BootstrapParams::default()
                }
            ),
            Err(StatsError::BlockLongerThanSeries {
                block_len: 4,
                len: 3
            })
        );
        assert_eq!(
            circular_block_bootstrap(
                &d,
                &BootstrapParams {
                    block_len: 0,
                    ..BootstrapParams::default()
                }
            ),
            Err(StatsError::ZeroBlockLength)
        );
        assert_eq!(
            circular_block_bootstrap(
                &d,
                &BootstrapParams {
                    resamples: 0,
                    block_len: 2,
                    ..BootstrapParams::default()
                }
            ),
            Err(StatsError::ZeroResamples)
        );
    }

    fn curve_from_returns(returns: &[f64]) -> EquityCurve {
        let start = NaiveDate::from_ymd_opt(2024, 1, 1).unwrap();
        let mut values = vec![100_000.0];
        for r in returns {
            values.push(values.last().unwrap() * (1.0 + r));
        }
        EquityCurve {
            dates: (0..values.len())
                .map(|i| start + Days::new(i as u64))
                .collect(),
            values,
        }
    }

    #[test]
    fn identical_curves_degenerate_gracefully() {
        let returns: Vec<f64> = (0..50).map(|i| 0.001 * (i as f64 * 0.3).sin()).collect();
        let curve = curve_from_returns(&returns);
        let pair = compare_pair(
            "same vs same",
            &curve,
            &curve,
            LagSelection::Auto,
            &BootstrapParams::default(),
        )
        .unwrap();
        assert_eq!(pair.t_test, Err(StatsError::ZeroVariance));
        assert_eq!(pair.newey_west, Err(StatsError::NonPositiveLongRunVariance));
        assert_eq!(pair.bootstrap.unwrap().result.p_value, 1.0);
    }

    #[test]
    fn clear_uplift_is_significant_under_all_three_tests() {
        let old_returns: Vec<f64> = (0..120).map(|i| 0.002 * (i as f64 * 0.9).sin()).collect();
        let new_returns: Vec<f64> = old_returns
            .iter()
            .enumerate()
            .map(|(i, r)| r + 0.002 + 1e-4 * (i as f64 * 1.7).cos())
            .collect();
        let pair = compare_pair(
            "better vs base",
            &curve_from_returns(&new_returns),
            &curve_from_returns(&old_returns),
            LagSelection::Auto,
            &BootstrapParams::default(),
        )
        .unwrap();
        assert!(pair.t_test.unwrap().p_value < 0.01);
        assert!(pair.newey_west.unwrap().p_value < 0.01);
        assert!(pair.bootstrap.unwrap().result.p_value < 0.01);
    }

    #[test]
    fn mismatched_dates_are_a_hard_error() {
        let a = curve_from_returns(&[0.01, 0.02]);
        let mut b = curve_from_returns(&[0.01, 0.02]);
        b.dates[2] = b.dates[2] + Days::new(10);
        assert_eq!(
            compare_pair("a vs b", &a, &b, LagSelection::Auto, &BootstrapParams::default()),
            Err(StatsError::DateMismatch)
        );
    }
}
