//! Leverage correlation estimation.
//!
//! The leverage correlation function at lag `l` is the connected correlation
//! between a return and the squared return `l` days later, normalized by the
//! cube of the daily volatility:
//!
//! ```text
//! g_L(l) = < r_i r^2_{i+l} >_c / sigma^3
//! ```
//!
//! The plug-in estimator demeans both factors and subtracts the second
//! central moment, with a per-lag denominator `N - l`. Standard errors come
//! from a circular moving-block bootstrap that respects the serial
//! dependence the statistic measures.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market_data::ReturnSeries;

/// Minimum overlap per lag required by [`estimate_leverage`].
pub const MIN_OVERLAP: usize = 30;

/// Lag-indexed estimates of the leverage correlation function.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageFunction {
    /// Lags 0..=max_lag in trading days.
    pub lags: Vec<u32>,
    /// g_L at each lag, dimensionless.
    pub values: Vec<f64>,
    /// Per-lag bootstrap standard errors, when computed.
    pub std_errors: Option<Vec<f64>>,
    /// Daily volatility used in the sigma^3 normalization.
    pub sigma: f64,
    /// Sample size the estimate was computed from.
    pub n_obs: usize,
}

impl LeverageFunction {
    pub fn max_lag(&self) -> u32 {
        *self.lags.last().expect("non-empty by construction")
    }

    pub fn value_at(&self, lag: u32) -> Option<f64> {
        self.lags
            .iter()
            .position(|&l| l == lag)
            .map(|i| self.values[i])
    }

    /// Extend with zeros out to `max_lag` (no-op when already long enough).
    /// Useful when a kernel with a short cutoff feeds maturities beyond it.
    pub fn padded(&self, max_lag: u32) -> Self {
        if max_lag <= self.max_lag() {
            return self.clone();
        }
        let extra = (max_lag - self.max_lag()) as usize;
        let mut out = self.clone();
        out.lags = (0..=max_lag).collect();
        out.values.extend(std::iter::repeat(0.0).take(extra));
        if let Some(se) = &mut out.std_errors {
            se.extend(std::iter::repeat(0.0).take(extra));
        }
        out
    }
}

/// Sample standard deviation of the returns, mean removed, denominator N-1.
pub fn estimate_sigma(returns: &ReturnSeries) -> Result<f64> {
    let r = &returns.returns;
    if r.len() < 2 {
        return Err(Error::SeriesTooShort {
            need: 2,
            got: r.len(),
        });
    }
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let ss: f64 = r.iter().map(|x| (x - mean).powi(2)).sum();
    if ss == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((ss / (r.len() - 1) as f64).sqrt())
}

fn leverage_values(r: &[f64], max_lag: u32, sigma: f64) -> Vec<f64> {
    let n = r.len();
    let mean = r.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = r.iter().map(|x| x - mean).collect();
    let m2 = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let sigma3 = sigma.powi(3);
    (0..=max_lag as usize)
        .map(|lag| {
            let overlap = n - lag;
            let sum: f64 = (0..overlap)
                .map(|i| centered[i] * (centered[i + lag] * centered[i + lag] - m2))
                .sum();
            sum / overlap as f64 / sigma3
        })
        .collect()
}

/// Estimate g_L at lags 0..=max_lag. Requires at least `max_lag + 30`
/// observations so every lag keeps a minimum overlap of 30.
pub fn estimate_leverage(returns: &ReturnSeries, max_lag: u32) -> Result<LeverageFunction> {
    if max_lag == 0 {
        return Err(Error::InvalidParameter("max_lag must be >= 1".into()));
    }
    let n = returns.len();
    let need = max_lag as usize + MIN_OVERLAP;
    if n < need {
        return Err(Error::SeriesTooShort { need, got: n });
    }
    let sigma = estimate_sigma(returns)?;
    Ok(LeverageFunction {
        lags: (0..=max_lag).collect(),
        values: leverage_values(&returns.returns, max_lag, sigma),
        std_errors: None,
        sigma,
        n_obs: n,
    })
}

/// One circular moving-block resample of `r` with block length `block_len`.
fn resample_circular(r: &[f64], block_len: usize, rng: &mut impl Rng) -> Vec<f64> {
    let n = r.len();
    let mut out = Vec::with_capacity(n + block_len);
    while out.len() < n {
        let start = rng.random_range(0..n);
        for k in 0..block_len {
            out.push(r[(start + k) % n]);
        }
    }
    out.truncate(n);
    out
}

/// Point estimate plus circular moving-block bootstrap standard errors.
///
/// Deterministic given `seed`: replicate `i` draws from an RNG stream
/// derived from `(seed, i)`, and results are reduced in replicate order, so
/// the output does not depend on the execution schedule.
pub fn bootstrap_errors(
    returns: &ReturnSeries,
    max_lag: u32,
    n_boot: u32,
    block_len: u32,
    seed: u64,
) -> Result<LeverageFunction> {
    run_bootstrap(returns, max_lag, n_boot, block_len, seed, Mode::Auto)
}

/// Sequential reference path of [`bootstrap_errors`]; always available so
/// the bench suite can compare it against the parallel path. Output is
/// bit-identical to the parallel path for the same inputs.
pub fn bootstrap_errors_seq(
    returns: &ReturnSeries,
    max_lag: u32,
    n_boot: u32,
    block_len: u32,
    seed: u64,
) -> Result<LeverageFunction> {
    run_bootstrap(returns, max_lag, n_boot, block_len, seed, Mode::Sequential)
}

#[derive(Clone, Copy)]
enum Mode {
    Auto,
    Sequential,
}

fn run_bootstrap(
    returns: &ReturnSeries,
    max_lag: u32,
    n_boot: u32,
    block_len: u32,
    seed: u64,
    mode: Mode,
) -> Result<LeverageFunction> {
    if block_len == 0 {
        return Err(Error::InvalidParameter("block_len must be >= 1".into()));
    }
    if n_boot < 100 {
        return Err(Error::InvalidParameter(format!(
            "n_boot must be >= 100, got {n_boot}"
        )));
    }
    let mut point = estimate_leverage(returns, max_lag)?;
    let r = &returns.returns;

    let one_replicate = |i: u32| -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64 + 1);
        let sample = resample_circular(r, block_len as usize, &mut rng);
        let mean = sample.iter().sum::<f64>() / sample.len() as f64;
        let ss: f64 = sample.iter().map(|x| (x - mean).powi(2)).sum();
        if ss == 0.0 {
            // degenerate resample; contributes the point estimate so the
            // spread is not inflated by an arbitrary value
            return point.values.clone();
        }
        let sigma = (ss / (sample.len() - 1) as f64).sqrt();
        leverage_values(&sample, max_lag, sigma)
    };

    let replicates: Vec<Vec<f64>> = match mode {
        Mode::Sequential => (0..n_boot).map(one_replicate).collect(),
        Mode::Auto => {
            #[cfg(feature = "parallel")]
            {
                (0..n_boot).into_par_iter().map(one_replicate).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..n_boot).map(one_replicate).collect()
            }
        }
    };

    let n_lags = max_lag as usize + 1;
    let mut std_errors = Vec::with_capacity(n_lags);
    for lag in 0..n_lags {
        let mean = replicates.iter().map(|v| v[lag]).sum::<f64>() / n_boot as f64;
        let var = replicates
            .iter()
            .map(|v| (v[lag] - mean).powi(2))
            .sum::<f64>()
            / (n_boot - 1) as f64;
        std_errors.push(var.sqrt());
    }
    point.std_errors = Some(std_errors);
    Ok(point)
}
