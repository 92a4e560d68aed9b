//! Empirical implied-leverage regressions.
//!
//! Per maturity, the relative daily change of the ATM implied vol is
//! regressed on the same-day return of the underlying:
//!
//! ```text
//! (Sigma_t - Sigma_{t-1}) / Sigma_{t-1} = a + gamma_hat * r_t + eps_t
//! ```
//!
//! Slopes are averaged equal-weight across tickers within a tranche.
//! Standard errors of the slope are heteroskedasticity-robust (HC1
//! sandwich); vol-change residuals are heteroskedastic almost by
//! construction.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market_data::AlignedPanel;
use crate::smile::{CurveKind, GammaCurve};

/// Pairs required before a per-maturity regression is attempted.
pub const MIN_PAIRS: usize = 31;

/// Variance floor below which the regressor is treated as degenerate.
pub const DEGENERATE_VAR: f64 = 1e-16;

/// One per-ticker per-maturity OLS fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub ticker: String,
    pub maturity: u32,
    /// gamma_hat, the estimated implied-leverage coefficient.
    pub slope: f64,
    pub intercept: f64,
    /// HC1 sandwich standard error of the slope.
    pub std_err: f64,
    pub n_obs: usize,
}

/// Simple OLS of y on x with intercept, HC1 sandwich SE for the slope.
/// Returns (slope, intercept, robust SE of the slope).
pub(crate) fn ols_robust(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len() as f64;
    let x_mean = x.iter().sum::<f64>() / n;
    let y_mean = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - x_mean).powi(2)).sum();
    if sxx / n < DEGENERATE_VAR {
        return Err(Error::DegenerateRegressor(sxx / n));
    }
    let sxy: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (xi - x_mean) * (yi - y_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    // sandwich: sum (x_i - xbar)^2 e_i^2 / Sxx^2, HC1 small-sample factor
    let meat: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let e = yi - intercept - slope * xi;
            (xi - x_mean).powi(2) * e * e
        })
        .sum();
    let var = meat / (sxx * sxx) * n / (n - 2.0);
    Ok((slope, intercept, var.sqrt()))
}

/// Estimate gamma_hat for one maturity column of an aligned panel.
///
/// A pair (t-1, t) enters the sample only when both cells exist on adjacent
/// rows of the panel; gaps break pairs rather than being bridged.
pub fn implied_gamma(panel: &AlignedPanel, maturity: u32) -> Result<RegressionResult> {
    implied_gamma_clipped(panel, maturity, None)
}

/// [`implied_gamma`] with optional symmetric quantile clipping: pairs whose
/// relative vol change falls outside the empirical [q, 1-q] quantiles of the
/// column are dropped before the fit. `clip = None` fits every pair.
pub fn implied_gamma_clipped(
    panel: &AlignedPanel,
    maturity: u32,
    clip: Option<f64>,
) -> Result<RegressionResult> {
    if let Some(q) = clip {
        if !(q > 0.0 && q < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "clip quantile must be in (0, 0.5), got {q}"
            )));
        }
    }
    let col = panel
        .maturities
        .iter()
        .position(|&m| m == maturity)
        .ok_or_else(|| {
            Error::MaturityMismatch(format!(
                "maturity {maturity} not in panel {:?}",
                panel.maturities
            ))
        })?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for t in 1..panel.dates.len() {
        if let (Some(prev), Some(curr)) = (panel.vol(t - 1, col), panel.vol(t, col)) {
            x.push(panel.returns[t]);
            y.push((curr - prev) / prev);
        }
    }
    if let Some(q) = clip {
        let mut sorted = y.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let n = sorted.len();
        if n >= MIN_PAIRS {
            let lo = sorted[((q * (n - 1) as f64).floor() as usize).min(n - 1)];
            let hi = sorted[(((1.0 - q) * (n - 1) as f64).ceil() as usize).min(n - 1)];
            let keep: Vec<bool> = y.iter().map(|&yi| yi >= lo && yi <= hi).collect();
            x = x
                .into_iter()
                .zip(&keep)
                .filter_map(|(v, &k)| k.then_some(v))
                .collect();
            y = y
                .into_iter()
                .zip(&keep)
                .filter_map(|(v, &k)| k.then_some(v))
                .collect();
        }
    }
    if x.len() < MIN_PAIRS {
        return Err(Error::InsufficientObservations {
            maturity,
            got: x.len(),
            need: MIN_PAIRS,
        });
    }
    let (slope, intercept, std_err) = ols_robust(&x, &y)?;
    Ok(RegressionResult {
        ticker: panel.ticker.clone(),
        maturity,
        slope,
        intercept,
        std_err,
        n_obs: x.len(),
    })
}

/// Run [`implied_gamma`] for every (ticker, maturity) cell of a set of
/// panels. Regressions execute in parallel when the `parallel` feature is
/// on; output order is always sorted by ticker then maturity. Maturity
/// columns that fail their preconditions are skipped together with the
/// reason.
pub fn implied_gamma_batch(
    panels: &[AlignedPanel],
) -> (Vec<RegressionResult>, Vec<(String, u32, Error)>) {
    implied_gamma_batch_clipped(panels, None)
}

/// [`implied_gamma_batch`] with the same optional quantile clipping as
/// [`implied_gamma_clipped`], applied per maturity column.
pub fn implied_gamma_batch_clipped(
    panels: &[AlignedPanel],
    clip: Option<f64>,
) -> (Vec<RegressionResult>, Vec<(String, u32, Error)>) {
    let mut jobs: Vec<(usize, u32)> = panels
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.maturities.iter().map(move |&m| (i, m)))
        .collect();
    jobs.sort_by(|a, b| (&panels[a.0].ticker, a.1).cmp(&(&panels[b.0].ticker, b.1)));

    let run = |&(i, m): &(usize, u32)| {
        (
            panels[i].ticker.clone(),
            m,
            implied_gamma_clipped(&panels[i], m, clip),
        )
    };

    #[cfg(feature = "parallel")]
    let raw: Vec<_> = jobs.par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let raw: Vec<_> = jobs.iter().map(run).collect();

    let mut results = Vec::new();
    let mut skipped = Vec::new();
    for (ticker, maturity, outcome) in raw {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => skipped.push((ticker, maturity, e)),
        }
    }
    (results, skipped)
}

/// Equal-weight average of per-ticker slopes within each maturity group.
/// The cross-sectional spread of slopes divided by sqrt(n_tickers) is the
/// reported standard error; a single-ticker group reports 0.
pub fn tranche_average(groups: &[Vec<RegressionResult>]) -> Result<GammaCurve> {
    let mut rows: Vec<(u32, f64, f64)> = Vec::with_capacity(groups.len());
    for group in groups {
        if group.is_empty() {
            return Err(Error::EmptyGroup);
        }
        let maturity = group[0].maturity;
        if group.iter().any(|r| r.maturity != maturity) {
            let mut seen: Vec<u32> = group.iter().map(|r| r.maturity).collect();
            seen.sort_unstable();
            seen.dedup();
            return Err(Error::MixedMaturityGroup(seen));
        }
        let n = group.len() as f64;
        let mean = group.iter().map(|r| r.slope).sum::<f64>() / n;
        // population spread across tickers; n = 1 collapses to 0
        let var = group.iter().map(|r| (r.slope - mean).powi(2)).sum::<f64>() / n;
        let std_err = var.sqrt() / n.sqrt();
        rows.push((maturity, mean, std_err));
    }
    rows.sort_by_key(|&(m, _, _)| m);
    Ok(GammaCurve {
        maturities: rows.iter().map(|r| r.0).collect(),
        gammas: rows.iter().map(|r| r.1).collect(),
        std_errors: Some(rows.iter().map(|r| r.2).collect()),
        kind: CurveKind::Empirical,
    })
}
