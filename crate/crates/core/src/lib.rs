//! Leverage correlation and implied-volatility smile dynamics toolkit.
//!
//! The library estimates the leverage correlation function of daily returns,
//! maps it to theoretical implied-vol response coefficients γ(T) for
//! fixed-moneyness and fixed-strike options, estimates the empirical γ(T)
//! from ATM implied-vol panels by regression, and validates the whole chain
//! against a Monte Carlo simulator with a known leverage kernel.
//!
//! All volatilities are in daily units (standard deviation of a one-day
//! return); maturities are counted in trading days. Annualization, when
//! wanted, is a display concern and lives in the CLI.
//!
//! The `parallel` feature (on by default) runs bootstrap replicates and
//! batch regressions on a rayon pool; disabling it yields a fully
//! sequential build with identical output.

pub mod error;
pub mod leverage;
pub mod market_data;
pub mod regression;
pub mod sim;
pub mod smile;

pub use error::{Error, Result};
pub use leverage::{
    bootstrap_errors, bootstrap_errors_seq, estimate_leverage, estimate_sigma, LeverageFunction,
};
pub use market_data::{
    align, compute_returns, load_price_series, load_vol_panel, AlignedPanel, ImpliedVolPanel,
    PriceSeries, ReturnKind, ReturnSeries,
};
pub use regression::{
    implied_gamma, implied_gamma_batch, implied_gamma_batch_clipped, implied_gamma_clipped,
    tranche_average, RegressionResult,
};
pub use sim::{
    forward_vol_slope, forward_vol_slope_strided, kernel_to_gl, simulate, simulate_counting,
    synthesize_vol_panel, Kernel, KernelForm, OracleResult, SimConfig,
};
pub use smile::{
    atm_skew_from_smile, gamma_local_vol, gamma_moneyness, gamma_sticky_delta, gamma_sticky_strike,
    gamma_strike, theoretical_skew, CurveKind, GammaCurve, SkewCurve, SmileSlice, VolTermStructure,
};
