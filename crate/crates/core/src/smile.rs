//! Theoretical implied-vol response curves.
//!
//! Given a leverage correlation function g_L and an ATM vol term structure
//! Σ(0,T), the fixed-moneyness and fixed-strike response coefficients are
//!
//! ```text
//! gamma(T)   = [ integral_0^T g_L(u) du ]     / (2 Σ(0,T) T)
//! gamma_K(T) = [ integral_0^T u g_L(u) du ]   / (2 Σ(0,T) T^2)
//! ```
//!
//! Integrals are endpoint-corrected trapezoidal quadratures on integer lags
//! 0..T (exact for quadratic integrands), so the skew identity
//! `gamma - gamma_K = skew / Σ` holds exactly on the shared grid.
//! Alongside the two theory curves live the three benchmark rules:
//! sticky strike (`gamma = skew/Σ`), sticky delta (`gamma = 0`) and the
//! local-volatility factor-2 amplification of sticky strike.

use crate::error::{Error, Result};
use crate::leverage::LeverageFunction;

/// ATM implied vol per maturity, daily units.
#[derive(Debug, Clone, PartialEq)]
pub struct VolTermStructure {
    pub maturities: Vec<u32>,
    pub vols: Vec<f64>,
}

impl VolTermStructure {
    pub fn new(maturities: Vec<u32>, vols: Vec<f64>) -> Result<Self> {
        if maturities.len() != vols.len() {
            return Err(Error::InvalidInput(format!(
                "{} maturities vs {} vols",
                maturities.len(),
                vols.len()
            )));
        }
        if maturities.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "maturities must be strictly increasing".into(),
            ));
        }
        if maturities.iter().any(|&m| m == 0) {
            return Err(Error::InvalidInput("maturities must be >= 1".into()));
        }
        if vols.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput("vols must be positive".into()));
        }
        Ok(Self { maturities, vols })
    }

    /// Flat term structure at the historical daily vol — the model-free
    /// default when no implied term structure is supplied.
    pub fn flat(maturities: Vec<u32>, sigma: f64) -> Result<Self> {
        let n = maturities.len();
        Self::new(maturities, vec![sigma; n])
    }
}

/// Provenance of a gamma curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    TheoryMoneyness,
    TheoryStrike,
    StickyStrike,
    StickyDelta,
    LocalVol,
    Empirical,
}

impl CurveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveKind::TheoryMoneyness => "theory_moneyness",
            CurveKind::TheoryStrike => "theory_strike",
            CurveKind::StickyStrike => "sticky_strike",
            CurveKind::StickyDelta => "sticky_delta",
            CurveKind::LocalVol => "local_vol",
            CurveKind::Empirical => "empirical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "theory_moneyness" => CurveKind::TheoryMoneyness,
            "theory_strike" => CurveKind::TheoryStrike,
            "sticky_strike" => CurveKind::StickyStrike,
            "sticky_delta" => CurveKind::StickyDelta,
            "local_vol" => CurveKind::LocalVol,
            "empirical" => CurveKind::Empirical,
            _ => return None,
        })
    }
}

impl std::fmt::Display for CurveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maturity-indexed implied-leverage coefficients γ(T).
#[derive(Debug, Clone, PartialEq)]
pub struct GammaCurve {
    pub maturities: Vec<u32>,
    pub gammas: Vec<f64>,
    pub std_errors: Option<Vec<f64>>,
    pub kind: CurveKind,
}

/// ATM smile slope ∂Σ/∂M per maturity, daily vol units per unit
/// log-moneyness.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewCurve {
    pub maturities: Vec<u32>,
    pub skews: Vec<f64>,
}

/// One maturity's smile quoted on a log-moneyness grid M = ln(K/S).
#[derive(Debug, Clone, PartialEq)]
pub struct SmileSlice {
    pub maturity: u32,
    pub moneyness_grid: Vec<f64>,
    pub vols: Vec<f64>,
}

impl SmileSlice {
    pub fn new(maturity: u32, moneyness_grid: Vec<f64>, vols: Vec<f64>) -> Result<Self> {
        if moneyness_grid.len() != vols.len() || moneyness_grid.len() < 2 {
            return Err(Error::InvalidInput(
                "grid and vols must match and hold at least 2 points".into(),
            ));
        }
        if moneyness_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "moneyness grid must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            maturity,
            moneyness_grid,
            vols,
        })
    }
}

fn check_term_vs_gl(gl: &LeverageFunction, term: &VolTermStructure) -> Result<()> {
    if term.maturities.is_empty() {
        return Err(Error::InvalidInput("empty term structure".into()));
    }
    let max_t = *term.maturities.last().unwrap();
    if max_t > gl.max_lag() {
        return Err(Error::MaturityExceedsMaxLag {
            maturity: max_t,
            max_lag: gl.max_lag(),
        });
    }
    Ok(())
}

/// Quadrature weights on the integrand values f(0..=t): trapezoid with the
/// Gregory endpoint correction `-(1/12)(f'(t) - f'(0))`, the derivatives
/// taken by one-sided second-order differences. Exact for quadratics, and
/// the correction vanishes identically on constants and linears, so the
/// worked constant-kernel values and the gamma_K/gamma = 1/2 ratio stay
/// exact. For t = 1 this degenerates to the plain trapezoid.
fn quad_weights(t: u32) -> Vec<f64> {
    let n = t as usize;
    let mut w = vec![1.0; n + 1];
    w[0] = 0.5;
    w[n] = 0.5;
    if n >= 2 {
        w[0] -= 3.0 / 24.0;
        w[1] += 4.0 / 24.0;
        w[2] -= 1.0 / 24.0;
        w[n] -= 3.0 / 24.0;
        w[n - 1] += 4.0 / 24.0;
        w[n - 2] -= 1.0 / 24.0;
    }
    w
}

fn quadrature(gl: &LeverageFunction, t: u32, moment: u32) -> (f64, Option<f64>) {
    let weights = quad_weights(t);
    let mut q = 0.0;
    let mut var = 0.0;
    for u in 0..=t as usize {
        let w = if moment == 0 {
            weights[u]
        } else {
            weights[u] * u as f64
        };
        q += w * gl.values[u];
        if let Some(se) = &gl.std_errors {
            var += (w * se[u]).powi(2);
        }
    }
    let se = gl.std_errors.as_ref().map(|_| var.sqrt());
    (q, se)
}

fn gamma_curve(
    gl: &LeverageFunction,
    term: &VolTermStructure,
    moment: u32,
    kind: CurveKind,
) -> Result<GammaCurve> {
    check_term_vs_gl(gl, term)?;
    let mut gammas = Vec::with_capacity(term.maturities.len());
    let mut errs = gl.std_errors.as_ref().map(|_| Vec::new());
    for (&t, &vol) in term.maturities.iter().zip(&term.vols) {
        let denom = match moment {
            0 => 2.0 * vol * t as f64,
            _ => 2.0 * vol * (t as f64) * (t as f64),
        };
        let (q, se) = quadrature(gl, t, moment);
        gammas.push(q / denom);
        if let (Some(errs), Some(se)) = (errs.as_mut(), se) {
            errs.push(se / denom);
        }
    }
    Ok(GammaCurve {
        maturities: term.maturities.clone(),
        gammas,
        std_errors: errs,
        kind,
    })
}

/// Fixed-moneyness response: γ(T) = Q₀(g_L; T) / (2 Σ(0,T) T).
///
/// Standard errors on g_L, when present, propagate linearly through the
/// quadrature under an independent-lag approximation.
pub fn gamma_moneyness(gl: &LeverageFunction, term: &VolTermStructure) -> Result<GammaCurve> {
    gamma_curve(gl, term, 0, CurveKind::TheoryMoneyness)
}

/// Fixed-strike response: γ_K(T) = Q₁(g_L; T) / (2 Σ(0,T) T²).
pub fn gamma_strike(gl: &LeverageFunction, term: &VolTermStructure) -> Result<GammaCurve> {
    gamma_curve(gl, term, 1, CurveKind::TheoryStrike)
}

/// ATM smile slope implied by the two theory curves:
/// skew(T) = Σ(0,T) · (γ(T) − γ_K(T)), on the shared quadrature grid.
pub fn theoretical_skew(gl: &LeverageFunction, term: &VolTermStructure) -> Result<SkewCurve> {
    let gm = gamma_moneyness(gl, term)?;
    let gk = gamma_strike(gl, term)?;
    let skews = term
        .vols
        .iter()
        .zip(gm.gammas.iter().zip(&gk.gammas))
        .map(|(&vol, (&g, &k))| vol * (g - k))
        .collect();
    Ok(SkewCurve {
        maturities: term.maturities.clone(),
        skews,
    })
}

/// Slope at M = 0 of the parabola through the three grid points nearest
/// zero, or the secant when only two points exist.
pub fn atm_skew_from_smile(slice: &SmileSlice) -> Result<f64> {
    let grid = &slice.moneyness_grid;
    if !(grid.iter().any(|&m| m < 0.0) && grid.iter().any(|&m| m > 0.0)) {
        return Err(Error::GridDoesNotBracketZero);
    }
    if grid.len() == 2 {
        return Ok((slice.vols[1] - slice.vols[0]) / (grid[1] - grid[0]));
    }
    let mut idx: Vec<usize> = (0..grid.len()).collect();
    idx.sort_by(|&a, &b| grid[a].abs().total_cmp(&grid[b].abs()));
    let mut near = [idx[0], idx[1], idx[2]];
    near.sort_unstable();
    let x: Vec<f64> = near.iter().map(|&i| grid[i]).collect();
    let y: Vec<f64> = near.iter().map(|&i| slice.vols[i]).collect();
    // derivative at 0 of the Lagrange parabola through the three points
    let mut slope = 0.0;
    for i in 0..3 {
        let (a, b) = match i {
            0 => (x[1], x[2]),
            1 => (x[0], x[2]),
            _ => (x[0], x[1]),
        };
        slope += y[i] * (-(a + b)) / ((x[i] - a) * (x[i] - b));
    }
    Ok(slope)
}

/// Sticky strike: the smile frozen in strike means a return r slides the
/// ATM point along the smile, so γ_SS(T) = skew(T) / Σ(0,T).
pub fn gamma_sticky_strike(skew: &SkewCurve, term: &VolTermStructure) -> Result<GammaCurve> {
    if skew.maturities != term.maturities {
        return Err(Error::MaturityMismatch(format!(
            "skew {:?} vs term {:?}",
            skew.maturities, term.maturities
        )));
    }
    let gammas = skew
        .skews
        .iter()
        .zip(&term.vols)
        .map(|(&s, &v)| s / v)
        .collect();
    Ok(GammaCurve {
        maturities: term.maturities.clone(),
        gammas,
        std_errors: None,
        kind: CurveKind::StickyStrike,
    })
}

/// Sticky delta: the smile frozen in moneyness leaves ATM vols unchanged,
/// γ = 0 at every maturity.
pub fn gamma_sticky_delta(maturities: &[u32]) -> GammaCurve {
    GammaCurve {
        maturities: maturities.to_vec(),
        gammas: vec![0.0; maturities.len()],
        std_errors: None,
        kind: CurveKind::StickyDelta,
    }
}

/// Local volatility amplifies the sticky-strike ATM response by a factor 2.
pub fn gamma_local_vol(sticky: &GammaCurve) -> Result<GammaCurve> {
    if sticky.kind != CurveKind::StickyStrike {
        return Err(Error::WrongKind {
            want: CurveKind::StickyStrike.as_str().into(),
            got: sticky.kind.as_str().into(),
        });
    }
    Ok(GammaCurve {
        maturities: sticky.maturities.clone(),
        gammas: sticky.gammas.iter().map(|g| 2.0 * g).collect(),
        std_errors: None,
        kind: CurveKind::LocalVol,
    })
}
