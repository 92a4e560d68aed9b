//! CSV ingestion of price series and implied-vol panels, return computation,
//! and date alignment of panels with returns.
//!
//! Dates are opaque ordered tokens: ISO-8601 strings compared lexically.
//! No calendar arithmetic is performed anywhere; consecutive rows are
//! treated as consecutive trading days.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Minimum joined observations per maturity column before the column is
/// flagged as thin in [`AlignedPanel::low_obs`].
pub const MIN_COLUMN_OBS: usize = 30;

/// Dated daily closing prices of one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub ticker: String,
    pub dates: Vec<String>,
    pub prices: Vec<f64>,
}

impl PriceSeries {
    /// Validates invariants: strictly increasing dates, positive prices,
    /// length at least 2.
    pub fn new(ticker: impl Into<String>, dates: Vec<String>, prices: Vec<f64>) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::InvalidInput(format!(
                "{} dates vs {} prices",
                dates.len(),
                prices.len()
            )));
        }
        if dates.len() < 2 {
            return Err(Error::SeriesTooShort {
                need: 2,
                got: dates.len(),
            });
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(if w[1] == w[0] {
                    Error::DuplicateDate {
                        date: w[0].clone(),
                        path: String::new(),
                    }
                } else {
                    Error::InvalidInput(format!("dates out of order: {} after {}", w[1], w[0]))
                });
            }
        }
        for (d, &p) in dates.iter().zip(&prices) {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::NonPositivePrice {
                    date: d.clone(),
                    value: p,
                });
            }
        }
        Ok(Self {
            ticker: ticker.into(),
            dates,
            prices,
        })
    }
}

/// Dated daily returns; element `i` is the return realized on `dates[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub ticker: String,
    pub dates: Vec<String>,
    pub returns: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(ticker: impl Into<String>, dates: Vec<String>, returns: Vec<f64>) -> Result<Self> {
        if dates.len() != returns.len() {
            return Err(Error::InvalidInput(format!(
                "{} dates vs {} returns",
                dates.len(),
                returns.len()
            )));
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidInput(format!(
                    "dates out of order: {} after {}",
                    w[1], w[0]
                )));
            }
        }
        if let Some(&bad) = returns.iter().find(|r| !r.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite return {bad}")));
        }
        Ok(Self {
            ticker: ticker.into(),
            dates,
            returns,
        })
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// Return convention used by [`compute_returns`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnKind {
    /// `ln(p_{i+1}/p_i)` — the default throughout the toolkit.
    Log,
    /// `p_{i+1}/p_i - 1`.
    Simple,
}

/// Date × maturity grid of ATM implied vols, daily convention.
/// Missing cells stay missing; nothing is ever zero-filled or interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpliedVolPanel {
    pub ticker: String,
    pub dates: Vec<String>,
    /// Maturities in trading days, strictly increasing.
    pub maturities: Vec<u32>,
    /// Row-major `dates.len() x maturities.len()` grid.
    pub vols: Vec<Option<f64>>,
}

impl ImpliedVolPanel {
    pub fn vol(&self, date_idx: usize, mat_idx: usize) -> Option<f64> {
        self.vols[date_idx * self.maturities.len() + mat_idx]
    }
}

/// Inner join of an [`ImpliedVolPanel`] with a [`ReturnSeries`] on date.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    pub ticker: String,
    pub dates: Vec<String>,
    pub returns: Vec<f64>,
    pub maturities: Vec<u32>,
    /// Row-major `dates.len() x maturities.len()` grid; gaps preserved.
    pub vols: Vec<Option<f64>>,
    /// True for maturity columns with fewer than [`MIN_COLUMN_OBS`] joined
    /// observations. Flagged, never dropped.
    pub low_obs: Vec<bool>,
}

impl AlignedPanel {
    pub fn vol(&self, date_idx: usize, mat_idx: usize) -> Option<f64> {
        self.vols[date_idx * self.maturities.len() + mat_idx]
    }

    /// View the aligned grid as a panel again (used for idempotence checks
    /// and re-serialization).
    pub fn as_panel(&self) -> ImpliedVolPanel {
        ImpliedVolPanel {
            ticker: self.ticker.clone(),
            dates: self.dates.clone(),
            maturities: self.maturities.clone(),
            vols: self.vols.clone(),
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Load a price series from CSV with a header row naming `date_column` and
/// `price_column`. Rows are sorted by date; duplicate dates are rejected.
pub fn load_price_series(
    path: impl AsRef<Path>,
    date_column: &str,
    price_column: &str,
) -> Result<PriceSeries> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                io_err(path, io)
            } else {
                unreachable!()
            }
        }
        _ => Error::Parse {
            path: path.display().to_string(),
            row: 0,
            column: String::new(),
            message: e.to_string(),
        },
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: path.display().to_string(),
            row: 0,
            column: String::new(),
            message: e.to_string(),
        })?
        .clone();
    let date_idx = headers
        .iter()
        .position(|h| h == date_column)
        .ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            row: 0,
            column: date_column.to_string(),
            message: "column not found in header".into(),
        })?;
    let price_idx = headers
        .iter()
        .position(|h| h == price_column)
        .ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            row: 0,
            column: price_column.to_string(),
            message: "column not found in header".into(),
        })?;

    let mut rows: Vec<(String, f64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 2; // 1-based, after the header
        let record = record.map_err(|e| Error::Parse {
            path: path.display().to_string(),
            row: row_no,
            column: String::new(),
            message: e.to_string(),
        })?;
        let date = record.get(date_idx).unwrap_or("").to_string();
        let price_str = record.get(price_idx).unwrap_or("");
        let price: f64 = price_str.trim().parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            row: row_no,
            column: price_column.to_string(),
            message: format!("cannot parse '{price_str}' as a number"),
        })?;
        if !(price > 0.0) || !price.is_finite() {
            return Err(Error::NonPositivePrice { date, value: price });
        }
        rows.push((date, price));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::DuplicateDate {
                date: w[0].0.clone(),
                path: path.display().to_string(),
            });
        }
    }
    let ticker = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (dates, prices) = rows.into_iter().unzip();
    PriceSeries::new(ticker, dates, prices)
}

/// Daily returns from a price series; return `i` is dated by `dates[i+1]`.
pub fn compute_returns(prices: &PriceSeries, kind: ReturnKind) -> Result<ReturnSeries> {
    if prices.prices.len() < 2 {
        return Err(Error::SeriesTooShort {
            need: 2,
            got: prices.prices.len(),
        });
    }
    let returns: Vec<f64> = prices
        .prices
        .windows(2)
        .map(|w| match kind {
            ReturnKind::Log => (w[1] / w[0]).ln(),
            ReturnKind::Simple => w[1] / w[0] - 1.0,
        })
        .collect();
    ReturnSeries::new(prices.ticker.clone(), prices.dates[1..].to_vec(), returns)
}

/// Load an implied-vol panel from long-format CSV with header
/// `date,maturity_days,atm_vol`. Empty cells of the assembled grid stay
/// missing. A maturity repeated on one date with conflicting values is an
/// error; exact duplicates are tolerated.
pub fn load_vol_panel(path: impl AsRef<Path>) -> Result<ImpliedVolPanel> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => io_err(path, io),
        other => Error::Parse {
            path: path.display().to_string(),
            row: 0,
            column: String::new(),
            message: format!("{other:?}"),
        },
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: path.display().to_string(),
            row: 0,
            column: String::new(),
            message: e.to_string(),
        })?
        .clone();
    for required in ["date", "maturity_days", "atm_vol"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::Parse {
                path: path.display().to_string(),
                row: 0,
                column: required.to_string(),
                message: "column not found in header".into(),
            });
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (di, mi, vi) = (col("date"), col("maturity_days"), col("atm_vol"));

    let mut cells: BTreeMap<(String, u32), f64> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 2;
        let record = record.map_err(|e| Error::Parse {
            path: path.display().to_string(),
            row: row_no,
            column: String::new(),
            message: e.to_string(),
        })?;
        let date = record.get(di).unwrap_or("").to_string();
        let mat_str = record.get(mi).unwrap_or("");
        let maturity: u32 = mat_str.trim().parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            row: row_no,
            column: "maturity_days".to_string(),
            message: format!("cannot parse '{mat_str}' as a positive integer"),
        })?;
        if maturity == 0 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                row: row_no,
                column: "maturity_days".to_string(),
                message: "maturity must be >= 1 trading day".into(),
            });
        }
        let vol_str = record.get(vi).unwrap_or("");
        let vol: f64 = vol_str.trim().parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            row: row_no,
            column: "atm_vol".to_string(),
            message: format!("cannot parse '{vol_str}' as a number"),
        })?;
        if !(vol > 0.0) || !vol.is_finite() {
            return Err(Error::NonPositiveVol {
                date,
                maturity,
                value: vol,
            });
        }
        match cells.get(&(date.clone(), maturity)) {
            Some(&prev) if prev != vol => {
                return Err(Error::InconsistentMaturitySet { date, maturity });
            }
            _ => {
                cells.insert((date, maturity), vol);
            }
        }
    }

    let mut dates: Vec<String> = cells.keys().map(|(d, _)| d.clone()).collect();
    dates.dedup();
    let mut maturities: Vec<u32> = cells.keys().map(|&(_, m)| m).collect();
    maturities.sort_unstable();
    maturities.dedup();

    let mut vols = vec![None; dates.len() * maturities.len()];
    for ((date, maturity), vol) in &cells {
        let r = dates.binary_search(date).unwrap();
        let c = maturities.binary_search(maturity).unwrap();
        vols[r * maturities.len() + c] = Some(*vol);
    }
    let ticker = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(ImpliedVolPanel {
        ticker,
        dates,
        maturities,
        vols,
    })
}

/// Inner join of the panel with the return series on date. Order is
/// preserved; thin maturity columns are flagged, not dropped.
pub fn align(panel: &ImpliedVolPanel, returns: &ReturnSeries) -> Result<AlignedPanel> {
    if panel.dates.is_empty() || returns.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let n_mat = panel.maturities.len();
    let mut dates = Vec::new();
    let mut joined_returns = Vec::new();
    let mut vols = Vec::new();
    for (ri, date) in returns.dates.iter().enumerate() {
        if let Ok(pi) = panel.dates.binary_search(date) {
            let row = &panel.vols[pi * n_mat..(pi + 1) * n_mat];
            if row.iter().any(Option::is_some) {
                dates.push(date.clone());
                joined_returns.push(returns.returns[ri]);
                vols.extend_from_slice(row);
            }
        }
    }
    if dates.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let low_obs = (0..n_mat)
        .map(|c| {
            let n = (0..dates.len())
                .filter(|&r| vols[r * n_mat + c].is_some())
                .count();
            n < MIN_COLUMN_OBS
        })
        .collect();
    Ok(AlignedPanel {
        ticker: panel.ticker.clone(),
        dates,
        returns: joined_returns,
        maturities: panel.maturities.clone(),
        vols,
        low_obs,
    })
}
