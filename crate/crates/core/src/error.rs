//! Error type shared across the library.
//!
//! Each variant carries a stable machine-readable code (see [`Error::code`])
//! used by the CLI for `error: <code>: <message>` diagnostics.

use std::io;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("parse error at {path}:{row}, column '{column}': {message}")]
    Parse {
        path: String,
        row: usize,
        column: String,
        message: String,
    },
    #[error("duplicate date {date} in {path}")]
    DuplicateDate { date: String, path: String },
    #[error("non-positive price {value} at date {date}")]
    NonPositivePrice { date: String, value: f64 },
    #[error("non-positive vol {value} at date {date}, maturity {maturity}")]
    NonPositiveVol {
        date: String,
        maturity: u32,
        value: f64,
    },
    #[error("maturity {maturity} has conflicting values on date {date}")]
    InconsistentMaturitySet { date: String, maturity: u32 },
    #[error("series too short: need at least {need} observations, got {got}")]
    SeriesTooShort { need: usize, got: usize },
    #[error("zero variance: all returns identical")]
    ZeroVariance,
    #[error("no common dates between panel and returns")]
    EmptyIntersection,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("maturity {maturity} exceeds max lag {max_lag} of the leverage function")]
    MaturityExceedsMaxLag { maturity: u32, max_lag: u32 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("moneyness grid does not bracket zero")]
    GridDoesNotBracketZero,
    #[error("maturity sets do not match: {0}")]
    MaturityMismatch(String),
    #[error("curve kind {got} where {want} was required")]
    WrongKind { want: String, got: String },
    #[error("insufficient observations for maturity {maturity}: {got} pairs, need {need}")]
    InsufficientObservations {
        maturity: u32,
        got: usize,
        need: usize,
    },
    #[error("degenerate regressor: variance of x is {0:.3e}")]
    DegenerateRegressor(f64),
    #[error("empty group in tranche average")]
    EmptyGroup,
    #[error("mixed maturities in one tranche group: {0:?}")]
    MixedMaturityGroup(Vec<u32>),
    #[error("unstable kernel: sum of |k| is {0:.4}, must be < 1")]
    UnstableKernel(f64),
    #[error("excessive clamping: {clamped} of {steps} steps hit the vol floor")]
    ExcessiveClamping { clamped: usize, steps: usize },
}

impl Error {
    /// Stable short code for machine-readable diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io-error",
            Error::Parse { .. } => "parse-error",
            Error::DuplicateDate { .. } => "duplicate-date",
            Error::NonPositivePrice { .. } => "non-positive-price",
            Error::NonPositiveVol { .. } => "non-positive-vol",
            Error::InconsistentMaturitySet { .. } => "inconsistent-maturity-set",
            Error::SeriesTooShort { .. } => "series-too-short",
            Error::ZeroVariance => "zero-variance",
            Error::EmptyIntersection => "empty-intersection",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::MaturityExceedsMaxLag { .. } => "maturity-exceeds-max-lag",
            Error::InvalidInput(_) => "invalid-input",
            Error::GridDoesNotBracketZero => "grid-does-not-bracket-zero",
            Error::MaturityMismatch(_) => "maturity-mismatch",
            Error::WrongKind { .. } => "wrong-kind",
            Error::InsufficientObservations { .. } => "insufficient-observations",
            Error::DegenerateRegressor(_) => "degenerate-regressor",
            Error::EmptyGroup => "empty-group",
            Error::MixedMaturityGroup(_) => "mixed-maturity-group",
            Error::UnstableKernel(_) => "unstable-kernel",
            Error::ExcessiveClamping { .. } => "excessive-clamping",
        }
    }
}
