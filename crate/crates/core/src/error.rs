//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// CSV schema problems: missing columns, unparseable dates or values.
    #[error("schema error: {0}")]
    Schema(String),

    /// The same (series_id, date) pair appeared twice in the input.
    #[error("duplicate observation for series '{series}' at {date}")]
    Duplicate { series: String, date: String },

    /// A hole in the date sequence at the declared frequency.
    #[error("gap in series '{series}': missing {date}")]
    Gap { series: String, date: String },

    /// Value outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Identification ordering references an unknown or duplicated series.
    #[error("ordering error: {0}")]
    Ordering(String),

    /// A series has the wrong frequency for the requested operation.
    #[error("frequency error: {0}")]
    Frequency(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Rank-deficient regressor matrix.
    #[error("collinearity error: {0}")]
    Collinearity(String),

    /// An internal invariant failed (e.g. aggregation constraint residual).
    #[error("internal consistency failure: {0}")]
    Consistency(String),

    /// A conditional covariance lost positive definiteness mid-sweep.
    #[error("numerical failure in equation {equation}: {detail}")]
    NumericalFailure { equation: usize, detail: String },

    /// Horizon-0 own-response of the shock variable is zero or non-finite.
    #[error("normalization error: {0}")]
    Normalization(String),

    /// Two series do not share the span required by the operation.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// Invalid caller-supplied argument not covered by a more specific variant.
    #[error("input error: {0}")]
    Input(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
