use thiserror::Error;

/// Every failure the numerical core can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("channel {n} is exactly at threshold for k = {k} (perturb k)")]
    Threshold { n: usize, k: f64 },

    #[error("product pole: |p_(2n-1) + alpha| vanishes at n = {n}")]
    PoleProximity { n: usize },

    #[error("tail correction needs n_terms > bk/pi = {min:.3}, got {n_terms}")]
    TruncationTooShort { n_terms: usize, min: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("intertwining violated at channel {index}")]
    Intertwining { index: usize },

    #[error("diffraction coefficient diverges on an optical boundary (theta = {theta})")]
    OpticalBoundary { theta: f64 },

    #[error("resonant denominator between channels {n} and {m}")]
    Resonant { n: usize, m: usize },

    #[error("coincident angles at indices {i} and {j}")]
    CoincidentAngles { i: usize, j: usize },

    #[error("W^2 and V^2 disagree in sign at index {index}")]
    SignMismatch { index: usize },

    #[error("eigenvalue leaves the unit circle by {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("spacing law parameters out of range: {0}")]
    LawRange(String),

    #[error("winding pair ({m}, {n}) is not co-prime")]
    NotCoprime { m: u64, n: u64 },

    #[error("unresolved level cluster in [{lo}, {hi}]")]
    Unresolved { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
