use thiserror::Error;

/// Failures raised by the numerical routines.
///
/// Variants are grouped by who is at fault: bad caller input, a numerical
/// routine that could not meet its tolerance, or a computed bound that
/// contradicts the single-crossing theorem.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input: {what} = {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("{what} = {value} outside its domain {domain}")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("coordinate index {index} out of range for k = {k}")]
    IndexOutOfRange { index: usize, k: usize },

    #[error("means must be sorted nonincreasing")]
    Unsorted,

    #[error("quadrature error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("root bracket not found after {doublings} doublings")]
    BracketExhausted { doublings: u32 },

    #[error("classification inconclusive: {0}")]
    Inconclusive(String),

    #[error("x0 = {x0} is not a crossing: F(x0) - Phi(x0) = {gap:e}")]
    NotACrossing { x0: f64, gap: f64 },

    #[error("corollary hypothesis fails: P(all X_i < 0) = {kappa_star} < kappa = {kappa}")]
    HypothesisViolated { kappa_star: f64, kappa: f64 },

    #[error("integrity failure: {0}")]
    Integrity(String),

    #[error("theorem bound violated: {0}")]
    TheoremViolated(String),
}

impl Error {
    /// Whether the error stems from caller input rather than the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::OutOfDomain { .. }
                | Error::InvalidParams(_)
                | Error::IndexOutOfRange { .. }
                | Error::Unsorted
                | Error::NotACrossing { .. }
                | Error::HypothesisViolated { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { what, value })
    }
}

pub(crate) fn open_unit(what: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::OutOfDomain {
            what,
            value,
            domain: "(0, 1)",
        })
    }
}
