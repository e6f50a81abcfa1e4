use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("model violates assumption {assumption}: {detail}")]
    Model { assumption: &'static str, detail: String },
    #[error("point {sigma} lies within {dist:e} of the pole {pole}")]
    Pole { sigma: String, pole: String, dist: f64 },
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("root for mode {k} left the localization ball: |nu| = {nu_abs} > {radius}")]
    Localization { k: usize, nu_abs: f64, radius: f64 },
    #[error("hyperbolicity violated: {stable} stable and {unstable} unstable eigenvalues for size {n}")]
    Hyperbolicity { stable: usize, unstable: usize, n: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Dimension { what, got, expected });
    }
    Ok(())
}
