use thiserror::Error;

/// Errors raised by the state, detector and scan machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar parameter fell outside its physical domain.
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("mode index {index} out of range for a {n_modes}-mode state")]
    ModeIndex { index: usize, n_modes: usize },
    #[error("operation requires a single-mode state, got {0} modes")]
    NotSingleMode(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("quadrature did not converge: estimated error {estimate:e} > target {target:e}")]
    Quadrature { estimate: f64, target: f64 },
    #[error("rate evaluation failed: {0}")]
    Rate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}
