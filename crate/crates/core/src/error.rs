use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error in {function}: {detail}")]
    Domain { function: &'static str, detail: String },

    /// A precondition on grids, spans or parameters was not met.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An invalid physical parameter (negative optical depth, zero width...).
    #[error("invalid parameter `{name}` = {value}: {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// Iterative fit did not converge; carries the best iterate.
    #[error("fit did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergent {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    /// Spectral content of a pulse exceeds the frequency grid of a transfer function.
    #[error("pulse bandwidth exceeds transfer-function grid: need span >= {required_span_hz:.6e} Hz, have {available_span_hz:.6e} Hz")]
    BandwidthOverflow {
        required_span_hz: f64,
        available_span_hz: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        function,
        detail: detail.into(),
    }
}
