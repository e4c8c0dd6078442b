use thiserror::Error;

/// Errors raised while building, solving or post-processing a filter model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A value violated a precondition of the operation it was passed to.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Coupling matrix entries `(i, j)` and `(j, i)` differ by more than the tolerance.
    #[error("coupling matrix is not symmetric at ({i}, {j}): |{a} - {b}| exceeds 1e-12")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },

    /// A shifted frequency `omega + k * omega_m` is zero or negative in rigorous mode.
    #[error("spectral singularity at {freq_hz} Hz: harmonic k = {harmonic} has non-positive frequency {shifted_hz} Hz")]
    SpectralSingularity { freq_hz: f64, harmonic: i32, shifted_hz: f64 },

    /// The nodal admittance matrix is singular or too ill-conditioned to trust.
    #[error("singular system at {freq_hz} Hz (condition estimate {condition:.3e})")]
    Singular { freq_hz: f64, condition: f64 },

    /// The transient oracle did not reach a periodic steady state.
    #[error("transient did not settle at {freq_hz} Hz: window-to-window change {change:.3e} after {windows} windows")]
    NotSettled { freq_hz: f64, change: f64, windows: usize },

    /// Malformed design file or option.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// `true` for errors caused by bad input rather than numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::Asymmetric { .. } | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
