use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: Bloch vector norm {norm} exceeds 1")]
    InvalidState { norm: f64 },

    /// An operation that needs a strictly separated spectrum got a (nearly)
    /// repeated eigenvalue.
    #[error("degenerate spectrum: eigenvalues {lambda:?} are not strictly separated")]
    DegenerateSpectrum { lambda: [f64; 3] },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
