use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site {site} out of range for a chain of {num_sites} sites")]
    SiteOutOfRange { site: usize, num_sites: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("matrix is not unitary (‖U†U − 1‖_F = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("empty region")]
    EmptyRegion,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("system too large: {what} = {value} exceeds limit {limit}")]
    TooLarge {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("Lanczos did not converge after {iterations} matvecs (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("incompatible partition: {0}")]
    IncompatiblePartition(String),

    #[error("wrong campaign kind: expected {expected}, got {actual}")]
    WrongKind { expected: String, actual: String },

    #[error("malformed campaign: {0}")]
    MalformedCampaign(String),

    #[error("norm drift {drift:e} exceeds tolerance {tolerance:e}")]
    NormDrift { drift: f64, tolerance: f64 },

    #[error("degenerate fit input: {0}")]
    DegenerateFit(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
