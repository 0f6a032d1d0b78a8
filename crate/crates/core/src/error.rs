use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("expected {expected} weights for demand levels 0..={dbar}, got {got}")]
    SupportLength {
        dbar: usize,
        expected: usize,
        got: usize,
    },

    #[error("negative probability {value} at demand level {level}")]
    NegativeProbability { level: usize, value: f64 },

    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },

    #[error("demand level {level} is outside the support 0..={dbar}")]
    LevelOutOfRange { level: usize, dbar: usize },

    #[error("no demand observations recorded")]
    NoObservations,

    #[error("distributions have different supports (0..={left} vs 0..={right})")]
    SupportMismatch { left: usize, right: usize },

    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("burn-in search for kappa = {kappa} exceeded {cap} periods")]
    TauCapExceeded { kappa: f64, cap: u64 },

    #[error("period {t} needs the previous period's demand")]
    MissingDemand { t: usize },

    #[error("empty input")]
    Empty,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
