use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can surface. Variants carry the index, column or
/// field that triggered them so callers can report a location.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid bandwidth {value} (must be finite and > 0)")]
    InvalidBandwidth { value: f64 },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("local design is rank deficient at observation {index}")]
    RankDeficient { index: usize },

    #[error("kernel weights vanish around observation {index} (bandwidth too small)")]
    DegenerateWindow { index: usize },

    #[error("degenerate residuals: {0}")]
    DegenerateResiduals(String),

    #[error("regressor column {column} has zero spread")]
    DegenerateRegressor { column: usize },

    #[error("bandwidth selector failed: {0}")]
    SelectorFailure(String),

    #[error("sampler initialisation failed: {0}")]
    Initialization(String),

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("marginal likelihood undefined: {0}")]
    EvidenceUndefined(String),

    #[error("unstable estimate: {0}")]
    UnstableEstimate(String),

    #[error("Bayes factor {0} < 1; orient the comparison so the favoured model comes first")]
    Orientation(f64),

    #[error("evaluation failed at point {index}: {reason}")]
    Evaluation { index: usize, reason: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_bandwidth(value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidBandwidth { value })
    }
}
