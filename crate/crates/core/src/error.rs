use thiserror::Error;

pub type Result<T> = std::result::Result<T, TomoError>;

#[derive(Debug, Error)]
pub enum TomoError {
    #[error("Pauli vector of length {norm} lies outside the Bloch ball")]
    NonPhysicalState { norm: f64 },

    #[error("statistical operator is not positive (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("invalid measurement frame: {0}")]
    InvalidFrame(String),

    #[error("rotation axis has zero length")]
    ZeroAxis,

    #[error("no clicks recorded")]
    EmptyData,

    #[error("axis {axis} of the six-outcome device recorded no clicks")]
    EmptyAxis { axis: char },

    #[error("root finding for the Lagrange multiplier failed: {0}")]
    NoRoot(String),

    #[error("outcome {outcome} was observed but its fitted probability is zero")]
    AllZeroProb { outcome: usize },

    #[error("kappa vanishes; the error-function approximation does not apply")]
    KappaZero,

    #[error("Fisher information is singular (some outcome probability is zero)")]
    SingularInformation,

    #[error("formula not applicable: {0}")]
    Domain(String),

    #[error("post-measurement state undefined for outcome {outcome} (probability {prob:e})")]
    UndefinedPostState { outcome: usize, prob: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl TomoError {
    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            TomoError::NoRoot(_)
                | TomoError::AllZeroProb { .. }
                | TomoError::SingularInformation
                | TomoError::KappaZero
                | TomoError::UndefinedPostState { .. }
        )
    }
}
