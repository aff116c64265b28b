use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("point {point} is not a point of the {n}-point grid")]
    OffGrid { point: String, n: usize },

    #[error("malformed symbol: {0}")]
    MalformedSymbol(String),

    #[error("malformed measure: {0}")]
    MalformedMeasure(String),

    /// Two independently computed quantities disagree beyond tolerance.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("scenario error at `{path}`: {reason}")]
    Scenario { path: String, reason: String },
}

impl LabError {
    pub fn is_invariant_violation(&self) -> bool {
        matches!(self, LabError::Invariant(_))
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
