use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("impossible outcome: probability {probability:.3e}{}", step_suffix(*step))]
    ImpossibleOutcome { probability: f64, step: Option<usize> },

    #[error("truncation failure: tail mass {tail:.3e} exceeds {limit:.3e}")]
    Truncation { tail: f64, limit: f64 },

    #[error("mode index {index} out of range for a {modes}-mode state")]
    InvalidMode { index: usize, modes: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("joint dimension {dim} exceeds the memory budget of {budget}")]
    ResourceLimit { dim: usize, budget: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is not positive (minimum eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("state cannot be normalized (norm {0:.3e})")]
    Unnormalizable(f64),

    #[error("no convergence: {0}")]
    Convergence(String),
}

fn step_suffix(step: Option<usize>) -> String {
    step.map(|s| format!(" at step {s}")).unwrap_or_default()
}

impl Error {
    /// Attach a cascade step index to an impossible-outcome error.
    pub fn at_step(self, index: usize) -> Self {
        match self {
            Error::ImpossibleOutcome { probability, .. } => Error::ImpossibleOutcome {
                probability,
                step: Some(index),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
