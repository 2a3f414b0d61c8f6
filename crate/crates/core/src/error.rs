use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Dimension mismatch or otherwise ill-formed linear program.
    #[error("malformed linear program: {0}")]
    MalformedProgram(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("negative probability {value} at {at}")]
    NegativeEntry { at: String, value: String },

    #[error("context {context} is not normalized (sum = {sum})")]
    NotNormalized { context: String, sum: String },

    #[error("behavior is signalling (max marginal violation {max_violation})")]
    Signalling { max_violation: f64 },

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    /// The LP solved but the result contradicts the model (e.g. an
    /// optimization over a non-empty polytope reported infeasible).
    #[error("solver failure: {0}")]
    Solver(String),

    #[error("catalog integrity check failed: {0}")]
    Integrity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Solver(_) | Error::MalformedProgram(_) => 2,
            _ => 1,
        }
    }
}
