use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure categories surfaced by every estimator.
///
/// The categories map one-to-one onto the process exit codes of the
/// command-line front end (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid settings: bad budget, unsupported parameter, malformed input space.
    #[error("configuration error: {0}")]
    Config(String),

    /// Unknown builtin model name.
    #[error("unknown builtin model `{0}` (known: ishigami, gfunction, linear, product, constant)")]
    Registry(String),

    /// The model failed while evaluating row `row` of a batch.
    #[error("evaluation error at row {row}: {message}")]
    Evaluation { row: usize, message: String },

    /// Given-data mode forbids new model evaluations.
    #[error("given-data error: {0}")]
    GivenData(String),

    /// The method's assumptions do not hold for this input (dependence, alignment, ...).
    #[error("method precondition violated: {0}")]
    Precondition(String),

    /// No conference matrix is available for the requested order.
    #[error("construction error: {0}")]
    Construction(String),

    /// Model fitting cannot proceed.
    #[error("fit error: {0}")]
    Fit(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// Exit code used by the CLI: 2 config, 3 evaluation, 4 method precondition.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Registry(_) | Error::Construction(_) => 2,
            Error::Evaluation { .. } | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 3,
            Error::GivenData(_) | Error::Precondition(_) | Error::Fit(_) => 4,
        }
    }
}
