use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("empty input: no data rows")]
    EmptyInput,

    #[error(
        "record at row {row} ({module_id}) has no actual label; a labeled test set is required"
    )]
    MissingActual { row: usize, module_id: String },

    #[error("no predicted-clean modules: false omission rate is undefined")]
    NoPredictedClean,

    /// A parameter lies outside its model domain.
    #[error("domain error in `{parameter}`: {message}")]
    Domain { parameter: String, message: String },

    /// The misclassification probability is not strictly inside (0, 1); the
    /// test set needs at least one false negative and one true negative.
    #[error("assumption violated: misclassification probability p = {p} must satisfy 0 < p < 1 (needs at least one false negative and one true negative)")]
    DegenerateProbability { p: f64 },

    #[error("k = {k} out of range 0..={l}")]
    OutOfRange { k: u64, l: u64 },

    #[error(
        "quadrature did not converge: best estimate {estimate:e}, error bound {error_bound:e}"
    )]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("audit mismatch: {0}")]
    EventMismatch(String),

    #[error("unknown plot quantity `{0}` (expected hazard, reliability, bound_t1, bound_t2 or exact_tail)")]
    UnknownQuantity(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(parameter: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Domain {
            parameter: parameter.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by malformed input text rather than bad parameters.
    pub fn is_parse_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::EmptyInput
                | Error::MissingActual { .. }
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}
