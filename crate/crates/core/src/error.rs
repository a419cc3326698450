use std::fmt;

/// Errors raised by training, prediction, validation and persistence.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A response or prediction lies outside the domain of the loss family.
    #[error("{loss}: {what} = {value} is outside the valid domain ({expected})")]
    Domain {
        loss: &'static str,
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// A second derivative (or node hessian sum) that is not strictly positive.
    #[error("non-positive hessian {value} at {location}")]
    Convexity { value: f64, location: Location },

    /// The response admits no finite constant minimizer.
    #[error("degenerate response for {loss}: {reason}")]
    DegenerateResponse { loss: &'static str, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("feature arity mismatch: expected {expected} features, got {actual}")]
    Arity { expected: usize, actual: usize },

    /// Training aborted part way through boosting.
    #[error("training aborted at iteration {iteration}: {source}")]
    Training {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed data at row {row}, column {column}: {message}")]
    Data {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported model file version: {0}")]
    UnsupportedVersion(String),

    #[error("malformed model file at line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for loss-domain and convexity failures, including those wrapped in a training abort.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Domain { .. } | Error::Convexity { .. } | Error::DegenerateResponse { .. } => {
                true
            }
            Error::Training { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

/// Where a convexity failure was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Row(usize),
    Node,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Row(i) => write!(f, "row {i}"),
            Location::Node => f.write_str("node"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
