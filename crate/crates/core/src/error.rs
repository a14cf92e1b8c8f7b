use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("jet order must be at least 1 to carry derivative information")]
    ZeroOrder,

    #[error("requested derivative of total order {requested} but the jet is truncated at order {order}")]
    Truncation { requested: usize, order: usize },

    #[error("domain error in {op}: argument value {value}")]
    Domain { op: &'static str, value: f64 },

    #[error("invalid chart point: {0}")]
    InvalidPoint(String),

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("variable `{name}` at offset {offset} is out of range for dimension {dim}")]
    VariableOutOfRange {
        name: String,
        offset: usize,
        dim: usize,
    },

    #[error("invalid metric spec: {0}")]
    Spec(String),

    #[error("fundamental function is not positive (L = {value}) at x = {x:?}, y = {y:?}")]
    NonPositiveL { value: f64, x: Vec<f64>, y: Vec<f64> },

    #[error("Randers convexity violated: a-norm of b is {norm} (must be < 1) at x = {x:?}")]
    RandersConvexity { norm: f64, x: Vec<f64> },

    #[error("metric not positive-definite at point x = {x:?}, y = {y:?}")]
    NotPositiveDefinite { x: Vec<f64>, y: Vec<f64> },

    #[error("connection process not defined: {0}")]
    Process(String),

    #[error("sampling aborted after {attempts} attempts ({accepted} admissible points): {last}")]
    SamplingExhausted {
        attempts: usize,
        accepted: usize,
        last: String,
    },
}

impl Error {
    /// True for errors that mean "this point lies outside the metric's
    /// admissible domain", as opposed to malformed input.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::InvalidPoint(_)
                | Error::NonPositiveL { .. }
                | Error::RandersConvexity { .. }
                | Error::NotPositiveDefinite { .. }
        )
    }
}
