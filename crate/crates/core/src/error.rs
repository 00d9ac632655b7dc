use thiserror::Error;

pub type Result<T> = std::result::Result<T, GoatError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GoatError {
    #[error("dimension mismatch in {context}: {left} vs {right}")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("time {t} outside [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },

    #[error("derivative of order {order} requested at piece boundary t = {t}")]
    BoundaryDerivative { t: f64, order: usize },

    #[error("index {index} out of range for {what} (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("Taylor step too large: last term {residual:e} exceeds tolerance {tolerance:e}")]
    StepTooLarge { residual: f64, tolerance: f64 },

    #[error("propagation failed to converge at t = {t}: step underflow, last residual {residual:e}")]
    NonConvergence { t: f64, residual: f64 },

    #[error("overlap modulus {modulus:e} too small for a gradient")]
    SingularOverlap { modulus: f64 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GoatError {
    fn from(e: std::io::Error) -> Self {
        GoatError::Io(e.to_string())
    }
}
