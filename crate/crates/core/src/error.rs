use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("invalid degree {degree}: {reason}")]
    Degree { degree: usize, reason: &'static str },
    #[error("unsupported quadrature order {0} (supported: 1..={max})", max = crate::quadrature::MAX_ORDER)]
    QuadratureOrder(usize),
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },
    #[error("manufactured case {case} requires {expected}, got {actual}")]
    CaseMismatch {
        case: &'static str,
        expected: String,
        actual: String,
    },
    #[error("invalid time configuration: {0}")]
    TimeConfig(String),
    #[error("linear solver failed: {0}")]
    Solver(String),
    #[error("non-finite value in transient state at t = {0}")]
    NonFinite(f64),
    #[error("penalty too small: {0}")]
    Coercivity(String),
    #[error("invalid convergence data: {0}")]
    Rates(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
