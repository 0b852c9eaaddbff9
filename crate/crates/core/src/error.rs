use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid problem instance: {0}")]
    InvalidInstance(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("bisection did not converge after {iterations} iterations (bracket [{lo:e}, {hi:e}])")]
    NonConvergence { lo: f64, hi: f64, iterations: usize },

    #[error("root bracketing failed: {0}")]
    Bracket(String),

    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate start: f(x_0) = f_* leaves the performance ratio undefined")]
    DegenerateStart,

    #[error("function family incompatible with the class: {0}")]
    IncompatibleFamily(String),

    #[error("eigensolver failed: {0}")]
    Eigen(String),
}
