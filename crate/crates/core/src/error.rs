use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("fields live on different geometries")]
    GeometryMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at column {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("division by zero at node ({x1}, {x2})")]
    DivisionByZero { x1: f64, x2: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("no convergence in {context} after {iterations} iterations")]
    NonConvergence { context: String, iterations: usize },

    #[error("eps0 = lambda_eta - |h|_inf is not positive ({0})")]
    NonPositiveEps0(f64),

    #[error("sigma out of range: {0}")]
    BadSigma(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("mu-curve shape not found: {0}")]
    ShapeNotFound(String),

    #[error("solution collapsed at q = {q}: {detail}")]
    Collapse { q: f64, detail: String },

    #[error("norms diverge at q = {q}: {detail}")]
    DivergingNorms { q: f64, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable short name used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGeometry(_) => "InvalidGeometry",
            Error::GeometryMismatch => "GeometryMismatch",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Parse { .. } => "ParseError",
            Error::DivisionByZero { .. } => "DivisionByZero",
            Error::NonFinite(_) => "NonFinite",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::NonPositiveEps0(_) => "NonPositiveEps0",
            Error::BadSigma(_) => "BadSigma",
            Error::HypothesisViolated(_) => "HypothesisViolated",
            Error::ShapeNotFound(_) => "ShapeNotFound",
            Error::Collapse { .. } => "Collapse",
            Error::DivergingNorms { .. } => "DivergingNorms",
            Error::Config(_) => "ConfigError",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
