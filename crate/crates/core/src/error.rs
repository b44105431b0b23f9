use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("({0}, {1}) is not a valid element of W: entries must be coprime and not both zero")]
    NotCoprime(i64, i64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("zero base has no real power")]
    ZeroBase,
    #[error("pole: matrix is singular at {0}")]
    Pole(String),
    #[error("point {0} is not in the upper half-plane")]
    NotInUpperHalfPlane(String),
    #[error("tail bound {bound:e} exceeds requested tolerance {tolerance:e}")]
    TailBound { bound: f64, tolerance: f64 },
    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),
    #[error("series shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("series leading coefficient must be 1")]
    NotGroupLike,
    #[error("relation violated: {0}")]
    RelationViolated(String),
    #[error("path midpoint mismatch: {0}")]
    MidpointMismatch(String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonConvergence(_) | Error::TailBound { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
