use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {x} outside [-1, 1]")]
    Domain { x: f64 },

    #[error("point {x} outside the interval [{lo}, {hi}]")]
    OutOfInterval { x: f64, lo: f64, hi: f64 },

    #[error("index {name}={value} out of range (max {max})")]
    Index {
        name: &'static str,
        value: usize,
        max: usize,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// More variance maxima tie than a degree-J basis allows; the
    /// finitely-many-maxima assumption does not hold.
    #[error("degenerate variance plateau: {count} tied maxima at value {value}")]
    DegeneratePlateau { value: f64, count: usize },

    #[error("variance maximum at interior point {t} or with vanishing derivative")]
    UnsupportedMaximum { t: f64 },

    #[error("conditional derivative variance d^2 = {d2} <= 0 at t = {t}")]
    DegenerateDerivative { t: f64, d2: f64 },

    #[error("level set for delta = {delta} is not an interval ({crossings} crossings)")]
    LevelSetNotInterval { delta: f64, crossings: usize },

    #[error("r11(t, t) = {value} <= 0 at t = {t}")]
    NonPositiveR11 { t: f64, value: f64 },

    #[error("density is not strictly positive at x = {x} (value {value})")]
    NonPositiveDensity { x: f64, value: f64 },

    #[error("no sample points inside [{lo}, {hi}]")]
    EmptySample { lo: f64, hi: f64 },

    #[error("quadrature did not converge (error estimate {estimate:e})")]
    Quadrature { estimate: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
