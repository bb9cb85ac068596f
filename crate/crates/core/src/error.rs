use thiserror::Error;

use crate::lognorm::LogNorm;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cannot parse {what} from {text:?}")]
    Parse { what: &'static str, text: String },

    #[error("denominator {0} is divisible by the prime; only unit denominators are accepted")]
    NonUnitDenominator(String),

    #[error("prime or precision mismatch: {0}")]
    ContextMismatch(String),

    #[error("division by an exact zero")]
    DivisionByZero,

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("element is not a certified unit: {0}")]
    NotAUnit(String),

    #[error("endomorphism is not contractive, cannot bound the image of a truncation tail")]
    NotContractive,

    #[error("inadmissible endomorphism: {0}")]
    Inadmissible(String),

    #[error("level {level} is not admissible: {reason}")]
    LevelNotAdmissible { level: LogNorm, reason: String },

    #[error("exponent {exponent} lies outside the window [{min}, {max}]")]
    OutsideWindow { exponent: i64, min: i64, max: i64 },

    #[error("deformation plan does not match the operator: {0}")]
    PlanMismatch(String),

    #[error("no decay certificate at order {order}: {reason}")]
    NotConvergentAtOrderK { order: usize, reason: String },

    #[error("logarithm does not converge: {0}")]
    LogDivergent(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            what: "json document",
            text: e.to_string(),
        }
    }
}
