use thiserror::Error;

use crate::spaces::Regime;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("degenerate regime: {reason}")]
    Regime { regime: Regime, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("infeasible input: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("unknown check id `{0}`")]
    UnknownCheck(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_exponent(name: &'static str, value: f64) -> Result<()> {
    if value.is_nan() || value < 1.0 {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "exponent must be >= 1",
        });
    }
    Ok(())
}

pub(crate) fn check_finite_exponent(name: &'static str, value: f64) -> Result<()> {
    check_exponent(name, value)?;
    if !value.is_finite() {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "exponent must be finite",
        });
    }
    Ok(())
}
