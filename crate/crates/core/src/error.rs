use thiserror::Error;

use crate::book::{Side, TickPrice};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An insertion would leave the best bid at or above the best ask.
    #[error("{side:?} limit at {price} would cross the book (opposite best {opposite})")]
    CrossedBook {
        side: Side,
        price: TickPrice,
        opposite: TickPrice,
    },

    #[error("taker probability variance is zero; placement depth is undefined")]
    DegenerateVariance,

    #[error("degenerate series: {0}")]
    DegenerateSeries(&'static str),

    #[error("series too short: need at least {needed} points, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("no {0:?} reference price in the book")]
    MissingReference(Side),

    #[error("weight matrix inversion failed even after regularization")]
    SingularMatrix,

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("line {line}: timestamp {timestamp} precedes the previous record")]
    OutOfOrder { line: u64, timestamp: i64 },

    #[error("day {day} has no quotes inside the session window")]
    EmptySession { day: i64 },

    #[error("experiments cannot be aggregated: {0}")]
    Incompatible(String),
}

impl Error {
    /// Data problems (bad input files) versus numeric failures.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::OutOfOrder { .. } | Error::EmptySession { .. } | Error::Incompatible(_)
        )
    }
}
