//! Agent-based limit-order-book market model and the tooling to calibrate it
//! by the method of simulated moments.
//!
//! - [`book`]: unit-size limit order book.
//! - [`model`]: liquidity providers, liquidity takers and the Monte Carlo loop.
//! - [`stats`]: moments, KS statistic, generalized Hurst exponent, ACF,
//!   trade classification and confidence intervals.
//! - [`objective`]: simulated-moments objective with a bootstrap weight matrix.
//! - [`search`]: Nelder-Mead with threshold accepting, a genetic algorithm,
//!   Sobol surface scans and experiment aggregation.
//! - [`data`]: tick ingestion, session filtering and one-minute bars.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod book;
pub mod calibrate;
pub mod data;
pub mod error;
pub mod model;
pub mod objective;
pub mod search;
pub mod stats;

pub use error::{Error, Result};

/// Random generator used for every seeded stream in the crate.
pub type SimRng = rand_pcg::Pcg64Mcg;
