//! Statistics for the objective and the order-flow diagnostics.

mod acf;
mod ci;
mod hurst;
mod ks;
mod lee_ready;
mod moments;

pub use acf::{acf, ensemble_acf, AcfReport};
pub use ci::{confidence_interval, t_critical, ConfidenceInterval};
pub use hurst::{generalized_hurst, generalized_hurst_with, HurstConfig};
pub use ks::ks_statistic;
pub use lee_ready::{classify_trade_signs, ClassifiedSigns, LeeReadyConfig};
pub use moments::{
    kurtosis, mean, moments, moments_with, std_dev, MomentBasis, MomentConfig, MomentVector, MIN_MOMENT_LEN,
};
