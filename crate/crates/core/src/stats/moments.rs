use serde::{Deserialize, Serialize};

use super::hurst::{generalized_hurst_with, HurstConfig};
use super::ks::ks_statistic;
use crate::error::{Error, Result};

pub const MIN_MOMENT_LEN: usize = 30;

/// Summary statistics of a log-price series, in fixed order
/// (mean, std, kurtosis, KS, Hurst).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub mean: f64,
    pub std: f64,
    pub kurtosis: f64,
    pub ks: f64,
    pub hurst: f64,
}

impl MomentVector {
    pub const NAMES: [&'static str; 5] = ["m1", "m2", "m3", "m_ks", "m4"];

    pub fn to_array(&self) -> [f64; 5] {
        [self.mean, self.std, self.kurtosis, self.ks, self.hurst]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        MomentVector {
            mean: a[0],
            std: a[1],
            kurtosis: a[2],
            ks: a[3],
            hurst: a[4],
        }
    }

    /// CSV header plus one row per vector, columns in `NAMES` order.
    pub fn write_csv<W: std::io::Write>(mut out: W, rows: &[MomentVector]) -> std::io::Result<()> {
        writeln!(out, "{}", Self::NAMES.join(","))?;
        for r in rows {
            let a = r.to_array();
            writeln!(out, "{},{},{},{},{}", a[0], a[1], a[2], a[3], a[4])?;
        }
        Ok(())
    }

    /// Component-wise mean of several vectors.
    pub fn average(vectors: &[MomentVector]) -> Option<MomentVector> {
        if vectors.is_empty() {
            return None;
        }
        let mut acc = [0.0; 5];
        for v in vectors {
            for (a, x) in acc.iter_mut().zip(v.to_array()) {
                *a += x;
            }
        }
        Some(Self::from_array(acc.map(|a| a / vectors.len() as f64)))
    }
}

/// Whether level-based moments are taken on the series itself or on its
/// first differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentBasis {
    #[default]
    Levels,
    Returns,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentConfig {
    pub hurst: HurstConfig,
    /// Basis for the std and kurtosis components; mean, KS and Hurst always
    /// use levels.
    pub basis: MomentBasis,
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (x.len() as f64 - 1.0)).sqrt()
}

/// Raw (Pearson) kurtosis `m4 / m2^2` with population central moments.
pub fn kurtosis(x: &[f64]) -> Result<f64> {
    let m = mean(x);
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in x {
        let d = (v - m) * (v - m);
        m2 += d;
        m4 += d * d;
    }
    let n = x.len() as f64;
    let (m2, m4) = (m2 / n, m4 / n);
    if !(m2 > 0.0) {
        return Err(Error::DegenerateSeries("zero variance"));
    }
    Ok(m4 / (m2 * m2))
}

pub fn moments(series: &[f64], empirical: &[f64]) -> Result<MomentVector> {
    moments_with(series, empirical, &MomentConfig::default())
}

pub fn moments_with(series: &[f64], empirical: &[f64], config: &MomentConfig) -> Result<MomentVector> {
    if series.len() < MIN_MOMENT_LEN {
        return Err(Error::SeriesTooShort {
            needed: MIN_MOMENT_LEN,
            got: series.len(),
        });
    }
    if empirical.is_empty() {
        return Err(Error::SeriesTooShort { needed: 1, got: 0 });
    }
    let returns: Vec<f64>;
    let shape = match config.basis {
        MomentBasis::Levels => series,
        MomentBasis::Returns => {
            returns = series.windows(2).map(|w| w[1] - w[0]).collect();
            &returns
        }
    };
    let kurtosis = kurtosis(shape)?;
    Ok(MomentVector {
        mean: mean(series),
        std: std_dev(shape),
        kurtosis,
        ks: ks_statistic(series, empirical),
        hurst: generalized_hurst_with(series, &config.hurst)?,
    })
}
