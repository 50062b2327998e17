use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample autocorrelation at lags `1..=max_lag` with the 95% white-noise band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfReport {
    /// `values[k - 1]` is the autocorrelation at lag `k`.
    pub values: Vec<f64>,
    /// Half-width `1.96 / sqrt(n)`.
    pub noise_band: f64,
    /// Number of observations the band refers to.
    pub n: usize,
}

impl AcfReport {
    pub fn at(&self, lag: usize) -> f64 {
        self.values[lag - 1]
    }

    pub fn is_significant(&self, lag: usize) -> bool {
        self.at(lag).abs() > self.noise_band
    }

    /// Fraction of lags in `lags` whose value lies inside the band.
    pub fn fraction_inside(&self, lags: std::ops::RangeInclusive<usize>) -> f64 {
        let total = lags.clone().count();
        let inside = lags.filter(|&k| !self.is_significant(k)).count();
        inside as f64 / total as f64
    }
}

impl AcfReport {
    /// CSV rows `lag,acf,noise_band`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lag,acf,noise_band")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{},{}", k + 1, v, self.noise_band)?;
        }
        Ok(())
    }
}

pub(crate) fn noise_band(n: usize) -> f64 {
    1.96 / (n as f64).sqrt()
}

/// Biased sample autocorrelation `sum (x_t - m)(x_{t+k} - m) / sum (x_t - m)^2`.
///
/// A constant series has zero variance; it reports an autocorrelation of one
/// at every lag.
pub fn acf(x: &[f64], max_lag: usize) -> Result<AcfReport> {
    if max_lag == 0 {
        return Err(Error::InvalidParameter {
            name: "max_lag",
            value: 0.0,
            reason: "must be at least one",
        });
    }
    if x.len() <= max_lag {
        return Err(Error::SeriesTooShort {
            needed: max_lag + 1,
            got: x.len(),
        });
    }
    let n = x.len();
    let m = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let denom: f64 = d.iter().map(|v| v * v).sum();
    let values = if denom > 0.0 {
        (1..=max_lag)
            .map(|k| d[..n - k].iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / denom)
            .collect()
    } else {
        vec![1.0; max_lag]
    };
    Ok(AcfReport {
        values,
        noise_band: noise_band(n),
        n,
    })
}

/// Average autocorrelation over an ensemble of sign series.
///
/// Each series contributes its own ACF; the band is that of a single series of
/// the ensemble's mean length. Series shorter than `max_lag + 1` are skipped.
pub fn ensemble_acf(series: &[Vec<i8>], max_lag: usize) -> Result<AcfReport> {
    let mut sum = vec![0.0; max_lag];
    let mut used = 0usize;
    let mut total_len = 0usize;
    for s in series {
        if s.len() <= max_lag {
            continue;
        }
        let x: Vec<f64> = s.iter().map(|&v| v as f64).collect();
        let r = acf(&x, max_lag)?;
        for (a, v) in sum.iter_mut().zip(&r.values) {
            *a += v;
        }
        used += 1;
        total_len += s.len();
    }
    if used == 0 {
        return Err(Error::SeriesTooShort {
            needed: max_lag + 1,
            got: series.iter().map(Vec::len).max().unwrap_or(0),
        });
    }
    let n = total_len / used;
    Ok(AcfReport {
        values: sum.into_iter().map(|v| v / used as f64).collect(),
        noise_band: noise_band(n),
        n,
    })
}
