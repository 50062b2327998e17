use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// `mean +/- t* * s / sqrt(n)` with `n - 1` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub mean: f64,
    /// `s / sqrt(n)` with the sample (n - 1) standard deviation.
    pub std_err: f64,
    pub n: usize,
}

impl ConfidenceInterval {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.upper + self.lower)
    }
}

/// Two-sided Student-t critical value for `level` coverage.
pub fn t_critical(level: f64, dof: usize) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter {
            name: "level",
            value: level,
            reason: "must lie in (0, 1)",
        });
    }
    let t = StudentsT::new(0.0, 1.0, dof as f64).map_err(|_| Error::InvalidParameter {
        name: "dof",
        value: dof as f64,
        reason: "must be positive",
    })?;
    Ok(t.inverse_cdf(0.5 + level / 2.0))
}

pub fn confidence_interval(samples: &[f64], level: f64) -> Result<ConfidenceInterval> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::SeriesTooShort { needed: 2, got: n });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let std_err = (var / n as f64).sqrt();
    let half = t_critical(level, n - 1)? * std_err;
    Ok(ConfidenceInterval {
        lower: mean - half,
        upper: mean + half,
        mean,
        std_err,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_critical_values() {
        assert!((t_critical(0.95, 1).unwrap() - 12.706).abs() < 1e-3);
        assert!((t_critical(0.95, 19).unwrap() - 2.093).abs() < 1e-3);
        assert!((t_critical(0.95, 7).unwrap() - 2.365).abs() < 1e-3);
    }

    #[test]
    fn constant_samples_give_point_interval() {
        let ci = confidence_interval(&[3.5; 8], 0.95).unwrap();
        assert_eq!((ci.lower, ci.upper, ci.std_err), (3.5, 3.5, 0.0));
    }

    #[test]
    fn two_samples() {
        let ci = confidence_interval(&[0.0, 2.0], 0.95).unwrap();
        assert_eq!(ci.mean, 1.0);
        assert!((ci.std_err - 1.0).abs() < 1e-15);
        assert!((ci.half_width() - 12.7062).abs() < 1e-3);
    }

    #[test]
    fn reported_nm_lambda0_row_half_width() {
        // Reported interval [137.3818, 190.9182] with s / sqrt(n) = 12.7892 over 20 runs.
        let half = t_critical(0.95, 19).unwrap() * 12.7892;
        assert!((half - 26.77).abs() < 0.01, "{half}");
        assert!((half - 0.5 * (190.9182 - 137.3818)).abs() < 0.01);
    }

    #[test]
    fn hand_computed_interval() {
        let x = [1.0, 2.0, 4.0, 7.0, 11.0, 16.0, 22.0, 29.0];
        let mean = 92.0 / 8.0;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 7.0;
        let se = (var / 8.0).sqrt();
        let ci = confidence_interval(&x, 0.95).unwrap();
        assert!((ci.std_err - se).abs() < 1e-12);
        assert!((ci.lower - (mean - 2.364624251592785 * se)).abs() < 1e-9);
    }

    #[test]
    fn needs_two_samples() {
        assert!(confidence_interval(&[1.0], 0.95).is_err());
    }
}
