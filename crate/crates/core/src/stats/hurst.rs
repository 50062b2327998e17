use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_HURST_LEN: usize = 100;

/// Lag range of the first-order structure function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HurstConfig {
    pub min_tau: usize,
    pub max_tau: usize,
}

impl Default for HurstConfig {
    fn default() -> Self {
        HurstConfig {
            min_tau: 1,
            max_tau: 19,
        }
    }
}

pub fn generalized_hurst(series: &[f64]) -> Result<f64> {
    generalized_hurst_with(series, &HurstConfig::default())
}

/// Generalized Hurst exponent for `q = 1`.
///
/// `K(tau) = mean_t |x(t + tau) - x(t)|` for each lag in the configured range;
/// the exponent is the least-squares slope of `ln K(tau)` against `ln tau`.
pub fn generalized_hurst_with(series: &[f64], config: &HurstConfig) -> Result<f64> {
    let needed = MIN_HURST_LEN.max(config.max_tau + 2);
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            got: series.len(),
        });
    }
    let min_tau = config.min_tau.max(1);
    if config.max_tau <= min_tau {
        return Err(Error::InvalidParameter {
            name: "max_tau",
            value: config.max_tau as f64,
            reason: "needs at least two lags",
        });
    }

    let mut xs = Vec::with_capacity(config.max_tau - min_tau + 1);
    let mut ys = Vec::with_capacity(xs.capacity());
    for tau in min_tau..=config.max_tau {
        let n = series.len() - tau;
        let k = series.windows(tau + 1).map(|w| (w[tau] - w[0]).abs()).sum::<f64>() / n as f64;
        if !(k > 0.0) {
            return Err(Error::DegenerateSeries("flat structure function"));
        }
        xs.push((tau as f64).ln());
        ys.push(k.ln());
    }
    Ok(ols_slope(&xs, &ys))
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    use rand_pcg::Pcg64Mcg;

    #[test]
    fn linear_trend_has_unit_exponent() {
        for c in [1e-4, 0.5, -3.0] {
            let x: Vec<f64> = (0..1000).map(|t| c * t as f64).collect();
            assert!((generalized_hurst(&x).unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn brownian_paths_are_diffusive() {
        let mut rng = Pcg64Mcg::seed_from_u64(31);
        let mut total = 0.0;
        for _ in 0..100 {
            let mut x = 0.0;
            let path: Vec<f64> = (0..10_000)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x += z;
                    x
                })
                .collect();
            total += generalized_hurst(&path).unwrap();
        }
        let h = total / 100.0;
        assert!((h - 0.5).abs() < 0.03, "{h}");
    }

    #[test]
    fn constant_input_is_degenerate() {
        let x = vec![2.0; 300];
        assert!(matches!(generalized_hurst(&x), Err(Error::DegenerateSeries(_))));
    }

    #[test]
    fn too_short() {
        let x: Vec<f64> = (0..50).map(f64::from).collect();
        assert!(matches!(generalized_hurst(&x), Err(Error::SeriesTooShort { .. })));
    }

    proptest! {
        #[test]
        fn affine_invariance(seed in 0u64..500, scale in 0.01f64..100.0, shift in -1e3f64..1e3) {
            let mut rng = Pcg64Mcg::seed_from_u64(seed);
            let mut acc = 0.0;
            let x: Vec<f64> = (0..300).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); acc += z; acc }).collect();
            let y: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            let (hx, hy) = (generalized_hurst(&x).unwrap(), generalized_hurst(&y).unwrap());
            prop_assert!((hx - hy).abs() < 1e-8);
        }
    }
}
