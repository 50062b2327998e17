//! Taker buy-probability walk and the placement-depth process it drives.

use rand::distr::Open01;
use rand::Rng;

use crate::error::{Error, Result};

/// Current taker buy probability and the pre-estimated mean squared deviation
/// of that probability from one half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TakerState {
    pub q_taker: f64,
    pub q_var: f64,
}

impl TakerState {
    pub fn new(q_var: f64) -> Self {
        TakerState { q_taker: 0.5, q_var }
    }
}

/// One step of the mean-reverting walk.
///
/// With probability `1/2 + |q - 1/2|` the walk moves `delta_s` toward one
/// half, otherwise away from it. At exactly one half the direction is a fair
/// coin. The result is clamped to `[0, 1]`.
pub fn step_q_taker<R: Rng + ?Sized>(q: f64, delta_s: f64, rng: &mut R) -> f64 {
    let dev = q - 0.5;
    let u: f64 = rng.random();
    let up = if dev == 0.0 {
        u < 0.5
    } else {
        let toward = u < 0.5 + dev.abs();
        // toward one half means down when above it
        toward == (dev < 0.0)
    };
    let next = if up { q + delta_s } else { q - delta_s };
    next.clamp(0.0, 1.0)
}

/// Mean of `(q - 1/2)^2` along a walk of `steps` steps started at one half.
pub fn estimate_q_variance<R: Rng + ?Sized>(delta_s: f64, steps: usize, rng: &mut R) -> f64 {
    if delta_s == 0.0 || steps == 0 {
        return 0.0;
    }
    let mut q = 0.5;
    let mut acc = 0.0;
    for _ in 0..steps {
        q = step_q_taker(q, delta_s, rng);
        acc += (q - 0.5) * (q - 0.5);
    }
    acc / steps as f64
}

/// `lambda(t) = lambda0 * (1 + |q - 1/2| / sqrt(q_var) * C_lambda)`.
pub fn placement_depth(lambda0: f64, c_lambda: u32, q_taker: f64, q_var: f64) -> Result<f64> {
    if !(q_var > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    Ok(lambda0 * (1.0 + (q_taker - 0.5).abs() / q_var.sqrt() * c_lambda as f64))
}

/// `floor(-lambda * ln(u))` for a given uniform `u` in (0, 1].
pub fn eta_from_uniform(lambda_t: f64, u: f64) -> i64 {
    let eta = (-lambda_t * u.ln()).floor();
    if eta >= i64::MAX as f64 {
        i64::MAX
    } else {
        eta as i64
    }
}

/// Exponential integer offset with mean depth `lambda_t`; `u` is drawn from the
/// open unit interval so the logarithm is always finite.
pub fn draw_eta<R: Rng + ?Sized>(lambda_t: f64, rng: &mut R) -> i64 {
    let u: f64 = rng.sample(Open01);
    eta_from_uniform(lambda_t, u)
}
