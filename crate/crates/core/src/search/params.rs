use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Smallest placement depth an optimizer iterate is clamped to.
pub const MIN_LAMBDA0: f64 = 1e-3;

/// The six calibrated parameters; the agent count stays fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeParam {
    Delta,
    Lambda0,
    CLambda,
    DeltaS,
    Alpha,
    Mu,
}

impl FreeParam {
    pub const ALL: [FreeParam; 6] = [
        FreeParam::Delta,
        FreeParam::Lambda0,
        FreeParam::CLambda,
        FreeParam::DeltaS,
        FreeParam::Alpha,
        FreeParam::Mu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FreeParam::Delta => "delta",
            FreeParam::Lambda0 => "lambda0",
            FreeParam::CLambda => "c_lambda",
            FreeParam::DeltaS => "delta_s",
            FreeParam::Alpha => "alpha",
            FreeParam::Mu => "mu",
        }
    }

    pub fn get(self, p: &ModelParams) -> f64 {
        match self {
            FreeParam::Delta => p.delta,
            FreeParam::Lambda0 => p.lambda0,
            FreeParam::CLambda => p.c_lambda as f64,
            FreeParam::DeltaS => p.delta_s,
            FreeParam::Alpha => p.alpha,
            FreeParam::Mu => p.mu,
        }
    }

    /// Set the parameter from a continuous value, clamped to physical
    /// validity; the depth coefficient is rounded to an integer.
    pub fn set(self, p: &mut ModelParams, value: f64) {
        let v = self.clamp_physical(value);
        match self {
            FreeParam::Delta => p.delta = v,
            FreeParam::Lambda0 => p.lambda0 = v,
            FreeParam::CLambda => p.c_lambda = v.round() as u32,
            FreeParam::DeltaS => p.delta_s = v,
            FreeParam::Alpha => p.alpha = v,
            FreeParam::Mu => p.mu = v,
        }
    }

    /// Physical clamp only; integer rounding happens in [`FreeParam::set`].
    pub fn clamp_physical(self, value: f64) -> f64 {
        let v = if value.is_nan() { 0.0 } else { value };
        match self {
            FreeParam::Lambda0 => v.clamp(MIN_LAMBDA0, f64::MAX),
            FreeParam::CLambda => v.clamp(0.0, u32::MAX as f64),
            _ => v.clamp(0.0, 1.0),
        }
    }
}

impl fmt::Display for FreeParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FreeParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let p = match key.as_str() {
            "delta" => FreeParam::Delta,
            "lambda0" | "lambda_0" => FreeParam::Lambda0,
            "c_lambda" | "clambda" => FreeParam::CLambda,
            "delta_s" | "deltas" => FreeParam::DeltaS,
            "alpha" => FreeParam::Alpha,
            "mu" => FreeParam::Mu,
            _ => {
                return Err(Error::Parse {
                    line: 0,
                    reason: format!("unknown parameter `{s}`"),
                })
            }
        };
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidParameter {
                name: "bounds",
                value: lower,
                reason: "lower must be finite and below upper",
            });
        }
        Ok(Bounds { lower, upper })
    }

    pub fn range(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }

    /// Map `u` in `[0, 1]` onto the interval.
    pub fn lerp(&self, u: f64) -> f64 {
        self.lower + u * self.range()
    }
}

/// Per-parameter intervals. For the simplex search these only seed the
/// initial vertices; the genetic algorithm keeps genes inside them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamBounds {
    pub delta: Bounds,
    pub lambda0: Bounds,
    pub c_lambda: Bounds,
    pub delta_s: Bounds,
    pub alpha: Bounds,
    pub mu: Bounds,
}

impl Default for ParamBounds {
    fn default() -> Self {
        let b = |lower, upper| Bounds { lower, upper };
        ParamBounds {
            delta: b(0.0, 0.1),
            lambda0: b(0.0, 200.0),
            c_lambda: b(0.0, 20.0),
            delta_s: b(0.0, 0.1),
            alpha: b(0.1, 0.5),
            mu: b(0.0, 0.1),
        }
    }
}

impl ParamBounds {
    pub fn get(&self, p: FreeParam) -> Bounds {
        match p {
            FreeParam::Delta => self.delta,
            FreeParam::Lambda0 => self.lambda0,
            FreeParam::CLambda => self.c_lambda,
            FreeParam::DeltaS => self.delta_s,
            FreeParam::Alpha => self.alpha,
            FreeParam::Mu => self.mu,
        }
    }

    pub fn set(&mut self, p: FreeParam, b: Bounds) {
        match p {
            FreeParam::Delta => self.delta = b,
            FreeParam::Lambda0 => self.lambda0 = b,
            FreeParam::CLambda => self.c_lambda = b,
            FreeParam::DeltaS => self.delta_s = b,
            FreeParam::Alpha => self.alpha = b,
            FreeParam::Mu => self.mu = b,
        }
    }

    pub fn for_params(&self, params: &[FreeParam]) -> Vec<Bounds> {
        params.iter().map(|&p| self.get(p)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for p in FreeParam::ALL {
            let b = self.get(p);
            Bounds::new(b.lower, b.upper)?;
        }
        Ok(())
    }
}

/// `base` with the named parameters replaced by `values`.
pub fn apply_params(base: &ModelParams, params: &[FreeParam], values: &[f64]) -> ModelParams {
    let mut out = *base;
    for (&p, &v) in params.iter().zip(values) {
        p.set(&mut out, v);
    }
    out
}

pub fn extract_params(p: &ModelParams, params: &[FreeParam]) -> Vec<f64> {
    params.iter().map(|f| f.get(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ranges() {
        let b = ParamBounds::default();
        assert_eq!((b.alpha.lower, b.alpha.upper), (0.1, 0.5));
        assert_eq!(b.lambda0.upper, 200.0);
        assert_eq!(b.c_lambda.upper, 20.0);
        b.validate().unwrap();
    }

    #[test]
    fn set_rounds_and_clamps() {
        let mut p = ModelParams::default();
        FreeParam::CLambda.set(&mut p, 32.6);
        assert_eq!(p.c_lambda, 33);
        FreeParam::CLambda.set(&mut p, -4.0);
        assert_eq!(p.c_lambda, 0);
        FreeParam::Alpha.set(&mut p, 1.3);
        assert_eq!(p.alpha, 1.0);
        FreeParam::Lambda0.set(&mut p, -1.0);
        assert_eq!(p.lambda0, MIN_LAMBDA0);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn names_round_trip() {
        for p in FreeParam::ALL {
            assert_eq!(p.name().parse::<FreeParam>().unwrap(), p);
        }
        assert_eq!("C-Lambda".parse::<FreeParam>().unwrap(), FreeParam::CLambda);
        assert!("gamma".parse::<FreeParam>().is_err());
    }

    #[test]
    fn inverted_bounds_rejected() {
        assert!(Bounds::new(1.0, 1.0).is_err());
        assert!(Bounds::new(2.0, 1.0).is_err());
    }

    #[test]
    fn apply_then_extract() {
        let base = ModelParams::default();
        let ps = [FreeParam::Lambda0, FreeParam::CLambda];
        let p = apply_params(&base, &ps, &[180.0, 33.0]);
        assert_eq!(extract_params(&p, &ps), vec![180.0, 33.0]);
        assert_eq!(p.delta, base.delta);
    }
}
