use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seven model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Agents per type (providers and takers).
    pub n_agents: u32,
    /// Per-order cancellation probability per step.
    pub delta: f64,
    /// Initial placement depth, in ticks.
    pub lambda0: f64,
    /// Placement depth coefficient.
    pub c_lambda: u32,
    /// Increment of the taker buy-probability walk.
    pub delta_s: f64,
    /// Provider activation frequency.
    pub alpha: f64,
    /// Taker activation frequency.
    pub mu: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            n_agents: 250,
            delta: 0.025,
            lambda0: 100.0,
            c_lambda: 10,
            delta_s: 0.001,
            alpha: 0.15,
            mu: 0.025,
        }
    }
}

impl ModelParams {
    /// Best parameter set reported by the Nelder-Mead calibration runs.
    pub fn calibrated() -> Self {
        ModelParams {
            n_agents: 250,
            delta: 0.0733,
            lambda0: 180.0,
            c_lambda: 33,
            delta_s: 0.0328,
            alpha: 0.2129,
            mu: 0.0653,
        }
    }

    pub fn new(
        n_agents: u32,
        delta: f64,
        lambda0: f64,
        c_lambda: u32,
        delta_s: f64,
        alpha: f64,
        mu: f64,
    ) -> Result<Self> {
        let p = ModelParams {
            n_agents,
            delta,
            lambda0,
            c_lambda,
            delta_s,
            alpha,
            mu,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::InvalidParameter {
                name: "n_agents",
                value: 0.0,
                reason: "must be positive",
            });
        }
        for (name, value) in [
            ("delta", self.delta),
            ("delta_s", self.delta_s),
            ("alpha", self.alpha),
            ("mu", self.mu),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must lie in [0, 1]",
                });
            }
        }
        if !(self.lambda0 > 0.0 && self.lambda0.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda0",
                value: self.lambda0,
                reason: "must be positive and finite",
            });
        }
        Ok(())
    }

    /// Limit orders per step, `floor(alpha * N_A)`.
    pub fn provider_orders_per_step(&self) -> usize {
        (self.alpha * self.n_agents as f64 + 1e-9).floor() as usize
    }

    /// Market orders per step, `floor(mu * N_A)`.
    pub fn taker_orders_per_step(&self) -> usize {
        (self.mu * self.n_agents as f64 + 1e-9).floor() as usize
    }
}

/// How many orders each agent class submits per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationMode {
    /// Exactly `floor(rate * N_A)` orders per step.
    #[default]
    Exact,
    /// Each of the `N_A` agents is active independently with probability `rate`.
    Bernoulli,
}

/// Which reference prices the initialization steps price against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitReference {
    /// `p_a = p_b = p0` for all initialization steps.
    #[default]
    Fixed,
    /// Live best quotes, falling back to `p0` for an empty side.
    Updating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Number of standard Monte Carlo steps.
    pub steps: usize,
    /// Initial price in ticks.
    pub p0: u32,
    pub seed: u64,
    /// Length of the taker-walk pre-pass used to estimate its variance.
    pub q_var_steps: usize,
    /// Currency per tick, applied before taking logs.
    pub tick_size: f64,
    pub init_steps: usize,
    pub activation: ActivationMode,
    pub init_reference: InitReference,
    pub cancel_during_init: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            steps: 2300,
            p0: 24_700,
            seed: 0,
            q_var_steps: 100_000,
            tick_size: 1.0,
            init_steps: 10,
            activation: ActivationMode::Exact,
            init_reference: InitReference::Fixed,
            cancel_during_init: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidParameter {
                name: "steps",
                value: 0.0,
                reason: "must be positive",
            });
        }
        if self.p0 == 0 {
            return Err(Error::InvalidParameter {
                name: "p0",
                value: 0.0,
                reason: "must be at least one tick",
            });
        }
        if !(self.tick_size > 0.0 && self.tick_size.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "tick_size",
                value: self.tick_size,
                reason: "must be positive",
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_values() {
        let p = ModelParams::default();
        assert_eq!(p.n_agents, 250);
        assert_eq!((p.delta, p.lambda0, p.c_lambda), (0.025, 100.0, 10));
        assert_eq!((p.delta_s, p.alpha, p.mu), (0.001, 0.15, 0.025));
    }

    #[test]
    fn orders_per_step() {
        let d = ModelParams::default();
        assert_eq!(d.provider_orders_per_step(), 37);
        assert_eq!(d.taker_orders_per_step(), 6);
        let c = ModelParams::calibrated();
        assert_eq!(c.provider_orders_per_step(), 53);
        assert_eq!(c.taker_orders_per_step(), 16);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ModelParams::new(250, 1.5, 100.0, 10, 0.001, 0.15, 0.025).is_err());
        assert!(ModelParams::new(250, 0.1, 0.0, 10, 0.001, 0.15, 0.025).is_err());
        assert!(ModelParams::new(0, 0.1, 10.0, 10, 0.001, 0.15, 0.025).is_err());
        assert!(ModelParams::new(250, 0.1, 10.0, 10, 0.0, 0.15, 0.025).is_ok());
    }
}
