//! Derivative-free search over model parameters and objective-surface
//! exploration.

mod aggregate;
mod genetic;
mod nelder_mead;
mod params;
mod sobol;
mod surface;

pub use aggregate::{aggregate_experiments, write_ci_table, CiRow};
pub use genetic::{genetic_algorithm, GeneticConfig};
pub use nelder_mead::{nelder_mead_ta, threshold_at, NelderMeadConfig, ThresholdSchedule};
pub use params::{apply_params, extract_params, Bounds, FreeParam, ParamBounds, MIN_LAMBDA0};
pub use sobol::{sobol_2d, Sobol2d};
pub use surface::{flatness, minimum_region, quantile, surface_scan, write_surface, MinimumRegion, SurfaceRow};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// An objective value and whether it is a penalty stand-in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub penalized: bool,
}

impl Score {
    pub fn ok(value: f64) -> Self {
        Score {
            value,
            penalized: false,
        }
    }
}

/// Something a search routine can minimize.
pub trait SearchObjective: Sync {
    fn evaluate(&self, x: &[f64]) -> Score;

    /// Pull a candidate back to the valid domain before it is evaluated.
    fn project(&self, _x: &mut [f64]) {}

    /// Evaluate several points; results are in input order.
    fn evaluate_batch(&self, xs: &[Vec<f64>]) -> Vec<Score> {
        xs.par_iter().map(|x| self.evaluate(x)).collect()
    }
}

/// Adapter for a plain function of the search vector.
pub struct FnObjective<F>(pub F);

impl<F> SearchObjective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> Score {
        Score::ok((self.0)(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "NM-TA")]
    NelderMeadTa,
    #[serde(rename = "GA")]
    Genetic,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::NelderMeadTa => "NM-TA",
            Method::Genetic => "GA",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub best_objective: f64,
    pub best_params: Vec<f64>,
    /// Acceptance threshold in force (zero for the genetic algorithm).
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchConfig {
    NelderMead(NelderMeadConfig),
    Genetic(GeneticConfig),
}

/// One search run: its settings, how the best point evolved, and the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationExperiment {
    pub method: Method,
    pub config: SearchConfig,
    pub seed: u64,
    /// Labels of the search coordinates, in order.
    pub parameters: Vec<String>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub final_params: Vec<f64>,
    pub final_objective: f64,
    pub final_penalized: bool,
    pub evaluations: usize,
}

impl CalibrationExperiment {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.parameters
            .iter()
            .position(|p| p == name)
            .map(|i| self.final_params[i])
    }
}
