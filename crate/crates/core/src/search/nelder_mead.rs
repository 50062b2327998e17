//! Nelder-Mead simplex search with threshold accepting.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{Bounds, CalibrationExperiment, Method, Score, SearchConfig, SearchObjective, TrajectoryPoint};
use crate::SimRng;

/// How the acceptance threshold shrinks over the iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdSchedule {
    /// Plain Nelder-Mead.
    Zero,
    /// `tau0 * (r^(k-1) - r^(K-1)) / (1 - r^(K-1))` at iteration `k` of `K`:
    /// starts at `tau0` (a fraction of the initial simplex's objective spread)
    /// and reaches exactly zero at the last iteration.
    Geometric { initial_fraction: f64, ratio: f64 },
}

impl Default for ThresholdSchedule {
    fn default() -> Self {
        ThresholdSchedule::Geometric {
            initial_fraction: 0.1,
            ratio: 0.95,
        }
    }
}

/// Threshold at iteration `k` (1-based) of `total`.
pub fn threshold_at(schedule: &ThresholdSchedule, tau0: f64, k: usize, total: usize) -> f64 {
    match *schedule {
        ThresholdSchedule::Zero => 0.0,
        ThresholdSchedule::Geometric { ratio, .. } => {
            if total <= 1 || k >= total {
                return 0.0;
            }
            let end = ratio.powi(total as i32 - 1);
            let t = (ratio.powi(k as i32 - 1) - end) / (1.0 - end);
            tau0 * t.max(0.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NelderMeadConfig {
    pub iterations: usize,
    pub schedule: ThresholdSchedule,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig {
            iterations: 100,
            schedule: ThresholdSchedule::default(),
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

struct Vertex {
    x: Vec<f64>,
    score: Score,
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t * (b - a)
    a.iter().zip(b).map(|(ai, bi)| ai + t * (bi - ai)).collect()
}

/// Minimize `objective` from a random simplex of `bounds.len() + 1` vertices
/// drawn inside `bounds`. Iterates are free to leave the box; the objective's
/// `project` keeps them valid.
pub fn nelder_mead_ta<O: SearchObjective + ?Sized>(
    objective: &O,
    bounds: &[Bounds],
    config: &NelderMeadConfig,
    seed: u64,
) -> CalibrationExperiment {
    let n = bounds.len();
    let mut rng = SimRng::seed_from_u64(seed);
    let mut evaluations = 0usize;

    let eval = |x: &mut Vec<f64>, evaluations: &mut usize| -> Score {
        objective.project(x);
        *evaluations += 1;
        objective.evaluate(x)
    };

    let mut starts: Vec<Vec<f64>> = (0..=n)
        .map(|_| bounds.iter().map(|b| b.lerp(rng.random::<f64>())).collect())
        .collect();
    for x in starts.iter_mut() {
        objective.project(x);
    }
    let scores = objective.evaluate_batch(&starts);
    evaluations += starts.len();
    let mut simplex: Vec<Vertex> = starts
        .into_iter()
        .zip(scores)
        .map(|(x, score)| Vertex { x, score })
        .collect();

    let tau0 = match config.schedule {
        ThresholdSchedule::Zero => 0.0,
        ThresholdSchedule::Geometric { initial_fraction, .. } => {
            let ok: Vec<f64> = simplex
                .iter()
                .filter(|v| !v.score.penalized)
                .map(|v| v.score.value)
                .collect();
            if ok.len() < 2 {
                0.0
            } else {
                let (lo, hi) = ok
                    .iter()
                    .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
                initial_fraction * (hi - lo)
            }
        }
    };

    let sort = |s: &mut Vec<Vertex>| s.sort_by(|a, b| a.score.value.total_cmp(&b.score.value));
    sort(&mut simplex);
    let mut best = (simplex[0].x.clone(), simplex[0].score);
    let mut trajectory = vec![TrajectoryPoint {
        iteration: 0,
        best_objective: best.1.value,
        best_params: best.0.clone(),
        threshold: tau0,
    }];

    for k in 1..=config.iterations {
        let tau = threshold_at(&config.schedule, tau0, k, config.iterations);
        let worst = simplex[n].score.value;
        let second = simplex[n.saturating_sub(1)].score.value;
        let lowest = simplex[0].score.value;
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v.x[j]).sum::<f64>() / n as f64)
            .collect();

        let mut xr = affine(&centroid, &simplex[n].x, -config.reflection);
        let fr = eval(&mut xr, &mut evaluations);

        let mut replacement = None;
        if fr.value < lowest {
            let mut xe = affine(&centroid, &simplex[n].x, -config.expansion);
            let fe = eval(&mut xe, &mut evaluations);
            replacement = Some(if fe.value < fr.value { (xe, fe) } else { (xr, fr) });
        } else if fr.value <= second + tau {
            replacement = Some((xr, fr));
        } else if fr.value < worst {
            let mut xc = affine(&centroid, &xr, config.contraction);
            let fc = eval(&mut xc, &mut evaluations);
            if fc.value <= fr.value + tau {
                replacement = Some((xc, fc));
            }
        } else {
            let mut xc = affine(&centroid, &simplex[n].x, config.contraction);
            let fc = eval(&mut xc, &mut evaluations);
            if fc.value < worst + tau {
                replacement = Some((xc, fc));
            }
        }

        match replacement {
            Some((x, score)) => simplex[n] = Vertex { x, score },
            None => {
                let anchor = simplex[0].x.clone();
                let mut moved: Vec<Vec<f64>> = simplex[1..]
                    .iter()
                    .map(|v| affine(&anchor, &v.x, config.shrink))
                    .collect();
                for x in moved.iter_mut() {
                    objective.project(x);
                }
                let scores = objective.evaluate_batch(&moved);
                evaluations += moved.len();
                for (v, (x, score)) in simplex[1..].iter_mut().zip(moved.into_iter().zip(scores)) {
                    *v = Vertex { x, score };
                }
            }
        }
        sort(&mut simplex);
        if simplex[0].score.value < best.1.value {
            best = (simplex[0].x.clone(), simplex[0].score);
        }
        trajectory.push(TrajectoryPoint {
            iteration: k,
            best_objective: best.1.value,
            best_params: best.0.clone(),
            threshold: tau,
        });
    }

    CalibrationExperiment {
        method: Method::NelderMeadTa,
        config: SearchConfig::NelderMead(*config),
        seed,
        parameters: (0..n).map(|i| format!("x{i}")).collect(),
        trajectory,
        final_params: best.0,
        final_objective: best.1.value,
        final_penalized: best.1.penalized,
        evaluations,
    }
}
