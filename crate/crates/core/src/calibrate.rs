//! Model calibration: the simulated-moments objective wired into the search
//! routines.

use std::io::Write;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{simulate, ModelParams, RunConfig};
use crate::objective::{evaluate, Evaluation, ObjectiveSpec};
use crate::search::{
    apply_params, genetic_algorithm, nelder_mead_ta, surface_scan, CalibrationExperiment, FreeParam, GeneticConfig,
    NelderMeadConfig, ParamBounds, Score, SearchConfig, SearchObjective, SurfaceRow,
};
use crate::stats::MomentVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub params: ModelParams,
    pub evaluation: Evaluation,
}

/// The objective seen as a function of a subset of the parameters, the rest
/// held at `base`.
pub struct ModelObjective<'a> {
    pub spec: &'a ObjectiveSpec,
    pub base: ModelParams,
    pub free: Vec<FreeParam>,
    log: Option<Mutex<Vec<EvaluationRecord>>>,
}

impl<'a> ModelObjective<'a> {
    pub fn new(spec: &'a ObjectiveSpec, base: ModelParams, free: Vec<FreeParam>) -> Self {
        ModelObjective {
            spec,
            base,
            free,
            log: None,
        }
    }

    /// Keep every evaluation, in evaluation order.
    pub fn with_log(mut self) -> Self {
        self.log = Some(Mutex::new(Vec::new()));
        self
    }

    pub fn params_at(&self, x: &[f64]) -> ModelParams {
        apply_params(&self.base, &self.free, x)
    }

    fn score(&self, params: &ModelParams) -> (Score, Evaluation) {
        let ev = evaluate(params, self.spec);
        (
            Score {
                value: ev.value,
                penalized: ev.penalized,
            },
            ev,
        )
    }

    fn record(&self, params: ModelParams, evaluation: Evaluation) {
        if let Some(log) = &self.log {
            log.lock()
                .expect("log lock")
                .push(EvaluationRecord { params, evaluation });
        }
    }

    pub fn take_log(&mut self) -> Vec<EvaluationRecord> {
        self.log
            .as_mut()
            .map(|l| std::mem::take(l.get_mut().expect("log lock")))
            .unwrap_or_default()
    }
}

impl SearchObjective for ModelObjective<'_> {
    fn evaluate(&self, x: &[f64]) -> Score {
        let params = self.params_at(x);
        let (s, ev) = self.score(&params);
        self.record(params, ev);
        s
    }

    fn project(&self, x: &mut [f64]) {
        for (v, p) in x.iter_mut().zip(&self.free) {
            *v = p.clamp_physical(*v);
        }
    }

    fn evaluate_batch(&self, xs: &[Vec<f64>]) -> Vec<Score> {
        let results: Vec<(ModelParams, Score, Evaluation)> = xs
            .par_iter()
            .map(|x| {
                let params = self.params_at(x);
                let (s, ev) = self.score(&params);
                (params, s, ev)
            })
            .collect();
        results
            .into_iter()
            .map(|(params, s, ev)| {
                self.record(params, ev);
                s
            })
            .collect()
    }
}

/// Name the coordinates and report the depth coefficient as the integer
/// actually simulated.
fn finish(mut exp: CalibrationExperiment, free: &[FreeParam]) -> CalibrationExperiment {
    exp.parameters = free.iter().map(|p| p.name().to_string()).collect();
    let fix = |x: &mut Vec<f64>| {
        for (v, p) in x.iter_mut().zip(free) {
            *v = p.clamp_physical(*v);
            if *p == FreeParam::CLambda {
                *v = v.round();
            }
        }
    };
    fix(&mut exp.final_params);
    for t in exp.trajectory.iter_mut() {
        fix(&mut t.best_params);
    }
    exp
}

/// Search over `free` (the rest fixed at `base`) with either method. The
/// evaluation log is returned when `log` is set, in evaluation order.
pub fn calibrate(
    spec: &ObjectiveSpec,
    base: &ModelParams,
    free: &[FreeParam],
    bounds: &ParamBounds,
    method: &SearchConfig,
    seed: u64,
    log: bool,
) -> (CalibrationExperiment, Vec<EvaluationRecord>) {
    let mut obj = ModelObjective::new(spec, *base, free.to_vec());
    if log {
        obj = obj.with_log();
    }
    let b = bounds.for_params(free);
    let exp = match method {
        SearchConfig::NelderMead(c) => nelder_mead_ta(&obj, &b, c, seed),
        SearchConfig::Genetic(c) => genetic_algorithm(&obj, &b, c, seed),
    };
    (finish(exp, free), obj.take_log())
}

/// Simplex search over all six parameters, initialized inside `bounds`.
pub fn calibrate_nm(
    spec: &ObjectiveSpec,
    base: &ModelParams,
    bounds: &ParamBounds,
    config: &NelderMeadConfig,
    seed: u64,
) -> CalibrationExperiment {
    let method = SearchConfig::NelderMead(*config);
    calibrate(spec, base, &FreeParam::ALL, bounds, &method, seed, false).0
}

/// Genetic search over `free`, the remaining parameters fixed at `base`.
pub fn calibrate_ga(
    spec: &ObjectiveSpec,
    base: &ModelParams,
    free: &[FreeParam],
    bounds: &ParamBounds,
    config: &GeneticConfig,
    seed: u64,
) -> CalibrationExperiment {
    calibrate(spec, base, free, bounds, &SearchConfig::Genetic(*config), seed, false).0
}

/// Independent experiments, one per seed, returned in seed order.
pub fn run_experiments<F>(seeds: &[u64], run: F) -> Vec<CalibrationExperiment>
where
    F: Fn(u64) -> CalibrationExperiment + Sync,
{
    seeds.par_iter().map(|&s| run(s)).collect()
}

/// Objective over a Sobol design in the pair's bounds, other parameters at
/// `base`.
pub fn model_surface(
    spec: &ObjectiveSpec,
    base: &ModelParams,
    pair: [FreeParam; 2],
    bounds: &ParamBounds,
    n: usize,
) -> Vec<SurfaceRow> {
    let obj = ModelObjective::new(spec, *base, pair.to_vec());
    surface_scan(
        |x, y| obj.evaluate(&[x, y]),
        [bounds.get(pair[0]), bounds.get(pair[1])],
        n,
    )
}

/// Log-price bars simulated at `params`, to stand in for empirical data.
pub fn pseudo_empirical(params: &ModelParams, config: &RunConfig) -> Result<Vec<f64>> {
    Ok(simulate(params, config)?.log_prices)
}

/// CSV of an evaluation log: parameters, objective, penalty flag, then the
/// five moments of each replication (empty when that replication failed).
pub fn write_evaluation_log<W: Write>(mut out: W, records: &[EvaluationRecord]) -> std::io::Result<()> {
    let reps = records
        .iter()
        .map(|r| r.evaluation.replications.len())
        .max()
        .unwrap_or(0);
    let mut header: Vec<String> = FreeParam::ALL.iter().map(|p| p.name().to_string()).collect();
    header.push("objective".into());
    header.push("penalized".into());
    for i in 0..reps {
        header.extend(MomentVector::NAMES.iter().map(|m| format!("rep{i}_{m}")));
    }
    writeln!(out, "{}", header.join(","))?;
    for r in records {
        let mut row: Vec<String> = FreeParam::ALL.iter().map(|p| p.get(&r.params).to_string()).collect();
        row.push(r.evaluation.value.to_string());
        row.push(r.evaluation.penalized.to_string());
        for i in 0..reps {
            match r.evaluation.replications.get(i).copied().flatten() {
                Some(m) => row.extend(m.to_array().iter().map(|v| v.to_string())),
                None => row.extend(std::iter::repeat_n(String::new(), 5)),
            }
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
