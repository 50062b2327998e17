//! Real-coded genetic algorithm over a bounded box.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Bounds, CalibrationExperiment, Method, Score, SearchConfig, SearchObjective, TrajectoryPoint};
use crate::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneticConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of each gene's range.
    pub mutation_scale: f64,
    pub elitism: usize,
}

impl Default for GeneticConfig {
    fn default() -> Self {
        GeneticConfig {
            population: 100,
            generations: 50,
            tournament: 3,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_scale: 0.1,
            elitism: 1,
        }
    }
}

fn tournament<'a, R: Rng>(pop: &'a [(Vec<f64>, Score)], k: usize, rng: &mut R) -> &'a [f64] {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..k.max(1) {
        let c = &pop[rng.random_range(0..pop.len())];
        if c.1.value < best.1.value {
            best = c;
        }
    }
    &best.0
}

fn best_of(pop: &[(Vec<f64>, Score)]) -> &(Vec<f64>, Score) {
    pop.iter()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value))
        .expect("non-empty population")
}

/// Minimize `objective` with genes kept inside `bounds`.
pub fn genetic_algorithm<O: SearchObjective + ?Sized>(
    objective: &O,
    bounds: &[Bounds],
    config: &GeneticConfig,
    seed: u64,
) -> CalibrationExperiment {
    let pop_size = config.population.max(2);
    let elites = config.elitism.min(pop_size);
    let mut rng = SimRng::seed_from_u64(seed);
    let normals: Vec<Normal<f64>> = bounds
        .iter()
        .map(|b| Normal::new(0.0, config.mutation_scale * b.range()).expect("finite scale"))
        .collect();

    let initial: Vec<Vec<f64>> = (0..pop_size)
        .map(|_| bounds.iter().map(|b| b.lerp(rng.random::<f64>())).collect())
        .collect();
    let scores = objective.evaluate_batch(&initial);
    let mut evaluations = initial.len();
    let mut pop: Vec<(Vec<f64>, Score)> = initial.into_iter().zip(scores).collect();

    let record = |generation: usize, pop: &[(Vec<f64>, Score)]| {
        let b = best_of(pop);
        TrajectoryPoint {
            iteration: generation,
            best_objective: b.1.value,
            best_params: b.0.clone(),
            threshold: 0.0,
        }
    };
    let mut trajectory = vec![record(0, &pop)];

    for generation in 1..=config.generations {
        let mut ranked: Vec<usize> = (0..pop.len()).collect();
        ranked.sort_by(|&a, &b| pop[a].1.value.total_cmp(&pop[b].1.value));
        let mut next: Vec<(Vec<f64>, Score)> = ranked[..elites].iter().map(|&i| pop[i].clone()).collect();

        let mut children: Vec<Vec<f64>> = Vec::with_capacity(pop_size - elites);
        while children.len() < pop_size - elites {
            let a = tournament(&pop, config.tournament, &mut rng).to_vec();
            let b = tournament(&pop, config.tournament, &mut rng).to_vec();
            let (mut c1, mut c2) = (a.clone(), b.clone());
            if rng.random::<f64>() < config.crossover_rate {
                for j in 0..bounds.len() {
                    if rng.random::<bool>() {
                        c1[j] = b[j];
                        c2[j] = a[j];
                    }
                }
            }
            for c in [&mut c1, &mut c2] {
                for (j, g) in c.iter_mut().enumerate() {
                    if rng.random::<f64>() < config.mutation_rate {
                        *g += normals[j].sample(&mut rng);
                    }
                    *g = bounds[j].clamp(*g);
                }
            }
            children.push(c1);
            if children.len() < pop_size - elites {
                children.push(c2);
            }
        }
        let scores = objective.evaluate_batch(&children);
        evaluations += children.len();
        next.extend(children.into_iter().zip(scores));
        pop = next;
        trajectory.push(record(generation, &pop));
    }

    let best = best_of(&pop).clone();
    CalibrationExperiment {
        method: Method::Genetic,
        config: SearchConfig::Genetic(*config),
        seed,
        parameters: (0..bounds.len()).map(|i| format!("x{i}")).collect(),
        trajectory,
        final_params: best.0,
        final_objective: best.1.value,
        final_penalized: best.1.penalized,
        evaluations,
    }
}
