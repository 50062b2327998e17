//! Method-of-simulated-moments objective.
//!
//! The objective of a parameter set is `e' W e`, where `e` is the gap between
//! the replication-averaged simulated moments and the empirical moments, and
//! `W` is the regularized inverse covariance of the moments under a circular
//! block bootstrap of the empirical series.

use nalgebra::{Matrix5, SymmetricEigen, Vector5};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{align_scale, PriceAlignment};
use crate::error::{Error, Result};
use crate::model::{simulate, ActivationMode, InitReference, ModelParams, RunConfig};
use crate::stats::{moments_with, MomentConfig, MomentVector};
use crate::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSource {
    pub block_len: usize,
    pub resamples: usize,
    pub seed: u64,
    /// Resamples whose moments were undefined and were left out.
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub matrix: [[f64; 5]; 5],
    pub ridge: f64,
    pub source: Option<BootstrapSource>,
}

impl WeightMatrix {
    pub fn identity() -> Self {
        Self::from_matrix(Matrix5::identity(), 0.0)
    }

    fn from_matrix(m: Matrix5<f64>, ridge: f64) -> Self {
        let mut matrix = [[0.0; 5]; 5];
        for (i, row) in matrix.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = m[(i, j)];
            }
        }
        WeightMatrix {
            matrix,
            ridge,
            source: None,
        }
    }

    fn as_matrix(&self) -> Matrix5<f64> {
        Matrix5::from_fn(|i, j| self.matrix[i][j])
    }

    /// Invert `cov + ridge * trace(cov) / 5 * I`, symmetrized.
    pub fn from_covariance(cov: [[f64; 5]; 5], ridge: f64) -> Result<Self> {
        let sigma = Matrix5::from_fn(|i, j| 0.5 * (cov[i][j] + cov[j][i]));
        let shift = ridge * sigma.trace() / 5.0;
        let regularized = sigma + Matrix5::identity() * shift;
        let inv = regularized.try_inverse().ok_or(Error::SingularMatrix)?;
        let w = 0.5 * (inv + inv.transpose());
        if !w.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularMatrix);
        }
        // Roundoff can leave tiny negative eigenvalues on near-singular input.
        let eig = SymmetricEigen::new(w);
        let w = if eig.eigenvalues.iter().any(|&l| l < 0.0) {
            let clamped = eig.eigenvalues.map(|l| l.max(0.0));
            eig.eigenvectors * Matrix5::from_diagonal(&clamped) * eig.eigenvectors.transpose()
        } else {
            w
        };
        Ok(Self::from_matrix(0.5 * (w + w.transpose()), ridge))
    }

    pub fn quadratic_form(&self, e: &[f64; 5]) -> f64 {
        let v = Vector5::from_column_slice(e);
        (v.transpose() * self.as_matrix() * v)[(0, 0)]
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..5).map(|i| self.matrix[i][i]).fold(f64::MIN, f64::max)
    }

    pub fn eigenvalues(&self) -> [f64; 5] {
        let e = SymmetricEigen::new(self.as_matrix()).eigenvalues;
        [e[0], e[1], e[2], e[3], e[4]]
    }

    /// Objective value substituted for parameter sets whose simulation or
    /// moments are undefined.
    pub fn penalty(&self) -> f64 {
        1e6 * (1.0 + self.max_diagonal())
    }
}

/// One circular-block-bootstrap resample of `series`.
pub fn circular_block_resample<R: Rng + ?Sized>(series: &[f64], block_len: usize, rng: &mut R) -> Vec<f64> {
    let n = series.len();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let start = rng.random_range(0..n);
        for k in 0..block_len.min(n - out.len()) {
            out.push(series[(start + k) % n]);
        }
    }
    out
}

/// Sample covariance (n - 1) of a set of moment vectors.
pub fn moment_covariance(samples: &[MomentVector]) -> [[f64; 5]; 5] {
    let n = samples.len() as f64;
    let mean = MomentVector::average(samples).map_or([0.0; 5], |m| m.to_array());
    let mut cov = [[0.0; 5]; 5];
    for s in samples {
        let a = s.to_array();
        for i in 0..5 {
            for j in 0..5 {
                cov[i][j] += (a[i] - mean[i]) * (a[j] - mean[j]);
            }
        }
    }
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v /= n - 1.0;
        }
    }
    cov
}

/// Weight matrix from the moment covariance over block-bootstrap resamples.
/// The KS component of each resample is measured against the full series.
pub fn build_weight_matrix(
    empirical: &[f64],
    block_len: usize,
    n_resamples: usize,
    ridge: f64,
    seed: u64,
    moment_config: &MomentConfig,
) -> Result<WeightMatrix> {
    if block_len == 0 || empirical.len() < 10 * block_len {
        return Err(Error::SeriesTooShort {
            needed: 10 * block_len.max(1),
            got: empirical.len(),
        });
    }
    if n_resamples < 6 {
        return Err(Error::InvalidParameter {
            name: "resamples",
            value: n_resamples as f64,
            reason: "need more resamples than moments",
        });
    }
    let mut rng = SimRng::seed_from_u64(seed);
    let resamples: Vec<Vec<f64>> = (0..n_resamples)
        .map(|_| circular_block_resample(empirical, block_len, &mut rng))
        .collect();
    let samples: Vec<MomentVector> = resamples
        .par_iter()
        .map(|r| moments_with(r, empirical, moment_config).ok())
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let discarded = n_resamples - samples.len();
    if samples.len() < 6 {
        return Err(Error::DegenerateSeries("bootstrap moments undefined"));
    }
    let mut w = WeightMatrix::from_covariance(moment_covariance(&samples), ridge)?;
    w.source = Some(BootstrapSource {
        block_len,
        resamples: n_resamples,
        seed,
        discarded,
    });
    Ok(w)
}

/// Bootstrap settings for [`build_weight_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightSettings {
    pub block_len: usize,
    pub resamples: usize,
    pub ridge: f64,
    pub seed: u64,
}

impl Default for WeightSettings {
    fn default() -> Self {
        WeightSettings {
            block_len: 100,
            resamples: 2000,
            ridge: 1e-6,
            seed: 0,
        }
    }
}

impl WeightSettings {
    /// Shrink the block length so that a series of `len` bars holds at
    /// least ten blocks.
    pub fn fitted_to(self, len: usize) -> Self {
        WeightSettings {
            block_len: self.block_len.min(len / 10).max(1),
            ..self
        }
    }
}

/// How replications are combined into one objective value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Average the moment vectors, then take one quadratic form.
    #[default]
    AverageMoments,
    /// Average the per-replication quadratic forms.
    AverageObjectives,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveSettings {
    pub replications: usize,
    pub seed_base: u64,
    pub q_var_steps: usize,
    pub aggregation: Aggregation,
    pub moments: MomentConfig,
    pub activation: ActivationMode,
    pub init_reference: InitReference,
}

impl Default for ObjectiveSettings {
    fn default() -> Self {
        ObjectiveSettings {
            replications: 5,
            seed_base: 1,
            q_var_steps: 100_000,
            aggregation: Aggregation::AverageMoments,
            moments: MomentConfig::default(),
            activation: ActivationMode::Exact,
            init_reference: InitReference::Fixed,
        }
    }
}

/// Everything needed to score a parameter set against one empirical series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub empirical: Vec<f64>,
    /// Empirical moments; the KS target is zero.
    pub target: MomentVector,
    pub weights: WeightMatrix,
    pub alignment: PriceAlignment,
    pub settings: ObjectiveSettings,
}

impl ObjectiveSpec {
    pub fn new(
        empirical: Vec<f64>,
        weights: WeightMatrix,
        alignment: PriceAlignment,
        settings: ObjectiveSettings,
    ) -> Result<Self> {
        if settings.replications == 0 {
            return Err(Error::InvalidParameter {
                name: "replications",
                value: 0.0,
                reason: "must be at least one",
            });
        }
        let mut target = moments_with(&empirical, &empirical, &settings.moments)?;
        target.ks = 0.0;
        Ok(ObjectiveSpec {
            empirical,
            target,
            weights,
            alignment,
            settings,
        })
    }

    /// Weight matrix from a bootstrap of `empirical`, with the initial price
    /// aligned to its first bar.
    pub fn build(
        empirical: Vec<f64>,
        tick_size: f64,
        weights: &WeightSettings,
        settings: ObjectiveSettings,
    ) -> Result<Self> {
        let first = *empirical.first().ok_or(Error::SeriesTooShort { needed: 1, got: 0 })?;
        let w = build_weight_matrix(
            &empirical,
            weights.block_len,
            weights.resamples,
            weights.ridge,
            weights.seed,
            &settings.moments,
        )?;
        Self::new(empirical, w, align_scale(first, tick_size), settings)
    }

    pub fn steps(&self) -> usize {
        self.empirical.len()
    }

    pub fn run_config(&self, replication: usize) -> RunConfig {
        RunConfig {
            steps: self.steps(),
            p0: self.alignment.p0,
            seed: self.settings.seed_base.wrapping_add(replication as u64),
            q_var_steps: self.settings.q_var_steps,
            tick_size: self.alignment.tick_size,
            activation: self.settings.activation,
            init_reference: self.settings.init_reference,
            ..RunConfig::default()
        }
    }

    /// Moment gap `simulated - target`.
    pub fn error_vector(&self, simulated: &MomentVector) -> [f64; 5] {
        let (s, t) = (simulated.to_array(), self.target.to_array());
        [s[0] - t[0], s[1] - t[1], s[2] - t[2], s[3] - t[3], s[4] - t[4]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    pub penalized: bool,
    /// Per-replication moments, `None` where a replication failed.
    pub replications: Vec<Option<MomentVector>>,
    pub failure: Option<String>,
}

fn simulate_moments(params: &ModelParams, spec: &ObjectiveSpec, rep: usize) -> Result<MomentVector> {
    let out = simulate(params, &spec.run_config(rep))?;
    moments_with(&out.log_prices, &spec.empirical, &spec.settings.moments)
}

/// Score `params` against `spec`. Undefined simulations or moments yield the
/// weight matrix's penalty value instead of an error.
pub fn evaluate(params: &ModelParams, spec: &ObjectiveSpec) -> Evaluation {
    let penalty = |failure: String, replications| Evaluation {
        value: spec.weights.penalty(),
        penalized: true,
        replications,
        failure: Some(failure),
    };
    if let Err(e) = params.validate() {
        return penalty(e.to_string(), Vec::new());
    }
    let results: Vec<Result<MomentVector>> = (0..spec.settings.replications)
        .into_par_iter()
        .map(|rep| simulate_moments(params, spec, rep))
        .collect();
    let replications: Vec<Option<MomentVector>> = results.iter().map(|r| r.clone().ok()).collect();
    if let Some(Err(e)) = results.iter().find(|r| r.is_err()) {
        return penalty(e.to_string(), replications);
    }
    let moments: Vec<MomentVector> = replications.iter().flatten().copied().collect();
    let value = match spec.settings.aggregation {
        Aggregation::AverageMoments => {
            let avg = MomentVector::average(&moments).expect("at least one replication");
            spec.weights.quadratic_form(&spec.error_vector(&avg))
        }
        Aggregation::AverageObjectives => {
            moments
                .iter()
                .map(|m| spec.weights.quadratic_form(&spec.error_vector(m)))
                .sum::<f64>()
                / moments.len() as f64
        }
    };
    if !value.is_finite() {
        return penalty("non-finite objective".into(), replications);
    }
    Evaluation {
        value: value.max(0.0),
        penalized: false,
        replications,
        failure: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::simulate;

    fn diag(d: [f64; 5]) -> [[f64; 5]; 5] {
        let mut m = [[0.0; 5]; 5];
        for i in 0..5 {
            m[i][i] = d[i];
        }
        m
    }

    #[test]
    fn identity_covariance_inverts_to_identity() {
        let w = WeightMatrix::from_covariance(diag([1.0; 5]), 0.0).unwrap();
        assert_eq!(w.matrix, WeightMatrix::identity().matrix);
    }

    #[test]
    fn diagonal_inverse() {
        let w = WeightMatrix::from_covariance(diag([4.0, 1.0, 1.0, 1.0, 1.0]), 0.0).unwrap();
        assert!((w.matrix[0][0] - 0.25).abs() < 1e-15);
        assert!((w.matrix[1][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_without_ridge_fails_and_ridge_recovers() {
        let mut cov = diag([1.0, 1.0, 1.0, 1.0, 0.0]);
        cov[0][1] = 0.0;
        assert_eq!(WeightMatrix::from_covariance(cov, 0.0), Err(Error::SingularMatrix));
        let w = WeightMatrix::from_covariance(cov, 1e-6).unwrap();
        assert!(w.eigenvalues().iter().all(|&l| l >= 0.0));
        assert!((w.matrix[4][4] - 1.0 / (0.8e-6)).abs() / w.matrix[4][4] < 1e-9);
    }

    #[test]
    fn quadratic_form_values() {
        let w = WeightMatrix::identity();
        assert!((w.quadratic_form(&[0.1, 0.0, 0.0, 0.0, 0.0]) - 0.01).abs() < 1e-15);
        assert_eq!(w.quadratic_form(&[0.0; 5]), 0.0);
    }

    #[test]
    fn null_space_gives_zero() {
        // Rank-deficient W: e along the null direction scores zero.
        let w = WeightMatrix {
            matrix: diag([1.0, 1.0, 0.0, 1.0, 1.0]),
            ridge: 0.0,
            source: None,
        };
        assert_eq!(w.quadratic_form(&[0.0, 0.0, 3.0, 0.0, 0.0]), 0.0);
        assert!(w.quadratic_form(&[0.0, 1e-3, 3.0, 0.0, 0.0]) > 0.0);
    }

    fn random_walk(n: usize, seed: u64, step: f64) -> Vec<f64> {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = SimRng::seed_from_u64(seed);
        let mut x = 5.5;
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x += step * z;
                x
            })
            .collect()
    }

    #[test]
    fn bootstrap_matrix_is_symmetric_psd() {
        let series = random_walk(1000, 3, 1e-3);
        let w = build_weight_matrix(&series, 50, 300, 1e-6, 9, &MomentConfig::default()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert!((w.matrix[i][j] - w.matrix[j][i]).abs() <= 1e-12 * w.max_diagonal());
            }
        }
        assert!(w.eigenvalues().iter().all(|&l| l >= 0.0));
        let src = w.source.unwrap();
        assert_eq!((src.block_len, src.resamples, src.seed), (50, 300, 9));
    }

    #[test]
    fn tight_mean_gets_largest_weight() {
        // Stationary noise with occasional large shocks: the sample mean is
        // far more stable across resamples than the dispersion statistics.
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = SimRng::seed_from_u64(4);
        let series: Vec<f64> = (0..2000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                let scale = if rng.random::<f64>() < 0.05 { 1e-2 } else { 1e-3 };
                5.5 + scale * z
            })
            .collect();
        let w = build_weight_matrix(&series, 100, 500, 1e-6, 1, &MomentConfig::default()).unwrap();
        let d: Vec<f64> = (0..5).map(|i| w.matrix[i][i]).collect();
        let max = d.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(d[0], max, "{d:?}");
    }

    #[test]
    fn too_short_for_blocks() {
        let series = random_walk(500, 1, 1e-3);
        assert!(build_weight_matrix(&series, 100, 100, 1e-6, 1, &MomentConfig::default()).is_err());
    }

    fn spec_from(params: &ModelParams, seed: u64, steps: usize, reps: usize) -> ObjectiveSpec {
        let alignment = PriceAlignment {
            tick_size: 0.01,
            p0: 24_700,
        };
        let config = RunConfig {
            steps,
            p0: alignment.p0,
            seed,
            q_var_steps: 20_000,
            tick_size: alignment.tick_size,
            ..RunConfig::default()
        };
        let empirical = simulate(params, &config).unwrap().log_prices;
        let alignment = align_scale(empirical[0], 0.01);
        let w = build_weight_matrix(&empirical, 30, 200, 1e-6, 5, &MomentConfig::default()).unwrap();
        ObjectiveSpec::new(
            empirical,
            w,
            alignment,
            ObjectiveSettings {
                replications: reps,
                seed_base: 1000,
                q_var_steps: 20_000,
                ..ObjectiveSettings::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn matching_moments_score_zero() {
        let spec = spec_from(&ModelParams::calibrated(), 1, 400, 1);
        let e = spec.error_vector(&spec.target);
        assert_eq!(spec.weights.quadratic_form(&e), 0.0);
    }

    #[test]
    fn zero_increment_hits_penalty() {
        let spec = spec_from(&ModelParams::calibrated(), 2, 400, 2);
        let params = ModelParams {
            delta_s: 0.0,
            ..ModelParams::calibrated()
        };
        let ev = evaluate(&params, &spec);
        assert!(ev.penalized);
        assert_eq!(ev.value, spec.weights.penalty());
        let ok = evaluate(&ModelParams::calibrated(), &spec);
        assert!(!ok.penalized);
        assert!(ok.value >= 0.0 && ok.value < ev.value);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let spec = spec_from(&ModelParams::calibrated(), 3, 400, 3);
        let a = evaluate(&ModelParams::default(), &spec);
        let b = evaluate(&ModelParams::default(), &spec);
        assert_eq!(a, b);
        assert_eq!(a.replications.len(), 3);
    }

    #[test]
    fn aggregation_modes_differ_but_are_nonnegative() {
        let mut spec = spec_from(&ModelParams::calibrated(), 4, 400, 3);
        let a = evaluate(&ModelParams::default(), &spec).value;
        spec.settings.aggregation = Aggregation::AverageObjectives;
        let b = evaluate(&ModelParams::default(), &spec).value;
        assert!(a >= 0.0 && b >= 0.0);
        // Jensen: the mean of quadratic forms bounds the form of the mean.
        assert!(b >= a - 1e-9 * b.abs());
    }
}
