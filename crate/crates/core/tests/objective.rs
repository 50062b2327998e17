use lobcal_core::calibrate::pseudo_empirical;
use lobcal_core::model::{ModelParams, RunConfig};
use lobcal_core::objective::{evaluate, ObjectiveSettings, ObjectiveSpec, WeightSettings};
use lobcal_core::stats::std_dev;
use proptest::prelude::*;

const STEPS: usize = 300;

fn data() -> Vec<f64> {
    let config = RunConfig {
        steps: STEPS,
        seed: 42,
        tick_size: 0.01,
        q_var_steps: 20_000,
        ..RunConfig::default()
    };
    pseudo_empirical(&ModelParams::calibrated(), &config).unwrap()
}

fn spec(empirical: Vec<f64>, replications: usize, seed_base: u64) -> ObjectiveSpec {
    let weights = WeightSettings {
        resamples: 300,
        ..WeightSettings::default()
    }
    .fitted_to(empirical.len());
    let settings = ObjectiveSettings {
        replications,
        seed_base,
        q_var_steps: 20_000,
        ..ObjectiveSettings::default()
    };
    ObjectiveSpec::build(empirical, 0.01, &weights, settings).unwrap()
}

#[test]
fn replication_noise_shrinks_with_more_replications() {
    let empirical = data();
    let at = ModelParams::default();
    let spread = |reps: usize| {
        let values: Vec<f64> = (0..10u64)
            .map(|b| {
                let ev = evaluate(&at, &spec(empirical.clone(), reps, 1000 + 100 * b));
                assert!(!ev.penalized);
                ev.value
            })
            .collect();
        std_dev(&values)
    };
    let (s1, s5, s20) = (spread(1), spread(5), spread(20));
    assert!(s5 < s1 && s20 < s5, "spreads 1 {s1} 5 {s5} 20 {s20}");
}

#[test]
fn self_generated_data_prefers_its_own_parameters() {
    let s = spec(data(), 3, 1000);
    let own = evaluate(&ModelParams::calibrated(), &s);
    let other = evaluate(&ModelParams::default(), &s);
    assert!(own.value < other.value, "{} vs {}", own.value, other.value);
    assert_eq!(own.replications.len(), 3);
    assert!(own.replications.iter().all(Option::is_some));
}

#[test]
fn spec_length_and_alignment_follow_the_data() {
    let empirical = data();
    let s = spec(empirical.clone(), 2, 1);
    assert_eq!(s.steps(), STEPS);
    let c = s.run_config(1);
    assert_eq!((c.steps, c.seed), (STEPS, 2));
    let back = (c.p0 as f64 * c.tick_size).ln();
    assert!((back - empirical[0]).abs() <= c.tick_size / empirical[0].exp());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn objective_is_nonnegative_and_penalty_only_at_zero_increment(
        delta in 0.0..0.1f64,
        lambda0 in 10.0..250.0f64,
        c_lambda in 0u32..40,
        delta_s in prop_oneof![Just(0.0), 1e-4..0.1f64],
        alpha in 0.1..0.5f64,
        // At least one taker per step; with none the price can sit still and
        // the Hurst estimate is undefined.
        mu in 0.004..0.1f64,
    ) {
        let s = spec(data(), 2, 7);
        let p = ModelParams { delta, lambda0, c_lambda, delta_s, alpha, mu, ..ModelParams::default() };
        let ev = evaluate(&p, &s);
        prop_assert!(ev.value >= 0.0);
        prop_assert_eq!(ev.penalized, delta_s == 0.0, "failure {:?}", ev.failure);
        if ev.penalized {
            prop_assert_eq!(ev.value, s.weights.penalty());
        }
    }
}
