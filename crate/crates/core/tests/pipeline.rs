use lobcal_core::data::{
    bars_1min, parse_bars, parse_ticks, session_filter, synthesize_ticks, write_bars, write_ticks, ModelTickConfig,
    RandomWalkConfig, SynthConfig, TickGenerator,
};
use lobcal_core::model::ModelParams;
use lobcal_core::stats::{acf, classify_trade_signs, LeeReadyConfig};
use proptest::prelude::*;

fn ingest(config: &SynthConfig, seed: u64) -> (lobcal_core::data::BarSeries, Vec<i8>, Vec<i8>) {
    let synth = synthesize_ticks(config, seed).unwrap();
    let mut csv = Vec::new();
    write_ticks(&mut csv, &synth.ticks).unwrap();
    let ticks = parse_ticks(csv.as_slice()).unwrap();
    assert_eq!(ticks, synth.ticks);
    let bars = bars_1min(&ticks, &config.window).unwrap();
    let signs = classify_trade_signs(&ticks, &LeeReadyConfig::default()).signs;
    (bars, signs, synth.true_signs)
}

#[test]
fn bar_files_round_trip_exactly() {
    let (bars, _, _) = ingest(&SynthConfig::default(), 3);
    let mut out = Vec::new();
    write_bars(&mut out, &bars).unwrap();
    let back = parse_bars(out.as_slice()).unwrap();
    assert_eq!(back.log_prices(), bars.log_prices());
    let mut again = Vec::new();
    write_bars(&mut again, &back).unwrap();
    assert_eq!(out, again);
}

#[test]
fn lee_ready_recovers_touch_trades() {
    let (_, signs, truth) = ingest(&SynthConfig::default(), 5);
    assert_eq!(signs.len(), truth.len());
    let agree = signs.iter().zip(&truth).filter(|(a, b)| a == b).count();
    assert!(agree as f64 >= 0.99 * truth.len() as f64, "{agree} of {}", truth.len());
}

#[test]
fn model_driven_ticks_bar_up_like_the_model() {
    let config = SynthConfig {
        sessions: 1,
        generator: TickGenerator::Model(ModelTickConfig {
            params: ModelParams::calibrated(),
            q_var_steps: 20_000,
            ..ModelTickConfig::default()
        }),
        ..SynthConfig::default()
    };
    let (bars, signs, _) = ingest(&config, 2);
    assert_eq!(bars.len(), 460);
    // The calibrated model's order flow is persistent; so is its Lee-Ready view.
    let x: Vec<f64> = signs.iter().map(|&s| s as f64).collect();
    let r = acf(&x, 10).unwrap();
    assert!((1..=5).all(|k| r.is_significant(k) && r.at(k) > 0.0), "{:?}", r.values);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn every_session_minute_gets_exactly_one_bar(
        sessions in 1usize..4,
        seed in 0u64..1000,
        interval in prop_oneof![Just(15_000i64), Just(45_000), Just(60_000)],
        noise in any::<bool>(),
    ) {
        let config = SynthConfig {
            sessions,
            off_session_noise: noise,
            generator: TickGenerator::RandomWalk(RandomWalkConfig {
                quote_interval_ms: interval,
                ..RandomWalkConfig::default()
            }),
            ..SynthConfig::default()
        };
        let synth = synthesize_ticks(&config, seed).unwrap();
        let bars = bars_1min(&synth.ticks, &config.window).unwrap();
        prop_assert_eq!(bars.len(), sessions * config.window.minutes() as usize);
        // Filtering first changes nothing; a quote at least once a minute
        // leaves nothing to carry forward.
        let filtered = session_filter(&synth.ticks, &config.window);
        prop_assert_eq!(&bars_1min(&filtered, &config.window).unwrap(), &bars);
        prop_assert!(bars.bars.iter().all(|b| !b.carried_forward));
    }
}
