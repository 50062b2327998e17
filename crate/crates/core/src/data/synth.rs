//! Synthetic tick streams in the ingestion schema, for exercising the
//! pipeline without proprietary data.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::bars::SessionWindow;
use super::ticks::{TickEvent, TickRecord};
use super::{MS_PER_DAY, MS_PER_MINUTE};
use crate::book::{TickPrice, Trade};
use crate::error::Result;
use crate::model::{BookObserver, ModelParams, RunConfig, Simulation};
use crate::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomWalkConfig {
    pub initial_mid: f64,
    pub tick_size: f64,
    pub spread_ticks: u32,
    pub quote_interval_ms: i64,
    /// Standard deviation of the log-mid increment per quote.
    pub log_step_sd: f64,
    /// Probability of a trade after each quote.
    pub trade_prob: f64,
    /// Probability that a trade repeats the previous sign instead of drawing a
    /// fresh fair sign; equals the lag-one sign autocorrelation.
    pub sign_persistence: f64,
}

impl Default for RandomWalkConfig {
    fn default() -> Self {
        RandomWalkConfig {
            initial_mid: 247.0,
            tick_size: 0.01,
            spread_ticks: 2,
            quote_interval_ms: 15_000,
            log_step_sd: 2e-4,
            trade_prob: 0.5,
            sign_persistence: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelTickConfig {
    pub params: ModelParams,
    pub p0: u32,
    pub tick_size: f64,
    pub q_var_steps: usize,
}

impl Default for ModelTickConfig {
    fn default() -> Self {
        ModelTickConfig {
            params: ModelParams::calibrated(),
            p0: 24_700,
            tick_size: 0.01,
            q_var_steps: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TickGenerator {
    /// Geometric random-walk quotes with persistent-sign trades at the touch.
    RandomWalk(RandomWalkConfig),
    /// Quotes and trades of a model run, one session minute per step.
    Model(ModelTickConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub sessions: usize,
    /// Exchange-local day number of the first session.
    pub start_day: i64,
    pub window: SessionWindow,
    /// Add auction quotes before the open and after the close.
    pub off_session_noise: bool,
    pub generator: TickGenerator,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sessions: 5,
            start_day: 16_010,
            window: SessionWindow::default(),
            off_session_noise: true,
            generator: TickGenerator::RandomWalk(RandomWalkConfig::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTicks {
    pub ticks: Vec<TickRecord>,
    /// Generator-side trade signs, in trade order.
    pub true_signs: Vec<i8>,
}

fn session_start(config: &SynthConfig, session: usize) -> i64 {
    (config.start_day + session as i64) * MS_PER_DAY + config.window.start_minute as i64 * MS_PER_MINUTE
}

fn push_auction_noise(out: &mut Vec<TickRecord>, day_start: i64, minute: i64, mid: f64) {
    out.push(TickRecord {
        timestamp: day_start + minute * MS_PER_MINUTE,
        event: TickEvent::AuctionQuote {
            bid: mid * 0.99,
            ask: mid * 1.01,
        },
    });
}

fn random_walk(config: &SynthConfig, rw: &RandomWalkConfig, seed: u64) -> SyntheticTicks {
    let mut rng = SimRng::seed_from_u64(seed);
    let mut ticks = Vec::new();
    let mut signs = Vec::new();
    let mut log_mid = rw.initial_mid.ln();
    let mut sign: i8 = if rng.random::<bool>() { 1 } else { -1 };
    let interval = rw.quote_interval_ms.clamp(1, MS_PER_MINUTE);
    let session_ms = config.window.minutes() as i64 * MS_PER_MINUTE;
    for s in 0..config.sessions {
        let start = session_start(config, s);
        let day_start = (config.start_day + s as i64) * MS_PER_DAY;
        if config.off_session_noise {
            push_auction_noise(&mut ticks, day_start, 8 * 60 + 45, log_mid.exp());
            push_auction_noise(&mut ticks, day_start, 9 * 60 + 5, log_mid.exp());
        }
        let mut offset = 0;
        while offset < session_ms {
            let z: f64 = StandardNormal.sample(&mut rng);
            log_mid += rw.log_step_sd * z;
            let mid_ticks = (log_mid.exp() / rw.tick_size).round().max(rw.spread_ticks as f64 + 1.0);
            let half = rw.spread_ticks as f64 / 2.0;
            let bid = ((mid_ticks - half).floor()) * rw.tick_size;
            let ask = ((mid_ticks - half).floor() + rw.spread_ticks.max(1) as f64) * rw.tick_size;
            let ts = start + offset;
            ticks.push(TickRecord::quote(ts, bid, ask));
            if rng.random::<f64>() < rw.trade_prob && offset + 1 < session_ms {
                if rng.random::<f64>() >= rw.sign_persistence {
                    sign = if rng.random::<bool>() { 1 } else { -1 };
                }
                let price = if sign > 0 { ask } else { bid };
                ticks.push(TickRecord::trade(ts + 1, price, 100));
                signs.push(sign);
            }
            offset += interval;
        }
        if config.off_session_noise {
            push_auction_noise(&mut ticks, day_start, 16 * 60 + 55, log_mid.exp());
        }
    }
    SyntheticTicks {
        ticks,
        true_signs: signs,
    }
}

// Spacing of consecutive book events within one simulated minute.
const EVENT_SPACING_MS: i64 = 10;

struct TickRecorder<'a> {
    config: &'a SynthConfig,
    tick_size: f64,
    step: usize,
    event: i64,
    ticks: Vec<TickRecord>,
    signs: Vec<i8>,
}

impl TickRecorder<'_> {
    fn timestamp(&mut self) -> i64 {
        let per_day = self.config.window.minutes().max(1) as usize;
        let session = self.step / per_day;
        let minute = (self.step % per_day) as i64;
        let ts = session_start(self.config, session)
            + minute * MS_PER_MINUTE
            + (self.event * EVENT_SPACING_MS).min(MS_PER_MINUTE - 1);
        self.event += 1;
        ts
    }
}

impl BookObserver for TickRecorder<'_> {
    fn on_top_of_book(&mut self, bid: Option<TickPrice>, ask: Option<TickPrice>) {
        if let (Some(b), Some(a)) = (bid, ask) {
            let ts = self.timestamp();
            let quote = TickRecord::quote(ts, b.ticks() as f64 * self.tick_size, a.ticks() as f64 * self.tick_size);
            self.ticks.push(quote);
        }
    }

    fn on_trade(&mut self, trade: Trade) {
        let ts = self.timestamp();
        self.ticks
            .push(TickRecord::trade(ts, trade.price.ticks() as f64 * self.tick_size, 1));
        self.signs.push(trade.sign);
    }

    fn on_step_end(&mut self) {
        self.step += 1;
        self.event = 0;
    }
}

fn model_driven(config: &SynthConfig, mc: &ModelTickConfig, seed: u64) -> Result<SyntheticTicks> {
    let per_day = config.window.minutes() as usize;
    let run = RunConfig {
        steps: config.sessions * per_day,
        p0: mc.p0,
        seed,
        q_var_steps: mc.q_var_steps,
        tick_size: mc.tick_size,
        ..RunConfig::default()
    };
    let mut sim = Simulation::new(mc.params, run)?;
    let mut rec = TickRecorder {
        config,
        tick_size: mc.tick_size,
        step: 0,
        event: 0,
        ticks: Vec::new(),
        signs: Vec::new(),
    };
    // Opening quote from the initialized book.
    let book = sim.book();
    rec.on_top_of_book(book.best_bid(), book.best_ask());
    for _ in 0..run.steps {
        sim.step(&mut rec)?;
    }
    Ok(SyntheticTicks {
        ticks: rec.ticks,
        true_signs: rec.signs,
    })
}

/// Generate a schema-valid, chronologically ordered tick stream.
pub fn synthesize_ticks(config: &SynthConfig, seed: u64) -> Result<SyntheticTicks> {
    match &config.generator {
        TickGenerator::RandomWalk(rw) => Ok(random_walk(config, rw, seed)),
        TickGenerator::Model(mc) => model_driven(config, mc, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{bars_1min, parse_ticks, session_filter, write_ticks};

    #[test]
    fn five_sessions_make_2300_bars() {
        let config = SynthConfig::default();
        let synth = synthesize_ticks(&config, 1).unwrap();
        assert!(synth.ticks.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        let filtered = session_filter(&synth.ticks, &config.window);
        assert!(filtered.len() < synth.ticks.len());
        let bars = bars_1min(&filtered, &config.window).unwrap();
        assert_eq!(bars.len(), 2300);
        assert_eq!(bars.days().len(), 5);
    }

    #[test]
    fn output_parses_back() {
        let synth = synthesize_ticks(
            &SynthConfig {
                sessions: 1,
                ..SynthConfig::default()
            },
            2,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_ticks(&mut buf, &synth.ticks).unwrap();
        assert_eq!(parse_ticks(buf.as_slice()).unwrap(), synth.ticks);
    }

    #[test]
    fn model_driven_stream_is_valid() {
        let config = SynthConfig {
            sessions: 1,
            generator: TickGenerator::Model(ModelTickConfig {
                q_var_steps: 10_000,
                ..ModelTickConfig::default()
            }),
            ..SynthConfig::default()
        };
        let synth = synthesize_ticks(&config, 3).unwrap();
        assert!(synth.ticks.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        let trades = synth
            .ticks
            .iter()
            .filter(|t| matches!(t.event, TickEvent::Trade { .. }))
            .count();
        assert_eq!(trades, synth.true_signs.len());
        let bars = bars_1min(&synth.ticks, &config.window).unwrap();
        assert_eq!(bars.len(), 460);
    }
}
