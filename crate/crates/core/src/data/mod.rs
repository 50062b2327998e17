//! Tick ingestion, session filtering and one-minute bar construction.

mod bars;
mod synth;
mod ticks;

pub use bars::{
    align_scale, bars_1min, parse_bars, session_filter, write_bars, Bar, BarSeries, PriceAlignment, SessionWindow,
};
pub use synth::{synthesize_ticks, ModelTickConfig, RandomWalkConfig, SynthConfig, TickGenerator};
pub use ticks::{parse_ticks, write_ticks, TickEvent, TickRecord, TICK_HEADER};

pub const MS_PER_MINUTE: i64 = 60_000;
pub const MS_PER_DAY: i64 = 86_400_000;
