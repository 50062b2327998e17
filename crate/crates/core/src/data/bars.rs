use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ticks::{TickEvent, TickRecord};
use super::MS_PER_MINUTE;
use crate::error::{Error, Result};

/// Half-open intraday window `[start, end)` in minutes after midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionWindow {
    pub start_minute: u32,
    pub end_minute: u32,
}

impl Default for SessionWindow {
    /// 09:10 to 16:50, which skips the noisy start of continuous trading and
    /// the closing auction.
    fn default() -> Self {
        SessionWindow {
            start_minute: 9 * 60 + 10,
            end_minute: 16 * 60 + 50,
        }
    }
}

impl SessionWindow {
    pub fn minutes(&self) -> u32 {
        self.end_minute.saturating_sub(self.start_minute)
    }

    pub fn contains(&self, tick: &TickRecord) -> bool {
        let tod = tick.time_of_day();
        tod >= self.start_minute as i64 * MS_PER_MINUTE && tod < self.end_minute as i64 * MS_PER_MINUTE
    }

    /// Minute index within the session, if inside it.
    pub fn minute_of(&self, tick: &TickRecord) -> Option<u32> {
        self.contains(tick)
            .then(|| (tick.time_of_day() / MS_PER_MINUTE) as u32 - self.start_minute)
    }
}

pub fn session_filter(ticks: &[TickRecord], window: &SessionWindow) -> Vec<TickRecord> {
    ticks.iter().filter(|t| window.contains(t)).copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    /// Days since the epoch, exchange-local.
    pub day: i64,
    /// Minute index within the session.
    pub minute: u32,
    pub log_price: f64,
    /// No quote arrived in this minute; the value repeats the previous bar.
    pub carried_forward: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BarSeries {
    pub bars: Vec<Bar>,
    pub window: SessionWindow,
}

impl BarSeries {
    pub fn log_prices(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.log_price).collect()
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn days(&self) -> Vec<i64> {
        let mut days: Vec<i64> = self.bars.iter().map(|b| b.day).collect();
        days.dedup();
        days
    }

    /// Wrap a bare log-price series (e.g. simulated) as consecutive sessions.
    pub fn from_log_prices(log_prices: &[f64], window: SessionWindow) -> Self {
        let per_day = window.minutes().max(1) as usize;
        let bars = log_prices
            .iter()
            .enumerate()
            .map(|(i, &log_price)| Bar {
                day: (i / per_day) as i64,
                minute: (i % per_day) as u32,
                log_price,
                carried_forward: false,
            })
            .collect();
        BarSeries { bars, window }
    }
}

/// One bar per session minute: the log of the last regular-quote mid in that
/// minute. Minutes without a quote repeat the previous bar and are flagged.
/// Leading quiet minutes of the first day take the day's first quote.
pub fn bars_1min(ticks: &[TickRecord], window: &SessionWindow) -> Result<BarSeries> {
    let mut days: BTreeMap<i64, Vec<Option<f64>>> = BTreeMap::new();
    let minutes = window.minutes() as usize;
    for t in ticks {
        let Some(minute) = window.minute_of(t) else {
            continue;
        };
        let slots = days.entry(t.day()).or_insert_with(|| vec![None; minutes]);
        if let TickEvent::Quote { bid, ask } = t.event {
            slots[minute as usize] = Some(0.5 * (bid + ask));
        }
    }

    let mut bars = Vec::with_capacity(days.len() * minutes);
    let mut last: Option<f64> = None;
    for (day, slots) in days {
        let first = slots.iter().flatten().next().copied();
        let Some(first) = first else {
            return Err(Error::EmptySession { day });
        };
        let mut prev = last.unwrap_or(first);
        for (minute, slot) in slots.into_iter().enumerate() {
            let (mid, carried) = match slot {
                Some(mid) => (mid, false),
                None => (prev, true),
            };
            prev = mid;
            bars.push(Bar {
                day,
                minute: minute as u32,
                log_price: mid.ln(),
                carried_forward: carried,
            });
        }
        last = Some(prev);
    }
    Ok(BarSeries { bars, window: *window })
}

pub const BAR_HEADER: &str = "day,minute,log_price,carried_forward";

pub fn write_bars<W: Write>(mut out: W, series: &BarSeries) -> std::io::Result<()> {
    writeln!(out, "{BAR_HEADER}")?;
    for b in &series.bars {
        writeln!(
            out,
            "{},{},{},{}",
            b.day, b.minute, b.log_price, b.carried_forward as u8
        )?;
    }
    Ok(())
}

pub fn parse_bars<R: Read>(input: R) -> Result<BarSeries> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header_ok = reader
        .headers()
        .map(|h| h.iter().collect::<Vec<_>>().join(",") == BAR_HEADER)
        .unwrap_or(false);
    if !header_ok {
        return Err(Error::Parse {
            line: 1,
            reason: format!("expected header {BAR_HEADER:?}"),
        });
    }
    let mut bars = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let line = idx as u64 + 2;
        let row = row.map_err(|e| Error::Parse {
            line,
            reason: e.to_string(),
        })?;
        let bad = |what: &str| Error::Parse {
            line,
            reason: format!("invalid {what}"),
        };
        if row.len() != 4 {
            return Err(bad("field count"));
        }
        bars.push(Bar {
            day: row[0].parse().map_err(|_| bad("day"))?,
            minute: row[1].parse().map_err(|_| bad("minute"))?,
            log_price: row[2].parse().map_err(|_| bad("log_price"))?,
            carried_forward: match &row[3] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("carried_forward")),
            },
        });
    }
    Ok(BarSeries {
        bars,
        window: SessionWindow::default(),
    })
}

/// Mapping between simulated integer ticks and empirical currency prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceAlignment {
    pub tick_size: f64,
    /// Initial simulated price in ticks.
    pub p0: u32,
}

/// `p0 = round(exp(first bar) / tick_size)`, at least one tick.
pub fn align_scale(first_log_price: f64, tick_size: f64) -> PriceAlignment {
    let p0 = (first_log_price.exp() / tick_size).round().clamp(1.0, u32::MAX as f64) as u32;
    PriceAlignment { tick_size, p0 }
}
