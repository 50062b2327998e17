use serde::{Deserialize, Serialize};

use crate::data::{TickEvent, TickRecord};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeeReadyConfig {
    /// A quote prevails for a trade only if it is at least this many
    /// milliseconds older than the trade, and always strictly older.
    pub quote_lag_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassifiedSigns {
    pub signs: Vec<i8>,
    pub by_quote: usize,
    pub by_tick: usize,
    /// Leading trades with neither a prevailing quote nor a prior price change.
    pub unclassified: usize,
}

/// Lee-Ready trade classification.
///
/// A trade above the prevailing quote mid is buyer-initiated (+1), below it
/// seller-initiated (-1). Trades at the mid, or without a prevailing quote,
/// fall back to the tick test: the sign of the last non-zero trade price
/// change. Trades that neither rule can sign are dropped and counted.
pub fn classify_trade_signs(ticks: &[TickRecord], config: &LeeReadyConfig) -> ClassifiedSigns {
    let lag = config.quote_lag_ms.max(0);
    let quotes: Vec<(i64, f64)> = ticks
        .iter()
        .filter_map(|t| t.quote_mid().map(|m| (t.timestamp, m)))
        .collect();
    let mut next_quote = 0usize;
    let mut prevailing: Option<f64> = None;
    let mut last_price: Option<f64> = None;
    let mut tick_sign: i8 = 0;
    let mut out = ClassifiedSigns::default();

    for t in ticks {
        let TickEvent::Trade { price, .. } = t.event else {
            continue;
        };
        while next_quote < quotes.len() {
            let (ts, mid) = quotes[next_quote];
            if ts < t.timestamp && ts <= t.timestamp - lag {
                prevailing = Some(mid);
                next_quote += 1;
            } else {
                break;
            }
        }
        if let Some(prev) = last_price {
            if price > prev {
                tick_sign = 1;
            } else if price < prev {
                tick_sign = -1;
            }
        }
        last_price = Some(price);

        match prevailing {
            Some(mid) if price > mid => {
                out.signs.push(1);
                out.by_quote += 1;
            }
            Some(mid) if price < mid => {
                out.signs.push(-1);
                out.by_quote += 1;
            }
            _ if tick_sign != 0 => {
                out.signs.push(tick_sign);
                out.by_tick += 1;
            }
            _ => out.unclassified += 1,
        }
    }
    out
}
