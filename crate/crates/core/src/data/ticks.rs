use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const TICK_HEADER: &str = "timestamp,kind,price,volume,bid,ask";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TickEvent {
    Trade { price: f64, volume: u64 },
    Quote { bid: f64, ask: f64 },
    AuctionQuote { bid: f64, ask: f64 },
}

/// One tick; `timestamp` is exchange-local milliseconds since the epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord {
    pub timestamp: i64,
    pub event: TickEvent,
}

impl TickRecord {
    pub fn quote(timestamp: i64, bid: f64, ask: f64) -> Self {
        TickRecord {
            timestamp,
            event: TickEvent::Quote { bid, ask },
        }
    }

    pub fn trade(timestamp: i64, price: f64, volume: u64) -> Self {
        TickRecord {
            timestamp,
            event: TickEvent::Trade { price, volume },
        }
    }

    /// Level-1 mid of a regular quote.
    pub fn quote_mid(&self) -> Option<f64> {
        match self.event {
            TickEvent::Quote { bid, ask } => Some(0.5 * (bid + ask)),
            _ => None,
        }
    }

    /// Milliseconds since local midnight.
    pub fn time_of_day(&self) -> i64 {
        self.timestamp.rem_euclid(super::MS_PER_DAY)
    }

    pub fn day(&self) -> i64 {
        self.timestamp.div_euclid(super::MS_PER_DAY)
    }
}

fn parse_f64(field: &str, name: &str, line: u64) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Parse {
        line,
        reason: format!("invalid {name} {field:?}"),
    })
}

fn require_empty(fields: &[(&str, &str)], line: u64) -> Result<()> {
    for (name, value) in fields {
        if !value.is_empty() {
            return Err(Error::Parse {
                line,
                reason: format!("unexpected {name} {value:?} for this record kind"),
            });
        }
    }
    Ok(())
}

fn parse_quote(bid: &str, ask: &str, line: u64) -> Result<(f64, f64)> {
    let bid = parse_f64(bid, "bid", line)?;
    let ask = parse_f64(ask, "ask", line)?;
    if !(bid > 0.0 && ask.is_finite()) {
        return Err(Error::Parse {
            line,
            reason: format!("quote prices must be positive (bid {bid}, ask {ask})"),
        });
    }
    if bid >= ask {
        return Err(Error::Parse {
            line,
            reason: format!("bid {bid} is not below ask {ask}"),
        });
    }
    Ok((bid, ask))
}

/// Parse a tick CSV with header `timestamp,kind,price,volume,bid,ask`.
///
/// Trades fill `price,volume`; `Quote` and `AuctionQuote` rows fill `bid,ask`.
/// Unused fields must be empty. Timestamps must be non-decreasing. An empty
/// input yields no records.
pub fn parse_ticks<R: Read>(input: R) -> Result<Vec<TickRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut out = Vec::new();
    let mut last_ts = i64::MIN;
    for (idx, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(idx as u64 + 1, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = row.position().map_or(idx as u64 + 1, |p| p.line());
        if idx == 0 {
            let header: Vec<&str> = row.iter().map(str::trim).collect();
            if header.join(",") != TICK_HEADER {
                return Err(Error::Parse {
                    line,
                    reason: format!("expected header {TICK_HEADER:?}"),
                });
            }
            continue;
        }
        if row.len() != 6 {
            return Err(Error::Parse {
                line,
                reason: format!("expected 6 fields, found {}", row.len()),
            });
        }
        let timestamp: i64 = row[0].parse().map_err(|_| Error::Parse {
            line,
            reason: format!("invalid timestamp {:?}", &row[0]),
        })?;
        let (price, volume, bid, ask) = (&row[2], &row[3], &row[4], &row[5]);
        let event = match &row[1] {
            "Trade" => {
                require_empty(&[("bid", bid), ("ask", ask)], line)?;
                let price = parse_f64(price, "price", line)?;
                if !(price > 0.0 && price.is_finite()) {
                    return Err(Error::Parse {
                        line,
                        reason: format!("trade price must be positive, got {price}"),
                    });
                }
                let volume = volume.parse().map_err(|_| Error::Parse {
                    line,
                    reason: format!("invalid volume {volume:?}"),
                })?;
                TickEvent::Trade { price, volume }
            }
            "Quote" | "AuctionQuote" => {
                require_empty(&[("price", price), ("volume", volume)], line)?;
                let (bid, ask) = parse_quote(bid, ask, line)?;
                if &row[1] == "Quote" {
                    TickEvent::Quote { bid, ask }
                } else {
                    TickEvent::AuctionQuote { bid, ask }
                }
            }
            other => {
                return Err(Error::Parse {
                    line,
                    reason: format!("unknown record kind {other:?}"),
                })
            }
        };
        if timestamp < last_ts {
            return Err(Error::OutOfOrder { line, timestamp });
        }
        last_ts = timestamp;
        out.push(TickRecord { timestamp, event });
    }
    Ok(out)
}

/// Write records in the schema read by [`parse_ticks`] (LF line endings).
pub fn write_ticks<W: Write>(mut out: W, ticks: &[TickRecord]) -> std::io::Result<()> {
    writeln!(out, "{TICK_HEADER}")?;
    for t in ticks {
        match t.event {
            TickEvent::Trade { price, volume } => writeln!(out, "{},Trade,{price},{volume},,", t.timestamp)?,
            TickEvent::Quote { bid, ask } => writeln!(out, "{},Quote,,,{bid},{ask}", t.timestamp)?,
            TickEvent::AuctionQuote { bid, ask } => writeln!(out, "{},AuctionQuote,,,{bid},{ask}", t.timestamp)?,
        }
    }
    Ok(())
}
