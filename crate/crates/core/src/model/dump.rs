//! CSV dumps of simulation output.

use std::io::{Read, Write};

use super::SimulationOutput;
use crate::book::{LimitOrderBook, Side};
use crate::error::{Error, Result};

pub const SIMULATION_HEADER: &str = "step,log_price,q_taker,lambda_t,bid_depth,ask_depth,trades";
pub const SIGN_HEADER: &str = "index,sign";
pub const BOOK_HEADER: &str = "step,side,price,count";

pub fn write_simulation_dump<W: Write>(mut out: W, sim: &SimulationOutput) -> std::io::Result<()> {
    writeln!(out, "{SIMULATION_HEADER}")?;
    for (step, (p, d)) in sim.log_prices.iter().zip(&sim.diagnostics).enumerate() {
        writeln!(
            out,
            "{step},{p},{},{},{},{},{}",
            d.q_taker, d.lambda_t, d.bid_depth, d.ask_depth, d.trades
        )?;
    }
    Ok(())
}

pub fn write_trade_signs<W: Write>(mut out: W, signs: &[i8]) -> std::io::Result<()> {
    writeln!(out, "{SIGN_HEADER}")?;
    for (i, s) in signs.iter().enumerate() {
        writeln!(out, "{i},{s}")?;
    }
    Ok(())
}

pub fn parse_trade_signs<R: Read>(input: R) -> Result<Vec<i8>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut signs = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i as u64 + 1;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            reason: e.to_string(),
        })?;
        if i == 0 {
            if rec.iter().collect::<Vec<_>>().join(",") != SIGN_HEADER {
                return Err(Error::Parse {
                    line,
                    reason: format!("expected header `{SIGN_HEADER}`"),
                });
            }
            continue;
        }
        let sign = rec.get(1).unwrap_or("").trim();
        match sign {
            "1" | "+1" => signs.push(1),
            "-1" => signs.push(-1),
            other => {
                return Err(Error::Parse {
                    line,
                    reason: format!("trade sign must be 1 or -1, got `{other}`"),
                })
            }
        }
    }
    Ok(signs)
}

/// Resting order counts per price level, bids from the top down, then asks.
pub fn write_book_snapshot<W: Write>(
    mut out: W,
    step: usize,
    book: &LimitOrderBook,
    header: bool,
) -> std::io::Result<()> {
    if header {
        writeln!(out, "{BOOK_HEADER}")?;
    }
    for (price, count) in book.levels(Side::Buy).rev() {
        writeln!(out, "{step},buy,{},{count}", price.ticks())?;
    }
    for (price, count) in book.levels(Side::Sell) {
        writeln!(out, "{step},sell,{},{count}", price.ticks())?;
    }
    Ok(())
}
