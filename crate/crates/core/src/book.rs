//! Limit order book holding unit-size orders on integer tick prices.
//!
//! Each side is a price-indexed map of FIFO queues of order ids. Because every
//! order has size one, a market order consumes exactly one resting order at the
//! opposing best price. A parallel id-ordered list of live orders supports the
//! per-order cancellation sweep.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly positive integer price in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TickPrice(u32);

impl TickPrice {
    pub const MIN: TickPrice = TickPrice(1);

    pub fn new(ticks: u32) -> Option<Self> {
        (ticks >= 1).then_some(TickPrice(ticks))
    }

    /// Clamp an arbitrary integer tick count into the valid range `[1, u32::MAX]`.
    pub fn saturating(ticks: i64) -> Self {
        TickPrice(ticks.clamp(1, u32::MAX as i64) as u32)
    }

    pub fn ticks(self) -> u32 {
        self.0
    }
}

impl fmt::Display for TickPrice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        }
    }
}

pub type OrderId = u64;

/// A resting limit order. Size is always one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LimitOrder {
    pub id: OrderId,
    pub side: Side,
    pub price: TickPrice,
}

/// An execution. `sign` is +1 for a market buy, -1 for a market sell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trade {
    pub price: TickPrice,
    pub sign: i8,
}

#[derive(Debug, Clone, Default)]
pub struct LimitOrderBook {
    bids: BTreeMap<TickPrice, VecDeque<OrderId>>,
    asks: BTreeMap<TickPrice, VecDeque<OrderId>>,
    // Live orders in ascending id order.
    orders: Vec<LimitOrder>,
    bid_count: usize,
    ask_count: usize,
    next_id: OrderId,
}

impl LimitOrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn best_bid(&self) -> Option<TickPrice> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask(&self) -> Option<TickPrice> {
        self.asks.keys().next().copied()
    }

    /// Mid price in ticks; `None` unless both sides are populated.
    pub fn mid_price(&self) -> Option<f64> {
        match (self.best_bid(), self.best_ask()) {
            (Some(b), Some(a)) => Some((b.0 as f64 + a.0 as f64) / 2.0),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn depth(&self, side: Side) -> usize {
        match side {
            Side::Buy => self.bid_count,
            Side::Sell => self.ask_count,
        }
    }

    /// Id the next inserted order will receive.
    pub fn next_id(&self) -> OrderId {
        self.next_id
    }

    pub fn orders(&self) -> &[LimitOrder] {
        &self.orders
    }

    /// Price levels of one side as `(price, order count)`, ascending by price.
    pub fn levels(&self, side: Side) -> impl DoubleEndedIterator<Item = (TickPrice, usize)> + '_ {
        self.side_map(side).iter().map(|(p, q)| (*p, q.len()))
    }

    fn side_map(&self, side: Side) -> &BTreeMap<TickPrice, VecDeque<OrderId>> {
        match side {
            Side::Buy => &self.bids,
            Side::Sell => &self.asks,
        }
    }

    pub fn insert_limit(&mut self, side: Side, price: TickPrice) -> Result<OrderId> {
        let crossing = match side {
            Side::Buy => self.best_ask().filter(|&a| price >= a),
            Side::Sell => self.best_bid().filter(|&b| price <= b),
        };
        if let Some(opposite) = crossing {
            return Err(Error::CrossedBook { side, price, opposite });
        }

        let id = self.next_id;
        self.next_id += 1;
        let map = match side {
            Side::Buy => {
                self.bid_count += 1;
                &mut self.bids
            }
            Side::Sell => {
                self.ask_count += 1;
                &mut self.asks
            }
        };
        map.entry(price).or_default().push_back(id);
        self.orders.push(LimitOrder { id, side, price });
        Ok(id)
    }

    /// Execute a unit market order against the opposite best quote.
    ///
    /// Returns `None` and leaves the book untouched when the opposite side is empty.
    pub fn execute_market(&mut self, side: Side) -> Option<Trade> {
        let (map, count, sign) = match side {
            Side::Buy => (&mut self.asks, &mut self.ask_count, 1),
            Side::Sell => (&mut self.bids, &mut self.bid_count, -1),
        };
        let mut level = match side {
            Side::Buy => map.first_entry()?,
            Side::Sell => map.last_entry()?,
        };
        let price = *level.key();
        let id = level.get_mut().pop_front().expect("price levels are never left empty");
        if level.get().is_empty() {
            level.remove();
        }
        *count -= 1;

        let pos = self
            .orders
            .binary_search_by_key(&id, |o| o.id)
            .expect("executed order is live");
        self.orders.remove(pos);
        Some(Trade { price, sign })
    }

    /// Cancel each resting order independently with probability `delta`.
    ///
    /// Orders are visited in ascending id order, one uniform draw each, so a
    /// seeded sweep is reproducible. Returns the number of cancelled orders.
    pub fn cancel_sweep<R: Rng + ?Sized>(&mut self, delta: f64, rng: &mut R) -> usize {
        if delta <= 0.0 || self.orders.is_empty() {
            return 0;
        }
        if delta >= 1.0 {
            let n = self.orders.len();
            self.clear();
            return n;
        }

        let before = self.orders.len();
        let bids = &mut self.bids;
        let asks = &mut self.asks;
        let bid_count = &mut self.bid_count;
        let ask_count = &mut self.ask_count;
        self.orders.retain(|order| {
            if rng.random::<f64>() >= delta {
                return true;
            }
            let (map, count) = match order.side {
                Side::Buy => (&mut *bids, &mut *bid_count),
                Side::Sell => (&mut *asks, &mut *ask_count),
            };
            let queue = map.get_mut(&order.price).expect("level of live order");
            let pos = queue
                .iter()
                .position(|&id| id == order.id)
                .expect("live order is queued");
            queue.remove(pos);
            if queue.is_empty() {
                map.remove(&order.price);
            }
            *count -= 1;
            false
        });
        before - self.orders.len()
    }

    fn clear(&mut self) {
        self.bids.clear();
        self.asks.clear();
        self.orders.clear();
        self.bid_count = 0;
        self.ask_count = 0;
    }

    /// True when the book is not crossed (vacuously true if a side is empty).
    pub fn is_uncrossed(&self) -> bool {
        match (self.best_bid(), self.best_ask()) {
            (Some(b), Some(a)) => b < a,
            _ => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_pcg::Pcg64Mcg;

    fn p(t: u32) -> TickPrice {
        TickPrice::new(t).unwrap()
    }

    fn book_with(bids: &[u32], asks: &[u32]) -> LimitOrderBook {
        let mut book = LimitOrderBook::new();
        for &b in bids {
            book.insert_limit(Side::Buy, p(b)).unwrap();
        }
        for &a in asks {
            book.insert_limit(Side::Sell, p(a)).unwrap();
        }
        book
    }

    #[test]
    fn tick_price_rejects_zero() {
        assert!(TickPrice::new(0).is_none());
        assert_eq!(TickPrice::saturating(-5), TickPrice::MIN);
    }

    #[test]
    fn single_buy_sets_best_bid_only() {
        let book = book_with(&[100], &[]);
        assert_eq!(book.best_bid(), Some(p(100)));
        assert_eq!(book.best_ask(), None);
        assert_eq!(book.mid_price(), None);
    }

    #[test]
    fn sell_inside_spread_improves_ask() {
        let mut book = book_with(&[100], &[102]);
        book.insert_limit(Side::Sell, p(101)).unwrap();
        assert_eq!(book.best_ask(), Some(p(101)));
        assert!(book.is_uncrossed());
    }

    #[test]
    fn crossing_buy_is_rejected() {
        let mut book = book_with(&[100], &[102]);
        let err = book.insert_limit(Side::Buy, p(102)).unwrap_err();
        assert!(matches!(err, Error::CrossedBook { .. }));
        assert_eq!(book.len(), 2);
        let err = book.insert_limit(Side::Sell, p(100)).unwrap_err();
        assert!(matches!(err, Error::CrossedBook { .. }));
    }

    #[test]
    fn market_buy_takes_best_ask() {
        let mut book = book_with(&[100], &[102]);
        let trade = book.execute_market(Side::Buy).unwrap();
        assert_eq!(trade, Trade { price: p(102), sign: 1 });
        assert_eq!(book.best_ask(), None);
        assert_eq!(book.depth(Side::Sell), 0);
    }

    #[test]
    fn market_buy_on_empty_asks_is_noop() {
        let mut book = book_with(&[100], &[]);
        assert_eq!(book.execute_market(Side::Buy), None);
        assert_eq!(book.len(), 1);
        assert_eq!(book.best_bid(), Some(p(100)));
    }

    #[test]
    fn market_sell_takes_highest_bid() {
        let mut book = book_with(&[99, 100], &[102]);
        let trade = book.execute_market(Side::Sell).unwrap();
        assert_eq!(
            trade,
            Trade {
                price: p(100),
                sign: -1
            }
        );
        assert_eq!(book.best_bid(), Some(p(99)));
    }

    #[test]
    fn same_level_executes_fifo() {
        let mut book = book_with(&[100, 100], &[]);
        book.execute_market(Side::Sell).unwrap();
        assert_eq!(book.orders()[0].id, 1);
    }

    #[test]
    fn mid_prices() {
        assert_eq!(book_with(&[100], &[102]).mid_price(), Some(101.0));
        assert_eq!(book_with(&[100], &[101]).mid_price(), Some(100.5));
        assert_eq!(book_with(&[100], &[]).mid_price(), None);
    }

    #[test]
    fn sweep_extremes() {
        let mut rng = Pcg64Mcg::seed_from_u64(1);
        let mut book = book_with(&[90, 95, 100], &[105, 110]);
        assert_eq!(book.cancel_sweep(0.0, &mut rng), 0);
        assert_eq!(book.len(), 5);
        assert_eq!(book.cancel_sweep(1.0, &mut rng), 5);
        assert!(book.is_empty());
        assert_eq!(book.best_bid(), None);
        assert_eq!(book.depth(Side::Buy), 0);
    }

    fn wide_book(n: usize) -> LimitOrderBook {
        let mut book = LimitOrderBook::new();
        for i in 0..n {
            if i % 2 == 0 {
                book.insert_limit(Side::Buy, p(1000 - (i % 300) as u32)).unwrap();
            } else {
                book.insert_limit(Side::Sell, p(1001 + (i % 300) as u32)).unwrap();
            }
        }
        book
    }

    #[test]
    fn half_sweep_count_within_binomial_band() {
        // Binomial(1000, 0.5): P(|X - 500| > 60) = 1.6e-4, computed exactly in
        // the oracle below.
        let tail: f64 = {
            let n = 1000u64;
            let ln_fact: Vec<f64> = (0..=n)
                .scan(0.0, |acc, k| {
                    if k > 0 {
                        *acc += (k as f64).ln();
                    }
                    Some(*acc)
                })
                .collect();
            (0..=n)
                .filter(|&k| !(440..=560).contains(&k))
                .map(|k| {
                    (ln_fact[n as usize]
                        - ln_fact[k as usize]
                        - ln_fact[(n - k) as usize]
                        - n as f64 * std::f64::consts::LN_2)
                        .exp()
                })
                .sum()
        };
        assert!(tail < 1e-3, "tail {tail}");

        for seed in 0..20 {
            let mut rng = Pcg64Mcg::seed_from_u64(seed);
            let mut book = wide_book(1000);
            let n = book.cancel_sweep(0.5, &mut rng);
            assert!((440..=560).contains(&n), "seed {seed}: {n}");
            assert_eq!(book.len(), 1000 - n);
            assert_eq!(book.depth(Side::Buy) + book.depth(Side::Sell), book.len());
        }
    }

    #[test]
    fn sweep_mean_fraction_matches_delta() {
        let n = 1000usize;
        let reps = 1000usize;
        for &delta in &[0.025, 0.3] {
            let mut rng = Pcg64Mcg::seed_from_u64(77);
            let template = wide_book(n);
            let mut total = 0usize;
            for _ in 0..reps {
                let mut book = template.clone();
                total += book.cancel_sweep(delta, &mut rng);
            }
            let frac = total as f64 / (n * reps) as f64;
            let tol = 3.0 * (delta * (1.0 - delta) / n as f64 / reps as f64).sqrt();
            assert!((frac - delta).abs() < tol, "delta {delta}: {frac}");
        }
    }

    #[test]
    fn sweep_is_reproducible() {
        let run = |seed| {
            let mut rng = Pcg64Mcg::seed_from_u64(seed);
            let mut book = wide_book(500);
            book.cancel_sweep(0.3, &mut rng);
            book.orders().iter().map(|o| o.id).collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }

    #[derive(Debug, Clone)]
    enum Op {
        Limit(Side, u32),
        Market(Side),
        Cancel(f64),
    }

    fn op() -> impl Strategy<Value = Op> {
        let side = prop_oneof![Just(Side::Buy), Just(Side::Sell)];
        prop_oneof![
            6 => (side.clone(), 0u32..40).prop_map(|(s, eta)| Op::Limit(s, eta)),
            3 => side.prop_map(Op::Market),
            1 => (0.0f64..0.5).prop_map(Op::Cancel),
        ]
    }

    proptest! {
        #[test]
        fn random_valid_operations_keep_book_consistent(ops in prop::collection::vec(op(), 1..300), seed in 0u64..1000) {
            let mut rng = Pcg64Mcg::seed_from_u64(seed);
            let mut book = LimitOrderBook::new();
            let mut last_id = None;
            for op in ops {
                let before = book.len();
                match op {
                    Op::Limit(side, eta) => {
                        // Opposite-side reference pricing, falling back to a fixed anchor.
                        let price = match side {
                            Side::Buy => book.best_ask().map_or(500, |a| a.ticks() as i64) - 1 - eta as i64,
                            Side::Sell => book.best_bid().map_or(500, |b| b.ticks() as i64) + 1 + eta as i64,
                        };
                        let id = book.insert_limit(side, TickPrice::saturating(price).max(TickPrice::new(2).unwrap()));
                        if let Ok(id) = id {
                            prop_assert!(last_id.is_none_or(|l| id > l));
                            last_id = Some(id);
                            prop_assert_eq!(book.len(), before + 1);
                        }
                    }
                    Op::Market(side) => {
                        let t = book.execute_market(side);
                        prop_assert_eq!(book.len(), before - t.is_some() as usize);
                    }
                    Op::Cancel(d) => {
                        let c = book.cancel_sweep(d, &mut rng);
                        prop_assert_eq!(book.len(), before - c);
                    }
                }
                prop_assert!(book.is_uncrossed());
                prop_assert_eq!(book.depth(Side::Buy) + book.depth(Side::Sell), book.len());
                prop_assert!(book.orders().windows(2).all(|w| w[0].id < w[1].id));
            }
        }
    }
}
