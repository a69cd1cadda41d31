//! Differential harness: the engine against the naive reference matcher on
//! random operation streams.

use super::reference::{RefAlgo, RefBook, RefKind, RefOrder, RefTrade};
use marketsim_core::engine::{BookEvent, MatchingAlgo, OrderBook, RequeueReason};
use marketsim_core::rng::Substream;
use marketsim_core::{
    InstrumentId, Order, OrderId, OrderKind, ParticipantId, Price, Qty, Replenish, Side, SimTime, TimeInForce, VenueId,
};

const LOT: u64 = 100;

struct Harness {
    engine: OrderBook,
    oracle: RefBook,
    rng: Substream,
    next_id: u64,
    live: Vec<u64>,
    now: u64,
    trades: usize,
    replenishes: usize,
}

impl Harness {
    fn new(algo: MatchingAlgo, seed: u64) -> Harness {
        let ref_algo = match algo {
            MatchingAlgo::Fifo => RefAlgo::Fifo,
            MatchingAlgo::ProRata => RefAlgo::ProRata,
        };
        Harness {
            engine: OrderBook::new(InstrumentId(0), algo, Qty(LOT)).with_seed(seed),
            oracle: RefBook::new(ref_algo, LOT, seed),
            rng: Substream::new(seed ^ 0x5eed, 0),
            next_id: 1,
            live: Vec::new(),
            now: 0,
            trades: 0,
            replenishes: 0,
        }
    }

    fn random_new(&mut self) -> (Order, RefOrder) {
        let id = self.next_id;
        self.next_id += 1;
        let buy = self.rng.chance(1, 2);
        let price = 95 + self.rng.uniform(0, 10);
        let qty = LOT * self.rng.uniform(1, 6)
            + if self.rng.chance(1, 4) {
                self.rng.uniform(1, 99)
            } else {
                0
            };
        let ioc = self.rng.chance(1, 10);
        let (kind, rkind) = match self.rng.uniform(0, 9) {
            0 => (OrderKind::Market, RefKind::Market),
            1 => (OrderKind::Hidden, RefKind::Hidden),
            2 | 3 => {
                let display = LOT * self.rng.uniform(1, 2);
                let random = self.rng.chance(1, 2);
                let replenish = if random { Replenish::Random } else { Replenish::Fixed };
                (
                    OrderKind::Reserve {
                        display_size: Qty(display),
                        replenish,
                    },
                    RefKind::Reserve { display, random },
                )
            }
            4 => {
                let range = self.rng.uniform(0, 3);
                (OrderKind::Discretionary { range }, RefKind::Discretionary { range })
            }
            5 => (OrderKind::DayIso, RefKind::DayIso),
            _ => (OrderKind::Limit, RefKind::Limit),
        };
        let priced = !matches!(rkind, RefKind::Market);
        let side = if buy { Side::Buy } else { Side::Sell };
        let tif = if ioc { TimeInForce::Ioc } else { TimeInForce::Day };
        let order = Order::new(
            OrderId(id),
            ParticipantId(1),
            VenueId(0),
            InstrumentId(0),
            side,
            kind,
            priced.then_some(Price(price)),
            Qty(qty),
        )
        .with_tif(tif);
        let reference = RefOrder::new(id, buy, rkind, priced.then_some(price), qty, ioc);
        (order, reference)
    }

    fn step(&mut self, op: usize) {
        self.now += self.rng.uniform(0, 3);
        let now = SimTime(self.now);
        let roll = self.rng.uniform(0, 99);
        if roll < 60 || self.live.is_empty() {
            let (order, reference) = self.random_new();
            let id = order.id.0;
            let got = self.engine.insert_order(order, now).expect("valid order");
            let (want, expired) = self.oracle.insert(reference, self.now);
            assert_trades(op, &got.trades, &want);
            self.trades += want.len();
            assert_eq!(got.expired_qty.0, expired, "op {op}: expired quantity");
            if got.resting.is_some() {
                self.live.push(id);
            }
        } else if roll < 80 {
            let idx = self.rng.uniform(0, self.live.len() as u64 - 1) as usize;
            let id = self.live.swap_remove(idx);
            let got = self.engine.cancel_order(OrderId(id), now).ok();
            let want = self.oracle.cancel(id);
            assert_eq!(got.is_some(), want.is_some(), "op {op}: cancel of {id}");
        } else {
            let idx = self.rng.uniform(0, self.live.len() as u64 - 1) as usize;
            let id = self.live[idx];
            let new_price = self.rng.chance(1, 2).then(|| 95 + self.rng.uniform(0, 10));
            let new_qty = self.rng.chance(2, 3).then(|| LOT * self.rng.uniform(0, 6));
            let got = self
                .engine
                .modify_order(OrderId(id), new_price.map(Price), new_qty.map(Qty), now);
            let want = self.oracle.modify(id, new_price, new_qty, self.now);
            match (got, want) {
                (Ok(out), Some(trades)) => {
                    assert_trades(op, &out.trades, &trades);
                    self.trades += trades.len();
                }
                (Err(_), None) => {}
                (g, w) => panic!("op {op}: modify of {id} disagrees: {g:?} vs {w:?}"),
            }
        }
        self.replenishes += self
            .engine
            .drain_events()
            .iter()
            .filter(|e| {
                matches!(
                    e,
                    BookEvent::Requeued {
                        reason: RequeueReason::Replenish,
                        ..
                    }
                )
            })
            .count();
        self.live.retain(|id| self.oracle.resting.iter().any(|o| o.id == *id));
    }

    fn assert_books_equal(&self, op: usize) {
        for (side, buy) in [(Side::Buy, true), (Side::Sell, false)] {
            let got: Vec<(u64, u64, u64, u64)> = self
                .engine
                .queue(side)
                .into_iter()
                .map(|id| {
                    let o = self.engine.get(id).unwrap();
                    (id.0, o.limit_price.unwrap().0, o.open_qty.0, o.displayed_qty.0)
                })
                .collect();
            assert_eq!(got, self.oracle.side(buy), "op {op}: {side:?} queue");
        }
        self.engine
            .check_invariants()
            .unwrap_or_else(|e| panic!("op {op}: {e}"));
    }
}

fn assert_trades(op: usize, got: &[marketsim_core::engine::Trade], want: &[RefTrade]) {
    let got: Vec<RefTrade> = got
        .iter()
        .map(|t| RefTrade {
            taker: t.taker_order_id.0,
            maker: t.maker_order_id.0,
            price: t.price.0,
            qty: t.qty.0,
        })
        .collect();
    assert_eq!(got, want, "op {op}: trades");
}

/// Drives the engine and the reference through `ops` random operations per
/// seed, panicking on the first disagreement. Returns the total trade count.
pub fn run(algo: MatchingAlgo, seeds: u64, ops: usize) -> usize {
    let mut total = 0;
    for seed in 0..seeds {
        let mut h = Harness::new(algo, seed);
        for op in 0..ops {
            h.step(op);
            if op % 250 == 0 {
                h.assert_books_equal(op);
            }
        }
        h.assert_books_equal(ops);
        assert!(h.trades > ops / 5, "seed {seed}: only {} trades", h.trades);
        assert!(h.replenishes > 20, "seed {seed}: only {} replenishes", h.replenishes);
        total += h.trades;
    }
    total
}
