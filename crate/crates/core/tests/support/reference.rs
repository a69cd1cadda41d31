//! Naive reference matcher used as an oracle for the engine.
//!
//! Deliberately simple: a flat list of resting orders and a from-scratch scan for
//! the best counterparty on every fill. Shares no matching code with the engine.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use marketsim_core::rng::{StreamTag, Substream};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefKind {
    Market,
    Limit,
    Hidden,
    Reserve { display: u64, random: bool },
    Discretionary { range: u64 },
    DayIso,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefAlgo {
    Fifo,
    ProRata,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefOrder {
    pub id: u64,
    pub buy: bool,
    pub kind: RefKind,
    pub price: Option<u64>,
    pub open: u64,
    pub displayed: u64,
    pub ioc: bool,
    pub head: bool,
    pub ts: u64,
    pub seq: u64,
}

impl RefOrder {
    pub fn new(id: u64, buy: bool, kind: RefKind, price: Option<u64>, qty: u64, ioc: bool) -> RefOrder {
        let mut o = RefOrder {
            id,
            buy,
            kind,
            price,
            open: qty,
            displayed: 0,
            ioc,
            head: false,
            ts: 0,
            seq: 0,
        };
        o.displayed = o.fresh_display();
        o
    }

    fn hidden(&self) -> bool {
        matches!(self.kind, RefKind::Hidden)
    }

    fn fresh_display(&self) -> u64 {
        match self.kind {
            RefKind::Hidden => 0,
            RefKind::Reserve { display, .. } => self.open.min(display),
            _ => self.open,
        }
    }

    fn executable(&self) -> u64 {
        if self.hidden() {
            self.open
        } else {
            self.displayed
        }
    }

    /// Smaller is better. Prices are flipped for bids so one comparison serves both sides.
    fn key(&self) -> (i128, u8, u8, u64, u64) {
        let p = self.price.expect("resting orders are priced") as i128;
        (
            if self.buy { -p } else { p },
            self.hidden() as u8,
            (!self.head) as u8,
            self.ts,
            self.seq,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefTrade {
    pub taker: u64,
    pub maker: u64,
    pub price: u64,
    pub qty: u64,
}

pub struct RefBook {
    pub algo: RefAlgo,
    pub lot: u64,
    pub seed: u64,
    pub resting: Vec<RefOrder>,
    seq: u64,
    iso_used: BTreeSet<(bool, u64)>,
    streams: BTreeMap<u64, Substream>,
}

impl RefBook {
    pub fn new(algo: RefAlgo, lot: u64, seed: u64) -> RefBook {
        RefBook {
            algo,
            lot,
            seed,
            resting: Vec::new(),
            seq: 0,
            iso_used: BTreeSet::new(),
            streams: BTreeMap::new(),
        }
    }

    fn limit_of(o: &RefOrder) -> Option<u64> {
        let p = o.price?;
        Some(match o.kind {
            RefKind::Discretionary { range } => {
                if o.buy {
                    p + range
                } else {
                    p.saturating_sub(range)
                }
            }
            _ => p,
        })
    }

    fn acceptable(buy: bool, limit: Option<u64>, price: u64) -> bool {
        match limit {
            None => true,
            Some(l) => {
                if buy {
                    price <= l
                } else {
                    price >= l
                }
            }
        }
    }

    /// Index of the best resting counterparty for `incoming`, scanning everything.
    fn best_counterparty(&self, incoming: &RefOrder, limit: Option<u64>) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, o) in self.resting.iter().enumerate() {
            if o.buy == incoming.buy || o.executable() == 0 {
                continue;
            }
            if !Self::acceptable(incoming.buy, limit, o.price.unwrap()) {
                continue;
            }
            if best.is_none_or(|b| o.key() < self.resting[b].key()) {
                best = Some(i);
            }
        }
        best
    }

    pub fn insert(&mut self, mut incoming: RefOrder, now: u64) -> (Vec<RefTrade>, u64) {
        let limit = Self::limit_of(&incoming);
        let trades = self.match_order(&mut incoming, limit, now);
        let expired = self.finish(incoming, now);
        (trades, expired)
    }

    fn finish(&mut self, incoming: RefOrder, now: u64) -> u64 {
        if incoming.open == 0 {
            return 0;
        }
        if incoming.ioc || incoming.price.is_none() {
            return incoming.open;
        }
        self.rest(incoming, now);
        0
    }

    fn rest(&mut self, mut o: RefOrder, now: u64) {
        self.seq += 1;
        o.ts = now;
        o.seq = self.seq;
        o.displayed = o.fresh_display();
        if matches!(o.kind, RefKind::DayIso) {
            o.head = self.iso_used.insert((o.buy, o.price.unwrap()));
        }
        self.resting.push(o);
    }

    fn match_order(&mut self, incoming: &mut RefOrder, limit: Option<u64>, now: u64) -> Vec<RefTrade> {
        let mut trades = Vec::new();
        while incoming.open > 0 {
            let Some(best) = self.best_counterparty(incoming, limit) else {
                break;
            };
            match self.algo {
                RefAlgo::Fifo => {
                    let qty = incoming.open.min(self.resting[best].executable());
                    self.fill(incoming, self.resting[best].id, qty, now, &mut trades);
                }
                RefAlgo::ProRata => {
                    let price = self.resting[best].price;
                    let hidden = self.resting[best].hidden();
                    let mut group: Vec<&RefOrder> = self
                        .resting
                        .iter()
                        .filter(|o| o.buy != incoming.buy && o.price == price && o.hidden() == hidden)
                        .filter(|o| o.executable() > 0)
                        .collect();
                    group.sort_by_key(|o| o.key());
                    let ids: Vec<u64> = group.iter().map(|o| o.id).collect();
                    let sizes: Vec<u64> = group.iter().map(|o| o.executable()).collect();
                    let alloc = hamilton(incoming.open, &sizes);
                    for (id, q) in ids.into_iter().zip(alloc) {
                        if q > 0 {
                            self.fill(incoming, id, q, now, &mut trades);
                        }
                    }
                }
            }
        }
        trades
    }

    fn fill(&mut self, incoming: &mut RefOrder, maker_id: u64, qty: u64, now: u64, trades: &mut Vec<RefTrade>) {
        let i = self.resting.iter().position(|o| o.id == maker_id).unwrap();
        let maker = &mut self.resting[i];
        maker.open -= qty;
        maker.displayed = maker.displayed.saturating_sub(qty).min(maker.open);
        incoming.open -= qty;
        incoming.displayed = incoming.displayed.saturating_sub(qty).min(incoming.open);
        trades.push(RefTrade {
            taker: incoming.id,
            maker: maker_id,
            price: maker.price.unwrap(),
            qty,
        });
        if maker.open == 0 {
            self.resting.remove(i);
            self.streams.remove(&maker_id);
            return;
        }
        if let RefKind::Reserve { display, random } = maker.kind {
            if maker.displayed < self.lot && maker.open > maker.displayed {
                self.seq += 1;
                let seq = self.seq;
                let seed = self.seed;
                let target = if random {
                    let stream = self
                        .streams
                        .entry(maker_id)
                        .or_insert_with(|| Substream::for_entity(seed, StreamTag::Reserve, maker_id));
                    stream.uniform(self.lot.min(display), display)
                } else {
                    display
                };
                let maker = &mut self.resting[i];
                let target = target.min(maker.open);
                if target > maker.displayed {
                    maker.displayed = target;
                    maker.ts = now;
                    maker.seq = seq;
                }
            }
        }
    }

    pub fn cancel(&mut self, id: u64) -> Option<RefOrder> {
        let i = self.resting.iter().position(|o| o.id == id)?;
        self.streams.remove(&id);
        Some(self.resting.remove(i))
    }

    /// Returns trades, or `None` if the order is unknown or the request invalid.
    pub fn modify(&mut self, id: u64, new_price: Option<u64>, new_qty: Option<u64>, now: u64) -> Option<Vec<RefTrade>> {
        let i = self.resting.iter().position(|o| o.id == id)?;
        if new_qty == Some(0) {
            return None;
        }
        let cur = self.resting[i].clone();
        let price_change = new_price.is_some_and(|p| Some(p) != cur.price);
        let increase = new_qty.is_some_and(|q| q > cur.open);
        if price_change || increase {
            let mut o = self.resting.remove(i);
            if let Some(p) = new_price {
                o.price = Some(p);
            }
            if let Some(q) = new_qty {
                o.open = q;
            }
            o.head = false;
            o.displayed = o.fresh_display();
            let limit = Self::limit_of(&o);
            let trades = self.match_order(&mut o, limit, now);
            if o.open > 0 {
                self.seq += 1;
                o.ts = now;
                o.seq = self.seq;
                o.displayed = o.fresh_display();
                self.resting.push(o);
            } else {
                self.streams.remove(&id);
            }
            return Some(trades);
        }
        if let Some(q) = new_qty {
            if q < cur.open {
                let o = &mut self.resting[i];
                o.open = q;
                o.displayed = o.displayed.min(q);
            }
        }
        Some(Vec::new())
    }

    /// Resting orders of one side in priority order: (id, price, open, displayed).
    pub fn side(&self, buy: bool) -> Vec<(u64, u64, u64, u64)> {
        let mut v: Vec<&RefOrder> = self.resting.iter().filter(|o| o.buy == buy).collect();
        v.sort_by_key(|o| o.key());
        v.into_iter()
            .map(|o| (o.id, o.price.unwrap(), o.open, o.displayed))
            .collect()
    }
}

/// Largest-remainder apportionment by repeated selection of the biggest remainder.
pub fn hamilton(total_in: u64, sizes: &[u64]) -> Vec<u64> {
    let sum: u128 = sizes.iter().map(|&s| s as u128).sum();
    if sum == 0 {
        return vec![0; sizes.len()];
    }
    if total_in as u128 >= sum {
        return sizes.to_vec();
    }
    let q = total_in as u128;
    let mut out: Vec<u64> = sizes.iter().map(|&s| (q * s as u128 / sum) as u64).collect();
    let mut rem: Vec<Option<u128>> = sizes.iter().map(|&s| Some(q * s as u128 % sum)).collect();
    let mut left = total_in - out.iter().sum::<u64>();
    while left > 0 {
        let mut pick = None;
        for (i, r) in rem.iter().enumerate() {
            if let Some(r) = r {
                if pick.is_none_or(|(_, br)| *r > br) {
                    pick = Some((i, *r));
                }
            }
        }
        let (i, _) = pick.expect("a remainder exists while shares are left");
        out[i] += 1;
        rem[i] = None;
        left -= 1;
    }
    out
}
