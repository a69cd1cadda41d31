//! Per-instrument limit order book.
//!
//! Each side is a map of price levels; each level keeps its queue sorted by
//! `(display class, head-of-class flag, entry_ts, entry_seq)`. Orders are owned
//! by an id-keyed map and the queues hold ids only.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::mem;

use serde::{Deserialize, Serialize};

use super::pro_rata;
use super::view::{DepthLevel, L1View, L2View, OrderView, Quote};
use super::EngineError;
use crate::order::{DisplayClass, DisplayState, Order, OrderKind, Replenish, TimeInForce};
use crate::rng::{StreamTag, Substream};
use crate::types::{InstrumentId, OrderId, ParticipantId, Price, Qty, Side, SimTime};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchingAlgo {
    #[default]
    Fifo,
    ProRata,
}

/// Total priority order over resting orders of one side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankKey {
    pub side: Side,
    pub price: Price,
    pub class: DisplayClass,
    pub head_of_class: bool,
    pub entry_ts: SimTime,
    pub entry_seq: u64,
}

impl Ord for RankKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.side
            .cmp(&other.side)
            .then_with(|| match self.side {
                Side::Buy => other.price.cmp(&self.price),
                Side::Sell => self.price.cmp(&other.price),
            })
            .then(self.class.cmp(&other.class))
            .then(other.head_of_class.cmp(&self.head_of_class))
            .then(self.entry_ts.cmp(&other.entry_ts))
            .then(self.entry_seq.cmp(&other.entry_seq))
    }
}

impl PartialOrd for RankKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Priority of `order`. Market orders rank as the most aggressive price on their side.
pub fn rank_key(order: &Order) -> RankKey {
    let price = order.limit_price.unwrap_or(match order.side {
        Side::Buy => Price(u64::MAX),
        Side::Sell => Price(0),
    });
    RankKey {
        side: order.side,
        price,
        class: order.display_class(),
        head_of_class: order.head_of_class,
        entry_ts: order.entry_ts,
        entry_seq: order.entry_seq,
    }
}

type LevelKey = (DisplayClass, bool, SimTime, u64);

fn level_key(order: &Order) -> LevelKey {
    (
        order.display_class(),
        !order.head_of_class,
        order.entry_ts,
        order.entry_seq,
    )
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PriceLevel {
    queue: Vec<(LevelKey, OrderId)>,
}

impl PriceLevel {
    pub fn order_ids(&self) -> impl Iterator<Item = OrderId> + '_ {
        self.queue.iter().map(|(_, id)| *id)
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    fn insert(&mut self, key: LevelKey, id: OrderId) {
        let at = self.queue.partition_point(|(k, _)| *k < key);
        self.queue.insert(at, (key, id));
    }

    fn remove(&mut self, id: OrderId) -> bool {
        match self.queue.iter().position(|(_, o)| *o == id) {
            Some(at) => {
                self.queue.remove(at);
                true
            }
            None => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trade {
    pub instrument: InstrumentId,
    pub taker_order_id: OrderId,
    pub maker_order_id: OrderId,
    pub taker_participant: ParticipantId,
    pub maker_participant: ParticipantId,
    pub taker_side: Side,
    pub price: Price,
    pub qty: Qty,
    pub ts: SimTime,
    /// `None` for auction prints, which have no aggressor.
    pub aggressor_side: Option<Side>,
    pub taker_anonymous: bool,
    pub maker_anonymous: bool,
}

impl Trade {
    pub fn buyer(&self) -> (OrderId, ParticipantId) {
        match self.taker_side {
            Side::Buy => (self.taker_order_id, self.taker_participant),
            Side::Sell => (self.maker_order_id, self.maker_participant),
        }
    }

    pub fn seller(&self) -> (OrderId, ParticipantId) {
        match self.taker_side {
            Side::Sell => (self.taker_order_id, self.taker_participant),
            Side::Buy => (self.maker_order_id, self.maker_participant),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequeueReason {
    Replenish,
    Modify,
    Unslide,
    Relight,
    Reslide,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemoveReason {
    Filled,
    Canceled,
    /// IOC or market remainder dropped after matching.
    Expired,
}

/// State changes of resting orders, in the order they happened.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum BookEvent {
    Rested {
        order_id: OrderId,
        participant: ParticipantId,
        side: Side,
        kind: OrderKind,
        price: Option<Price>,
        class: DisplayClass,
        head_of_class: bool,
        entry_ts: SimTime,
        entry_seq: u64,
        visible_qty: Qty,
        open_qty: Qty,
    },
    Requeued {
        order_id: OrderId,
        reason: RequeueReason,
        price: Price,
        class: DisplayClass,
        entry_ts: SimTime,
        entry_seq: u64,
        visible_qty: Qty,
        open_qty: Qty,
    },
    Reduced {
        order_id: OrderId,
        visible_qty: Qty,
        open_qty: Qty,
    },
    Removed {
        order_id: OrderId,
        reason: RemoveReason,
        open_qty: Qty,
    },
    /// One fill; open quantities are after the fill.
    Executed {
        maker_order_id: OrderId,
        taker_order_id: OrderId,
        price: Price,
        qty: Qty,
        maker_open_qty: Qty,
        taker_open_qty: Qty,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InsertOutcome {
    pub trades: Vec<Trade>,
    /// Snapshot of the resting remainder, if any.
    pub resting: Option<Order>,
    /// Remainder dropped because the order may not rest (IOC / market).
    pub expired_qty: Qty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModifyOutcome {
    pub order: Order,
    pub trades: Vec<Trade>,
    /// False when the order kept its queue position.
    pub lost_priority: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuctionOutcome {
    pub clearing_price: Option<Price>,
    pub volume: Qty,
    pub trades: Vec<Trade>,
}

/// Venue-side display adjustments of a resting order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reposition {
    /// Display at `to` with fresh priority, remembering the intended price.
    Slide { to: Price },
    /// Return a slid order to its intended price with fresh priority.
    Unslide,
    /// Switch a hidden hide-and-light order back to displayed, keeping its priority.
    Relight,
}

#[derive(Clone, Debug)]
pub struct OrderBook {
    instrument: InstrumentId,
    algo: MatchingAlgo,
    round_lot: Qty,
    seed: u64,
    bids: BTreeMap<Price, PriceLevel>,
    asks: BTreeMap<Price, PriceLevel>,
    orders: BTreeMap<OrderId, Order>,
    /// Market orders waiting for the next call auction.
    unpriced: Vec<OrderId>,
    last_trade_price: Option<Price>,
    seq_counter: u64,
    iso_head_used: BTreeSet<(Side, Price)>,
    reserve_streams: BTreeMap<OrderId, Substream>,
    journal: Vec<BookEvent>,
}

impl OrderBook {
    pub fn new(instrument: InstrumentId, algo: MatchingAlgo, round_lot: Qty) -> OrderBook {
        OrderBook {
            instrument,
            algo,
            round_lot: if round_lot.is_zero() { Qty(1) } else { round_lot },
            seed: 0,
            bids: BTreeMap::new(),
            asks: BTreeMap::new(),
            orders: BTreeMap::new(),
            unpriced: Vec::new(),
            last_trade_price: None,
            seq_counter: 0,
            iso_head_used: BTreeSet::new(),
            reserve_streams: BTreeMap::new(),
            journal: Vec::new(),
        }
    }

    /// Seed for random reserve replenishment substreams.
    pub fn with_seed(mut self, seed: u64) -> OrderBook {
        self.seed = seed;
        self
    }

    pub fn instrument(&self) -> InstrumentId {
        self.instrument
    }

    pub fn algo(&self) -> MatchingAlgo {
        self.algo
    }

    pub fn round_lot(&self) -> Qty {
        self.round_lot
    }

    pub fn last_trade_price(&self) -> Option<Price> {
        self.last_trade_price
    }

    pub fn set_last_trade_price(&mut self, price: Option<Price>) {
        self.last_trade_price = price;
    }

    pub fn seq_counter(&self) -> u64 {
        self.seq_counter
    }

    pub fn get(&self, id: OrderId) -> Option<&Order> {
        self.orders.get(&id)
    }

    pub fn contains(&self, id: OrderId) -> bool {
        self.orders.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// Resting orders by id.
    pub fn orders(&self) -> impl Iterator<Item = &Order> {
        self.orders.values()
    }

    /// Resting order ids on `side` in priority order (best first).
    pub fn queue(&self, side: Side) -> Vec<OrderId> {
        let levels: alloc::boxed::Box<dyn Iterator<Item = &PriceLevel>> = match side {
            Side::Buy => alloc::boxed::Box::new(self.bids.values().rev()),
            Side::Sell => alloc::boxed::Box::new(self.asks.values()),
        };
        levels.flat_map(|l| l.order_ids()).collect()
    }

    /// Queue at one price level, best first.
    pub fn level_queue(&self, side: Side, price: Price) -> Vec<OrderId> {
        self.side(side)
            .get(&price)
            .map(|l| l.order_ids().collect())
            .unwrap_or_default()
    }

    pub fn drain_events(&mut self) -> Vec<BookEvent> {
        mem::take(&mut self.journal)
    }

    fn side(&self, side: Side) -> &BTreeMap<Price, PriceLevel> {
        match side {
            Side::Buy => &self.bids,
            Side::Sell => &self.asks,
        }
    }

    fn side_mut(&mut self, side: Side) -> &mut BTreeMap<Price, PriceLevel> {
        match side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        }
    }

    fn best_price(&self, side: Side) -> Option<Price> {
        match side {
            Side::Buy => self.bids.keys().next_back().copied(),
            Side::Sell => self.asks.keys().next().copied(),
        }
    }

    fn next_seq(&mut self) -> u64 {
        self.seq_counter += 1;
        self.seq_counter
    }

    /// Checks an incoming order against this book without changing anything.
    pub fn validate_new(&self, order: &Order) -> Result<(), EngineError> {
        if order.instrument != self.instrument {
            return Err(EngineError::UnknownInstrument(order.instrument));
        }
        if self.orders.contains_key(&order.id) {
            return Err(EngineError::DuplicateOrderId(order.id));
        }
        if order.open_qty.is_zero() {
            return Err(EngineError::InvalidOrder("quantity must be positive"));
        }
        if order.kind.has_price() && order.limit_price.is_none() {
            return Err(EngineError::InvalidOrder("priced order without a limit"));
        }
        if let OrderKind::Reserve { display_size, .. } = order.kind {
            if display_size.is_zero() {
                return Err(EngineError::InvalidOrder("reserve display size must be positive"));
            }
        }
        Ok(())
    }

    /// Worst price the incoming order accepts, including any discretionary range.
    fn effective_limit(order: &Order) -> Option<Price> {
        let limit = order.limit_price?;
        Some(match order.kind {
            OrderKind::Discretionary { range } => match order.side {
                Side::Buy => limit.up(range),
                Side::Sell => limit.down(range),
            },
            _ => limit,
        })
    }

    /// Matches and, when allowed, rests an incoming order.
    pub fn insert_order(&mut self, mut order: Order, now: SimTime) -> Result<InsertOutcome, EngineError> {
        self.validate_new(&order)?;
        let trades = self.match_incoming(&mut order, None, now);
        Ok(self.finish_incoming(order, trades, now))
    }

    /// Rests the remainder of an already matched order, or expires it.
    pub fn finish_incoming(&mut self, order: Order, trades: Vec<Trade>, now: SimTime) -> InsertOutcome {
        if order.is_filled() {
            return InsertOutcome {
                trades,
                resting: None,
                expired_qty: Qty::ZERO,
            };
        }
        if order.tif == TimeInForce::Ioc || !order.kind.has_price() {
            let expired_qty = order.open_qty;
            return InsertOutcome {
                trades,
                resting: None,
                expired_qty,
            };
        }
        let id = order.id;
        self.rest(order, now);
        InsertOutcome {
            trades,
            resting: self.orders.get(&id).cloned(),
            expired_qty: Qty::ZERO,
        }
    }

    /// Matches `incoming` against the opposite side with the book's algorithm.
    ///
    /// `cap` further restricts the worst acceptable price (used by venues to
    /// avoid trading through a better away quote).
    pub fn match_incoming(&mut self, incoming: &mut Order, cap: Option<Price>, now: SimTime) -> Vec<Trade> {
        let own = Self::effective_limit(incoming);
        let limit = match (own, cap) {
            (Some(a), Some(b)) => Some(match incoming.side {
                Side::Buy => a.min(b),
                Side::Sell => a.max(b),
            }),
            (a, b) => a.or(b),
        };
        self.sweep(incoming, limit, self.algo, now)
    }

    /// Price-time matching of `incoming` against the opposite side.
    pub fn match_fifo(&mut self, incoming: &mut Order, now: SimTime) -> Vec<Trade> {
        let limit = Self::effective_limit(incoming);
        self.sweep(incoming, limit, MatchingAlgo::Fifo, now)
    }

    /// Pro-rata matching of `incoming`; price priority still applies across levels.
    pub fn match_pro_rata(&mut self, incoming: &mut Order, now: SimTime) -> Vec<Trade> {
        let limit = Self::effective_limit(incoming);
        self.sweep(incoming, limit, MatchingAlgo::ProRata, now)
    }

    /// Fills a discretionary order inside its hidden range at the counterparties' prices.
    pub fn discretionary_probe(&mut self, order: &mut Order, now: SimTime) -> Vec<Trade> {
        let limit = Self::effective_limit(order);
        self.sweep(order, limit, self.algo, now)
    }

    fn sweep(&mut self, incoming: &mut Order, limit: Option<Price>, algo: MatchingAlgo, now: SimTime) -> Vec<Trade> {
        let mut trades = Vec::new();
        let opposite = incoming.side.opposite();
        while !incoming.is_filled() {
            let Some(price) = self.best_price(opposite) else { break };
            if let Some(limit) = limit {
                if !incoming.side.accepts(limit, price) {
                    break;
                }
            }
            let filled = match algo {
                MatchingAlgo::Fifo => self.fill_level_fifo(incoming, price, now, &mut trades),
                MatchingAlgo::ProRata => self.fill_level_pro_rata(incoming, price, now, &mut trades),
            };
            if !filled {
                break;
            }
        }
        trades
    }

    /// Returns false if the level had nothing executable.
    fn fill_level_fifo(&mut self, incoming: &mut Order, price: Price, now: SimTime, trades: &mut Vec<Trade>) -> bool {
        let side = incoming.side.opposite();
        let mut progressed = false;
        while !incoming.is_filled() {
            let Some(level) = self.side(side).get(&price) else {
                break;
            };
            let Some(&(_, maker_id)) = level.queue.first() else {
                self.side_mut(side).remove(&price);
                break;
            };
            let exec = self.orders[&maker_id].executable_qty();
            if exec.is_zero() {
                // Only a lit order with nothing displayed and nothing in reserve can get here.
                self.remove_resting(maker_id, RemoveReason::Expired);
                continue;
            }
            let qty = exec.min(incoming.open_qty);
            self.execute_fill(incoming, maker_id, price, qty, now, trades);
            progressed = true;
        }
        progressed
    }

    fn fill_level_pro_rata(
        &mut self,
        incoming: &mut Order,
        price: Price,
        now: SimTime,
        trades: &mut Vec<Trade>,
    ) -> bool {
        let side = incoming.side.opposite();
        let mut progressed = false;
        while !incoming.is_filled() {
            let Some(level) = self.side(side).get(&price) else {
                break;
            };
            let Some(&((class, ..), _)) = level.queue.first() else {
                self.side_mut(side).remove(&price);
                break;
            };
            // Lit orders share first; hidden ones only once no lit quantity remains.
            let group: Vec<OrderId> = level
                .queue
                .iter()
                .filter(|((c, ..), _)| *c == class)
                .map(|(_, id)| *id)
                .collect();
            let sizes: Vec<Qty> = group.iter().map(|id| self.orders[id].executable_qty()).collect();
            let allocations = pro_rata::allocate(incoming.open_qty, &sizes);
            if allocations.iter().all(|q| q.is_zero()) {
                break;
            }
            for (id, qty) in group.into_iter().zip(allocations) {
                if !qty.is_zero() {
                    self.execute_fill(incoming, id, price, qty, now, trades);
                    progressed = true;
                }
            }
        }
        progressed
    }

    fn execute_fill(
        &mut self,
        incoming: &mut Order,
        maker_id: OrderId,
        price: Price,
        qty: Qty,
        now: SimTime,
        trades: &mut Vec<Trade>,
    ) {
        let maker = self.orders.get_mut(&maker_id).expect("queued order exists");
        maker.apply_fill(qty);
        incoming.apply_fill(qty);
        trades.push(Trade {
            instrument: self.instrument,
            taker_order_id: incoming.id,
            maker_order_id: maker_id,
            taker_participant: incoming.participant,
            maker_participant: maker.participant,
            taker_side: incoming.side,
            price,
            qty,
            ts: now,
            aggressor_side: Some(incoming.side),
            taker_anonymous: incoming.anonymous,
            maker_anonymous: maker.anonymous,
        });
        self.journal.push(BookEvent::Executed {
            maker_order_id: maker_id,
            taker_order_id: incoming.id,
            price,
            qty,
            maker_open_qty: maker.open_qty,
            taker_open_qty: incoming.open_qty,
        });
        self.last_trade_price = Some(price);
        self.after_maker_fill(maker_id, now);
    }

    /// Removes filled makers and refills depleted reserve slices.
    fn after_maker_fill(&mut self, maker_id: OrderId, now: SimTime) {
        let maker = &self.orders[&maker_id];
        if maker.is_filled() {
            self.remove_resting(maker_id, RemoveReason::Filled);
            return;
        }
        if matches!(maker.kind, OrderKind::Reserve { .. })
            && maker.displayed_qty < self.round_lot
            && maker.open_qty > maker.displayed_qty
        {
            self.replenish(maker_id, now);
        }
    }

    fn replenish(&mut self, id: OrderId, now: SimTime) {
        let seq = self.next_seq();
        let round_lot = self.round_lot;
        let seed = self.seed;
        let stream = self
            .reserve_streams
            .entry(id)
            .or_insert_with(|| Substream::for_entity(seed, StreamTag::Reserve, id.0));
        let order = self.orders.get_mut(&id).expect("resting order");
        let price = order.limit_price.expect("reserve orders are priced");
        let side = order.side;
        let old_key = level_key(order);
        if !replenish_reserve(order, round_lot, stream, now, seq) {
            return;
        }
        let new_key = level_key(order);
        let event = BookEvent::Requeued {
            order_id: id,
            reason: RequeueReason::Replenish,
            price,
            class: order.display_class(),
            entry_ts: order.entry_ts,
            entry_seq: order.entry_seq,
            visible_qty: order.visible_qty(),
            open_qty: order.open_qty,
        };
        let level = self.side_mut(side).get_mut(&price).expect("level exists");
        level.queue.retain(|(k, o)| !(*o == id && *k == old_key));
        level.insert(new_key, id);
        self.journal.push(event);
    }

    fn remove_resting(&mut self, id: OrderId, reason: RemoveReason) -> Option<Order> {
        let order = self.orders.remove(&id)?;
        self.reserve_streams.remove(&id);
        match order.limit_price {
            Some(price) => {
                let levels = self.side_mut(order.side);
                if let Some(level) = levels.get_mut(&price) {
                    level.remove(id);
                    if level.is_empty() {
                        levels.remove(&price);
                    }
                }
            }
            None => self.unpriced.retain(|o| *o != id),
        }
        self.journal.push(BookEvent::Removed {
            order_id: id,
            reason,
            open_qty: order.open_qty,
        });
        Some(order)
    }

    /// Places an order in its price level with fresh priority. No matching.
    ///
    /// The first day ISO resting at a level in a session takes the head of the lit class.
    pub fn rest(&mut self, mut order: Order, now: SimTime) {
        order.entry_ts = now;
        order.entry_seq = self.next_seq();
        order.reset_display();
        if matches!(order.kind, OrderKind::DayIso) {
            if let Some(price) = order.limit_price {
                order.head_of_class = self.iso_head_used.insert((order.side, price));
            }
        }
        self.journal.push(BookEvent::Rested {
            order_id: order.id,
            participant: order.participant,
            side: order.side,
            kind: order.kind,
            price: order.limit_price,
            class: order.display_class(),
            head_of_class: order.head_of_class,
            entry_ts: order.entry_ts,
            entry_seq: order.entry_seq,
            visible_qty: order.visible_qty(),
            open_qty: order.open_qty,
        });
        let id = order.id;
        match order.limit_price {
            Some(price) => {
                let key = level_key(&order);
                self.side_mut(order.side).entry(price).or_default().insert(key, id);
            }
            None => self.unpriced.push(id),
        }
        self.orders.insert(id, order);
    }

    /// Adds an order for the next call auction without matching it.
    pub fn accumulate(&mut self, order: Order, now: SimTime) -> Result<(), EngineError> {
        self.validate_new(&order)?;
        self.rest(order, now);
        Ok(())
    }

    pub fn cancel_order(&mut self, id: OrderId, _now: SimTime) -> Result<Order, EngineError> {
        self.remove_resting(id, RemoveReason::Canceled)
            .ok_or(EngineError::UnknownOrder(id))
    }

    /// Changes price and/or open quantity of a resting order.
    ///
    /// A price change or a size increase re-enters the order at the back of its
    /// class (and may trade); a pure size decrease keeps its position.
    pub fn modify_order(
        &mut self,
        id: OrderId,
        new_price: Option<Price>,
        new_qty: Option<Qty>,
        now: SimTime,
    ) -> Result<ModifyOutcome, EngineError> {
        let current = self.orders.get(&id).ok_or(EngineError::UnknownOrder(id))?;
        if new_qty.is_some_and(|q| q.is_zero()) {
            return Err(EngineError::InvalidModification("quantity must be positive"));
        }
        if new_price.is_some() && !current.kind.has_price() {
            return Err(EngineError::InvalidModification("market orders have no price"));
        }
        let price_change = new_price.is_some_and(|p| Some(p) != current.intended_price());
        let qty_increase = new_qty.is_some_and(|q| q > current.open_qty);

        if price_change || qty_increase {
            let mut order = self.take_resting(id).expect("checked above");
            if let Some(p) = new_price {
                order.limit_price = Some(p);
            } else {
                order.limit_price = order.intended_price();
            }
            if matches!(order.display_state, DisplayState::Slid { .. }) {
                order.display_state = DisplayState::Displayed;
            }
            if let Some(q) = new_qty {
                order.total_qty = order.total_qty - order.open_qty + q;
                order.open_qty = q;
            }
            order.head_of_class = false;
            order.reset_display();
            let trades = self.match_incoming(&mut order, None, now);
            if order.is_filled() {
                self.journal.push(BookEvent::Removed {
                    order_id: id,
                    reason: RemoveReason::Filled,
                    open_qty: Qty::ZERO,
                });
                return Ok(ModifyOutcome {
                    order,
                    trades,
                    lost_priority: true,
                });
            }
            order.reset_display();
            self.requeue(order, RequeueReason::Modify, true, now);
            return Ok(ModifyOutcome {
                order: self.orders[&id].clone(),
                trades,
                lost_priority: true,
            });
        }

        if let Some(q) = new_qty {
            if q < current.open_qty {
                let order = self.orders.get_mut(&id).expect("checked above");
                order.total_qty = order.total_qty - order.open_qty + q;
                order.open_qty = q;
                order.displayed_qty = order.displayed_qty.min(q);
                let event = BookEvent::Reduced {
                    order_id: id,
                    visible_qty: order.visible_qty(),
                    open_qty: order.open_qty,
                };
                self.journal.push(event);
            }
        }
        Ok(ModifyOutcome {
            order: self.orders[&id].clone(),
            trades: Vec::new(),
            lost_priority: false,
        })
    }

    /// Detaches a resting order from its level without journaling a removal.
    fn take_resting(&mut self, id: OrderId) -> Option<Order> {
        let order = self.orders.remove(&id)?;
        if let Some(price) = order.limit_price {
            let levels = self.side_mut(order.side);
            if let Some(level) = levels.get_mut(&price) {
                level.remove(id);
                if level.is_empty() {
                    levels.remove(&price);
                }
            }
        } else {
            self.unpriced.retain(|o| *o != id);
        }
        Some(order)
    }

    fn requeue(&mut self, mut order: Order, reason: RequeueReason, fresh: bool, now: SimTime) {
        if fresh {
            order.entry_ts = now;
            order.entry_seq = self.next_seq();
        }
        let price = order.limit_price.expect("requeued orders are priced");
        self.journal.push(BookEvent::Requeued {
            order_id: order.id,
            reason,
            price,
            class: order.display_class(),
            entry_ts: order.entry_ts,
            entry_seq: order.entry_seq,
            visible_qty: order.visible_qty(),
            open_qty: order.open_qty,
        });
        let key = level_key(&order);
        let id = order.id;
        self.side_mut(order.side).entry(price).or_default().insert(key, id);
        self.orders.insert(id, order);
    }

    /// Applies a venue display adjustment. Unsliding may trade against the local book.
    pub fn reposition(&mut self, id: OrderId, change: Reposition, now: SimTime) -> Result<Vec<Trade>, EngineError> {
        if !self.orders.contains_key(&id) {
            return Err(EngineError::UnknownOrder(id));
        }
        let mut order = self.take_resting(id).expect("checked above");
        match change {
            Reposition::Slide { to } => {
                let original_price = order.intended_price().expect("priced");
                order.display_state = DisplayState::Slid { original_price };
                order.limit_price = Some(to);
                order.reset_display();
                self.requeue(order, RequeueReason::Reslide, true, now);
                Ok(Vec::new())
            }
            Reposition::Unslide => {
                order.limit_price = order.intended_price();
                order.display_state = DisplayState::Displayed;
                order.reset_display();
                let trades = self.match_incoming(&mut order, None, now);
                if order.is_filled() {
                    self.journal.push(BookEvent::Removed {
                        order_id: id,
                        reason: RemoveReason::Filled,
                        open_qty: Qty::ZERO,
                    });
                } else {
                    self.requeue(order, RequeueReason::Unslide, true, now);
                }
                Ok(trades)
            }
            Reposition::Relight => {
                order.display_state = DisplayState::Displayed;
                order.reset_display();
                self.requeue(order, RequeueReason::Relight, false, now);
                Ok(Vec::new())
            }
        }
    }

    /// Uniform-price call auction over every resting order.
    ///
    /// Picks the price maximizing `min(demand, supply)`, breaking ties by distance
    /// to the last trade and then by the lower price. Orders fill in priority
    /// order; IOC and market remainders expire afterwards.
    pub fn clear_batch_auction(&mut self, now: SimTime) -> AuctionOutcome {
        let outcome = self.run_auction(now);
        let expiring: Vec<OrderId> = self
            .orders
            .values()
            .filter(|o| o.tif == TimeInForce::Ioc || !o.kind.has_price())
            .map(|o| o.id)
            .collect();
        for id in expiring {
            self.remove_resting(id, RemoveReason::Expired);
        }
        outcome
    }

    fn run_auction(&mut self, now: SimTime) -> AuctionOutcome {
        let none = AuctionOutcome {
            clearing_price: None,
            volume: Qty::ZERO,
            trades: Vec::new(),
        };
        let mut buys: Vec<(RankKey, OrderId)> = Vec::new();
        let mut sells: Vec<(RankKey, OrderId)> = Vec::new();
        for o in self.orders.values() {
            match o.side {
                Side::Buy => buys.push((rank_key(o), o.id)),
                Side::Sell => sells.push((rank_key(o), o.id)),
            }
        }
        if buys.is_empty() || sells.is_empty() {
            return none;
        }
        buys.sort();
        sells.sort();

        let Some((price, volume)) = self.auction_price() else {
            return none;
        };
        if volume.is_zero() {
            return none;
        }

        let take = |book: &OrderBook, list: &[(RankKey, OrderId)], side: Side| -> Vec<(OrderId, Qty)> {
            let mut left = volume;
            let mut out = Vec::new();
            for (_, id) in list {
                if left.is_zero() {
                    break;
                }
                let o = &book.orders[id];
                if !o.is_marketable_against(price) {
                    break;
                }
                debug_assert_eq!(o.side, side);
                let q = o.open_qty.min(left);
                left -= q;
                out.push((*id, q));
            }
            out
        };
        let buy_fills = take(self, &buys, Side::Buy);
        let sell_fills = take(self, &sells, Side::Sell);

        let mut trades = Vec::new();
        let (mut bi, mut si) = (0, 0);
        let (mut b_left, mut s_left) = (buy_fills[0].1, sell_fills[0].1);
        while bi < buy_fills.len() && si < sell_fills.len() {
            let q = b_left.min(s_left);
            let (buy_id, sell_id) = (buy_fills[bi].0, sell_fills[si].0);
            let buyer = &self.orders[&buy_id];
            let seller = &self.orders[&sell_id];
            trades.push(Trade {
                instrument: self.instrument,
                taker_order_id: buy_id,
                maker_order_id: sell_id,
                taker_participant: buyer.participant,
                maker_participant: seller.participant,
                taker_side: Side::Buy,
                price,
                qty: q,
                ts: now,
                aggressor_side: None,
                taker_anonymous: buyer.anonymous,
                maker_anonymous: seller.anonymous,
            });
            self.orders.get_mut(&buy_id).expect("auction order").apply_fill(q);
            self.orders.get_mut(&sell_id).expect("auction order").apply_fill(q);
            self.journal.push(BookEvent::Executed {
                maker_order_id: sell_id,
                taker_order_id: buy_id,
                price,
                qty: q,
                maker_open_qty: self.orders[&sell_id].open_qty,
                taker_open_qty: self.orders[&buy_id].open_qty,
            });
            b_left -= q;
            s_left -= q;
            if b_left.is_zero() {
                bi += 1;
                if bi < buy_fills.len() {
                    b_left = buy_fills[bi].1;
                }
            }
            if s_left.is_zero() {
                si += 1;
                if si < sell_fills.len() {
                    s_left = sell_fills[si].1;
                }
            }
        }

        for (id, _) in buy_fills.into_iter().chain(sell_fills) {
            self.after_maker_fill(id, now);
        }
        self.last_trade_price = Some(price);
        AuctionOutcome {
            clearing_price: Some(price),
            volume,
            trades,
        }
    }

    /// Executable volume at `price` if the auction cleared there.
    pub fn auction_volume_at(&self, price: Price) -> Qty {
        let (mut demand, mut supply) = (Qty::ZERO, Qty::ZERO);
        for o in self.orders.values() {
            if o.is_marketable_against(price) {
                match o.side {
                    Side::Buy => demand += o.open_qty,
                    Side::Sell => supply += o.open_qty,
                }
            }
        }
        demand.min(supply)
    }

    /// Clearing price and volume the next auction would use, if any cross exists.
    pub fn auction_price(&self) -> Option<(Price, Qty)> {
        // Volume is a step function whose steps sit at the limit prices (and one
        // tick past them), so the optimum and its tie-breaks lie in this set.
        let mut candidates = BTreeSet::new();
        for o in self.orders.values() {
            if let Some(p) = o.limit_price {
                candidates.insert(p);
                match o.side {
                    Side::Buy => {
                        candidates.insert(p.up(1));
                    }
                    Side::Sell => {
                        candidates.insert(p.down(1));
                    }
                }
            }
        }
        if let Some(last) = self.last_trade_price {
            candidates.insert(last);
        }
        // Candidate prices are confined to the span of limit prices on the book.
        let limits = || self.orders.values().filter_map(|o| o.limit_price);
        let (Some(lo), Some(hi)) = (limits().min(), limits().max()) else {
            return None;
        };
        candidates.retain(|p| (lo..=hi).contains(p));
        let mut best: Option<(Price, Qty)> = None;
        for p in candidates {
            let v = self.auction_volume_at(p);
            if v.is_zero() {
                continue;
            }
            best = match best {
                None => Some((p, v)),
                Some((bp, bv)) => {
                    if v > bv || (v == bv && self.closer_to_last(p, bp)) {
                        Some((p, v))
                    } else {
                        Some((bp, bv))
                    }
                }
            };
        }
        best
    }

    /// Tie-break: nearer to the last trade wins, then the lower price.
    fn closer_to_last(&self, p: Price, incumbent: Price) -> bool {
        if let Some(last) = self.last_trade_price {
            let d = p.0.abs_diff(last.0);
            let di = incumbent.0.abs_diff(last.0);
            if d != di {
                return d < di;
            }
        }
        p < incumbent
    }

    pub fn best_quotes(&self) -> L1View {
        L1View {
            bid: self.top_quote(self.bids.iter().rev()),
            ask: self.top_quote(self.asks.iter()),
        }
    }

    fn top_quote<'a>(&'a self, mut levels: impl Iterator<Item = (&'a Price, &'a PriceLevel)>) -> Option<Quote> {
        levels.find_map(|(p, l)| {
            let qty: Qty = l.order_ids().map(|id| self.orders[&id].visible_qty()).sum();
            (!qty.is_zero()).then_some(Quote { price: *p, qty })
        })
    }

    /// Depth view of up to `depth` displayed levels per side.
    pub fn book_snapshot(&self, depth: usize) -> L2View {
        let collect = |levels: &mut dyn Iterator<Item = (&Price, &PriceLevel)>| {
            let mut out = Vec::new();
            for (price, level) in levels {
                if out.len() >= depth {
                    break;
                }
                let orders: Vec<OrderView> = level
                    .order_ids()
                    .map(|id| &self.orders[&id])
                    .filter(|o| !o.visible_qty().is_zero())
                    .map(|o| OrderView {
                        order_id: o.id,
                        participant: if o.anonymous {
                            ParticipantId::GENERIC
                        } else {
                            o.participant
                        },
                        qty: o.visible_qty(),
                        listed_ts: o.entry_ts,
                        claimed_submit_ts: o.claimed_submit_ts,
                    })
                    .collect();
                if orders.is_empty() {
                    continue;
                }
                out.push(DepthLevel {
                    price: *price,
                    qty: orders.iter().map(|o| o.qty).sum(),
                    orders,
                });
            }
            out
        };
        L2View {
            bids: collect(&mut self.bids.iter().rev()),
            asks: collect(&mut self.asks.iter()),
        }
    }

    /// Best bid/ask among all resting orders, hidden ones included.
    pub fn best_resting_prices(&self) -> (Option<Price>, Option<Price>) {
        (self.best_price(Side::Buy), self.best_price(Side::Sell))
    }

    /// Structural self-check used by tests and debug builds.
    pub fn check_invariants(&self) -> Result<(), &'static str> {
        let mut seen = BTreeSet::new();
        for (side, levels) in [(Side::Buy, &self.bids), (Side::Sell, &self.asks)] {
            for (price, level) in levels {
                if level.is_empty() {
                    return Err("empty level retained");
                }
                let mut prev: Option<LevelKey> = None;
                for (key, id) in &level.queue {
                    let o = self.orders.get(id).ok_or("queued id without order")?;
                    if o.side != side || o.limit_price != Some(*price) {
                        return Err("order in wrong level");
                    }
                    if *key != level_key(o) {
                        return Err("stale level key");
                    }
                    if prev.is_some_and(|p| p >= *key) {
                        return Err("level not sorted");
                    }
                    prev = Some(*key);
                    if !seen.insert(*id) {
                        return Err("order queued twice");
                    }
                    if o.open_qty > o.total_qty || o.displayed_qty > o.open_qty {
                        return Err("quantity invariant");
                    }
                    if o.open_qty.is_zero() {
                        return Err("filled order resting");
                    }
                    if matches!(o.kind, OrderKind::Hidden) && !o.displayed_qty.is_zero() {
                        return Err("hidden order displays quantity");
                    }
                }
            }
        }
        for id in &self.unpriced {
            if !seen.insert(*id) {
                return Err("order queued twice");
            }
        }
        if seen.len() != self.orders.len() {
            return Err("order missing from levels");
        }
        Ok(())
    }
}

/// Moves reserve quantity into the displayed slice once it falls below a round lot.
///
/// Fixed refills up to `display_size`; random refills to a uniform draw in
/// `[round_lot, display_size]`. Either way the slice gets `(now, seq)` as its
/// new priority. Returns false (and changes nothing) when the preconditions fail.
pub fn replenish_reserve(order: &mut Order, round_lot: Qty, rng: &mut Substream, now: SimTime, seq: u64) -> bool {
    let OrderKind::Reserve {
        display_size,
        replenish,
    } = order.kind
    else {
        return false;
    };
    if order.displayed_qty >= round_lot || order.open_qty <= order.displayed_qty {
        return false;
    }
    let target = match replenish {
        Replenish::Fixed => display_size,
        Replenish::Random => Qty(rng.uniform(round_lot.0.min(display_size.0), display_size.0)),
    };
    let target = target.min(order.open_qty);
    if target <= order.displayed_qty {
        return false;
    }
    order.displayed_qty = target;
    order.entry_ts = now;
    order.entry_seq = seq;
    true
}
