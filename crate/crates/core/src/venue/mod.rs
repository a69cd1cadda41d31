//! One exchange: gateway speed bumps, lock/cross handling, order protection,
//! execution reports and market-data publication.
//!
//! A [`Venue`] is a pure state machine. Every handler returns the messages it
//! wants sent; the simulation delivers them over the network.

mod messages;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use messages::{ExecutionReport, Liquidity, MarketData, OrderMessage, RejectReason, Report};

use crate::engine::{BookEvent, EngineError, L1View, L2View, MatchingAlgo, OrderBook, RemoveReason, Reposition, Trade};
use crate::order::{DisplayClass, DisplayState, Order, OrderKind, TimeInForce};
use crate::simnet::NbboQuote;
use crate::types::{InstrumentId, OrderId, ParticipantId, Price, Qty, Side, SimTime, VenueId};

/// What a venue does with a marketable remainder when an away venue quotes better.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protection {
    #[default]
    Route,
    Reject,
}

fn default_round_lot() -> u64 {
    100
}

fn default_tick() -> u64 {
    1
}

fn default_depth() -> usize {
    10
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VenueConfig {
    pub name: String,
    /// Currency units per tick. Informational; all arithmetic is in ticks.
    #[serde(default = "default_tick")]
    pub tick_size: u64,
    #[serde(default = "default_round_lot")]
    pub round_lot: u64,
    #[serde(default)]
    pub matching: MatchingAlgo,
    #[serde(default)]
    pub speed_bump_in_us: u64,
    #[serde(default)]
    pub speed_bump_out_us: u64,
    /// Cancels skip the inbound bump.
    #[serde(default)]
    pub bump_exempt_cancels: bool,
    /// Orders routed in by another venue skip the inbound bump.
    #[serde(default)]
    pub bump_exempt_routed: bool,
    /// Call-auction period; zero means continuous matching.
    #[serde(default)]
    pub batch_interval_us: u64,
    /// Feed periods; zero publishes on every change.
    #[serde(default)]
    pub l1_interval_us: u64,
    #[serde(default)]
    pub l2_interval_us: u64,
    #[serde(default = "default_depth")]
    pub l2_depth: usize,
    /// When false, reports are held until the next feed tick.
    #[serde(default = "yes")]
    pub exec_report_immediate: bool,
    /// No pre-trade data at all: no L1, no L2, nothing to the aggregator.
    #[serde(default)]
    pub dark: bool,
    #[serde(default)]
    pub protection: Protection,
}

impl VenueConfig {
    pub fn new(name: &str) -> VenueConfig {
        VenueConfig {
            name: name.into(),
            tick_size: default_tick(),
            round_lot: default_round_lot(),
            matching: MatchingAlgo::Fifo,
            speed_bump_in_us: 0,
            speed_bump_out_us: 0,
            bump_exempt_cancels: false,
            bump_exempt_routed: false,
            batch_interval_us: 0,
            l1_interval_us: 0,
            l2_interval_us: 0,
            l2_depth: default_depth(),
            exec_report_immediate: true,
            dark: false,
            protection: Protection::Route,
        }
    }

    pub fn is_batch(&self) -> bool {
        self.batch_interval_us > 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VenueOutput {
    Report {
        to: ParticipantId,
        report: Report,
    },
    /// Remainder forwarded to the venue quoting the protected price.
    Route {
        to: VenueId,
        msg: OrderMessage,
        protected_price: Price,
    },
    ToSip {
        instrument: InstrumentId,
        l1: L1View,
    },
    Feed(MarketData),
    Book {
        instrument: InstrumentId,
        event: BookEvent,
    },
    Trade(Trade),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VenueTimer {
    L1Tick,
    L2Tick,
    Auction,
}

pub struct Venue {
    pub id: VenueId,
    pub config: VenueConfig,
    books: BTreeMap<InstrumentId, OrderBook>,
    nbbo: BTreeMap<InstrumentId, NbboQuote>,
    sent_to_sip: BTreeMap<InstrumentId, L1View>,
    last_l1: BTreeMap<InstrumentId, L1View>,
    last_l2: BTreeMap<InstrumentId, L2View>,
    held: Vec<(ParticipantId, Report)>,
    owners: BTreeMap<OrderId, ParticipantId>,
    routed_in: BTreeSet<OrderId>,
}

fn reject_reason(e: &EngineError) -> RejectReason {
    match e {
        EngineError::DuplicateOrderId(_) => RejectReason::DuplicateOrderId,
        EngineError::UnknownInstrument(_) => RejectReason::UnknownInstrument,
        EngineError::UnknownOrder(_) => RejectReason::UnknownOrder,
        EngineError::InvalidModification(_) | EngineError::InvalidOrder(_) => RejectReason::Malformed,
    }
}

/// True if a displayed order on `side` at `price` would lock or cross `away`.
fn locks(side: Side, price: Price, away: Option<Price>) -> bool {
    away.is_some_and(|a| side.accepts(price, a))
}

/// One tick away from the away quote, on the passive side.
fn slide_price(side: Side, away: Price) -> Price {
    match side {
        Side::Buy => away.down(1),
        Side::Sell => away.up(1),
    }
}

impl Venue {
    pub fn new(id: VenueId, config: VenueConfig, instruments: &[InstrumentId], seed: u64) -> Venue {
        let mut venue = Venue {
            id,
            books: BTreeMap::new(),
            nbbo: BTreeMap::new(),
            sent_to_sip: BTreeMap::new(),
            last_l1: BTreeMap::new(),
            last_l2: BTreeMap::new(),
            held: Vec::new(),
            owners: BTreeMap::new(),
            routed_in: BTreeSet::new(),
            config,
        };
        for &i in instruments {
            let book = OrderBook::new(i, venue.config.matching, Qty(venue.config.round_lot)).with_seed(seed);
            venue.books.insert(i, book);
            venue.nbbo.insert(i, NbboQuote::empty(i));
            venue.sent_to_sip.insert(i, L1View::default());
            venue.last_l1.insert(i, L1View::default());
            venue.last_l2.insert(i, L2View::default());
        }
        venue
    }

    pub fn book(&self, instrument: InstrumentId) -> Option<&OrderBook> {
        self.books.get(&instrument)
    }

    pub fn books(&self) -> impl Iterator<Item = &OrderBook> {
        self.books.values()
    }

    /// Recurring timers this venue needs, with their periods.
    pub fn timers(&self) -> Vec<(VenueTimer, u64)> {
        let c = &self.config;
        let mut out = Vec::new();
        if c.batch_interval_us > 0 {
            out.push((VenueTimer::Auction, c.batch_interval_us));
        }
        if !c.dark && c.l1_interval_us > 0 {
            out.push((VenueTimer::L1Tick, c.l1_interval_us));
        }
        if !c.dark && c.l2_interval_us > 0 {
            out.push((VenueTimer::L2Tick, c.l2_interval_us));
        }
        out
    }

    /// Time the engine processes a message that reached the gateway at `arrival`.
    pub fn effective_time(&self, msg: &OrderMessage, routed: bool, arrival: SimTime) -> SimTime {
        let c = &self.config;
        let exempt =
            (routed && c.bump_exempt_routed) || (matches!(msg, OrderMessage::Cancel { .. }) && c.bump_exempt_cancels);
        if exempt {
            arrival
        } else {
            arrival + c.speed_bump_in_us
        }
    }

    /// Best away price on `side` as last reported by the aggregator.
    pub fn away_best(&self, instrument: InstrumentId, side: Side) -> Option<(Price, VenueId)> {
        self.nbbo.get(&instrument)?.best_excluding(side, self.id)
    }

    /// Processes an order message at its engine-effective time.
    pub fn handle(&mut self, msg: OrderMessage, routed: bool, now: SimTime) -> Vec<VenueOutput> {
        let mut out = Vec::new();
        let instrument = msg.instrument();
        match msg {
            OrderMessage::New { order, route } => self.on_new(order, route, routed, now, &mut out),
            OrderMessage::Cancel {
                order_id, participant, ..
            } => self.on_cancel(instrument, order_id, participant, now, &mut out),
            OrderMessage::Modify {
                order_id,
                participant,
                new_price,
                new_qty,
                ..
            } => self.on_modify(instrument, order_id, participant, new_price, new_qty, now, &mut out),
        }
        if self.books.contains_key(&instrument) {
            self.publish_changes(instrument, now, &mut out);
        }
        out
    }

    fn report(&mut self, to: ParticipantId, report: Report, out: &mut Vec<VenueOutput>) {
        let c = &self.config;
        let no_ticks = c.dark || (c.l1_interval_us == 0 && c.l2_interval_us == 0);
        if c.exec_report_immediate || no_ticks {
            out.push(VenueOutput::Report { to, report });
        } else {
            self.held.push((to, report));
        }
    }

    fn reject(
        &mut self,
        to: ParticipantId,
        order_id: OrderId,
        reason: RejectReason,
        now: SimTime,
        out: &mut Vec<VenueOutput>,
    ) {
        let report = Report::Rejected {
            order_id,
            venue: self.id,
            reason,
            ts: now,
        };
        self.report(to, report, out);
    }

    fn on_new(&mut self, mut order: Order, route: bool, routed: bool, now: SimTime, out: &mut Vec<VenueOutput>) {
        let instrument = order.instrument;
        let owner = order.participant;
        let Some(book) = self.books.get(&instrument) else {
            self.reject(owner, order.id, RejectReason::UnknownInstrument, now, out);
            return;
        };
        if let Err(e) = book.validate_new(&order) {
            self.reject(owner, order.id, reject_reason(&e), now, out);
            return;
        }
        order.venue = self.id;
        self.owners.insert(order.id, owner);
        if routed {
            self.routed_in.insert(order.id);
        }

        if self.config.is_batch() {
            let id = order.id;
            let book = self.books.get_mut(&instrument).expect("checked");
            book.accumulate(order, now).expect("validated");
            self.flush(instrument, Vec::new(), now, out);
            self.accepted(instrument, id, now, out);
            return;
        }

        let away = self.away_best(instrument, order.side.opposite());
        let protect = route && !matches!(order.kind, OrderKind::DayIso | OrderKind::HideAndLight);
        let cap = if protect { away.map(|(p, _)| p) } else { None };
        let book = self.books.get_mut(&instrument).expect("checked");
        let trades = book.match_incoming(&mut order, cap, now);
        self.flush(instrument, trades, now, out);

        if order.is_filled() {
            return;
        }
        if protect {
            if let Some((price, to)) = away.filter(|(p, _)| order.is_marketable_against(*p)) {
                match self.config.protection {
                    Protection::Route => {
                        let mut child = order.clone();
                        child.total_qty = child.open_qty;
                        child.venue = to;
                        let report = Report::Routed {
                            order_id: order.id,
                            venue: self.id,
                            to,
                            qty: order.open_qty,
                            ts: now,
                        };
                        self.report(owner, report, out);
                        out.push(VenueOutput::Route {
                            to,
                            msg: OrderMessage::New {
                                order: child,
                                route: false,
                            },
                            protected_price: price,
                        });
                    }
                    Protection::Reject => self.reject(owner, order.id, RejectReason::TradeThrough, now, out),
                }
                return;
            }
        }

        let rests = order.tif == TimeInForce::Day && order.kind.has_price();
        if rests && order.display_class() == DisplayClass::Lit {
            let limit = order.limit_price.expect("priced");
            if locks(order.side, limit, away.map(|(p, _)| p)) {
                let away = away.expect("locking implies a quote").0;
                match order.kind {
                    OrderKind::Limit => {
                        order.display_state = DisplayState::Slid { original_price: limit };
                        order.limit_price = Some(slide_price(order.side, away));
                    }
                    OrderKind::HideAndLight => order.display_state = DisplayState::Hidden,
                    OrderKind::Reserve { .. } | OrderKind::Discretionary { .. } => {
                        self.reject(owner, order.id, RejectReason::WouldLockOrCross, now, out);
                        return;
                    }
                    _ => {}
                }
            }
        }

        let id = order.id;
        let book = self.books.get_mut(&instrument).expect("checked");
        let outcome = book.finish_incoming(order, Vec::new(), now);
        self.flush(instrument, Vec::new(), now, out);
        if !outcome.expired_qty.is_zero() {
            let report = Report::Expired {
                order_id: id,
                venue: self.id,
                qty: outcome.expired_qty,
                ts: now,
            };
            self.report(owner, report, out);
        }
        if outcome.resting.is_some() {
            self.accepted(instrument, id, now, out);
        }
    }

    fn accepted(&mut self, instrument: InstrumentId, id: OrderId, now: SimTime, out: &mut Vec<VenueOutput>) {
        let Some(o) = self.books[&instrument].get(id) else {
            return;
        };
        let report = Report::Accepted {
            order_id: id,
            venue: self.id,
            instrument,
            price: o.limit_price,
            open_qty: o.open_qty,
            display_state: o.display_state,
            ts: now,
        };
        let owner = o.participant;
        self.report(owner, report, out);
    }

    fn on_cancel(
        &mut self,
        instrument: InstrumentId,
        id: OrderId,
        participant: ParticipantId,
        now: SimTime,
        out: &mut Vec<VenueOutput>,
    ) {
        let result = match self.books.get_mut(&instrument) {
            None => Err(RejectReason::UnknownInstrument),
            Some(book) => match book.get(id) {
                Some(o) if o.participant != participant => Err(RejectReason::UnknownOrder),
                _ => book.cancel_order(id, now).map_err(|e| reject_reason(&e)),
            },
        };
        match result {
            Ok(order) => {
                self.flush(instrument, Vec::new(), now, out);
                let report = Report::Canceled {
                    order_id: id,
                    venue: self.id,
                    open_qty: order.open_qty,
                    ts: now,
                };
                self.report(participant, report, out);
            }
            Err(reason) => self.reject(participant, id, reason, now, out),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn on_modify(
        &mut self,
        instrument: InstrumentId,
        id: OrderId,
        participant: ParticipantId,
        new_price: Option<Price>,
        new_qty: Option<Qty>,
        now: SimTime,
        out: &mut Vec<VenueOutput>,
    ) {
        let result = match self.books.get_mut(&instrument) {
            None => Err(RejectReason::UnknownInstrument),
            Some(book) => match book.get(id) {
                Some(o) if o.participant != participant => Err(RejectReason::UnknownOrder),
                _ => book
                    .modify_order(id, new_price, new_qty, now)
                    .map_err(|e| reject_reason(&e)),
            },
        };
        let outcome = match result {
            Ok(outcome) => outcome,
            Err(reason) => {
                self.reject(participant, id, reason, now, out);
                return;
            }
        };
        self.flush(instrument, outcome.trades, now, out);
        let resting = self.books[&instrument].get(id).cloned();
        let report = Report::Modified {
            order_id: id,
            venue: self.id,
            price: resting.as_ref().and_then(|o| o.limit_price),
            open_qty: resting.as_ref().map(|o| o.open_qty).unwrap_or(Qty::ZERO),
            ts: now,
        };
        self.report(participant, report, out);
        // A repriced plain limit that now locks an away quote slides like a new one.
        if let Some(o) = resting.filter(|o| o.kind == OrderKind::Limit && !self.config.is_batch()) {
            let away = self.away_best(instrument, o.side.opposite()).map(|(p, _)| p);
            if let (Some(limit), Some(a)) = (o.limit_price, away) {
                if locks(o.side, limit, Some(a)) {
                    let book = self.books.get_mut(&instrument).expect("checked");
                    let trades = book
                        .reposition(
                            id,
                            Reposition::Slide {
                                to: slide_price(o.side, a),
                            },
                            now,
                        )
                        .unwrap_or_default();
                    self.flush(instrument, trades, now, out);
                }
            }
        }
    }

    /// Re-evaluates locked orders after a consolidated quote update.
    ///
    /// Hide-and-light orders relight in place, keeping their priority; slid orders
    /// return to their limit with fresh priority, in their current queue order.
    pub fn on_nbbo(&mut self, nbbo: NbboQuote, now: SimTime) -> Vec<VenueOutput> {
        let mut out = Vec::new();
        let instrument = nbbo.instrument;
        if !self.books.contains_key(&instrument) {
            return out;
        }
        self.nbbo.insert(instrument, nbbo);
        if self.config.is_batch() {
            return out;
        }

        let book = &self.books[&instrument];
        let mut hidden: Vec<(SimTime, u64, OrderId, Side, Price)> = Vec::new();
        let mut slid: Vec<(SimTime, u64, OrderId, Side, Price, Price)> = Vec::new();
        for o in book.orders() {
            match (o.kind, o.display_state, o.limit_price) {
                (OrderKind::HideAndLight, DisplayState::Hidden, Some(p)) => {
                    hidden.push((o.entry_ts, o.entry_seq, o.id, o.side, p))
                }
                (_, DisplayState::Slid { original_price }, Some(p)) => {
                    slid.push((o.entry_ts, o.entry_seq, o.id, o.side, original_price, p))
                }
                _ => {}
            }
        }
        hidden.sort();
        slid.sort();

        for (_, _, id, side, price) in hidden {
            let away = self.away_best(instrument, side.opposite()).map(|(p, _)| p);
            if !locks(side, price, away) {
                let book = self.books.get_mut(&instrument).expect("checked");
                let trades = book.reposition(id, Reposition::Relight, now).unwrap_or_default();
                self.flush(instrument, trades, now, &mut out);
            }
        }
        for (_, _, id, side, original, current) in slid {
            if !self.books[&instrument].contains(id) {
                continue;
            }
            let away = self.away_best(instrument, side.opposite()).map(|(p, _)| p);
            let change = if !locks(side, original, away) {
                Reposition::Unslide
            } else {
                let to = slide_price(side, away.expect("locked"));
                if to == current {
                    continue;
                }
                Reposition::Slide { to }
            };
            let book = self.books.get_mut(&instrument).expect("checked");
            let trades = book.reposition(id, change, now).unwrap_or_default();
            self.flush(instrument, trades, now, &mut out);
        }
        self.publish_changes(instrument, now, &mut out);
        out
    }

    pub fn on_timer(&mut self, timer: VenueTimer, now: SimTime) -> Vec<VenueOutput> {
        let mut out = Vec::new();
        let instruments: Vec<InstrumentId> = self.books.keys().copied().collect();
        match timer {
            VenueTimer::Auction => {
                for i in instruments {
                    let book = self.books.get_mut(&i).expect("listed");
                    let outcome = book.clear_batch_auction(now);
                    self.flush(i, outcome.trades, now, &mut out);
                    self.publish_changes(i, now, &mut out);
                }
            }
            VenueTimer::L1Tick | VenueTimer::L2Tick => {
                for i in instruments {
                    self.publish_tick(i, timer, now, &mut out);
                }
                for (to, report) in core::mem::take(&mut self.held) {
                    out.push(VenueOutput::Report { to, report });
                }
            }
        }
        out
    }

    /// Turns the book journal and trades of one operation into reports, prints and trace records.
    fn flush(&mut self, instrument: InstrumentId, trades: Vec<Trade>, now: SimTime, out: &mut Vec<VenueOutput>) {
        let events = self
            .books
            .get_mut(&instrument)
            .expect("known instrument")
            .drain_events();
        let mut trades = trades.into_iter();
        for event in events {
            out.push(VenueOutput::Book {
                instrument,
                event: event.clone(),
            });
            match event {
                BookEvent::Executed {
                    maker_open_qty,
                    taker_open_qty,
                    ..
                } => {
                    let t = trades.next().expect("one trade per execution");
                    self.trade_outputs(t, maker_open_qty, taker_open_qty, now, out);
                }
                BookEvent::Removed {
                    order_id,
                    reason: RemoveReason::Expired,
                    open_qty,
                } => {
                    if let Some(&owner) = self.owners.get(&order_id) {
                        let report = Report::Expired {
                            order_id,
                            venue: self.id,
                            qty: open_qty,
                            ts: now,
                        };
                        self.report(owner, report, out);
                    }
                }
                _ => {}
            }
        }
        debug_assert!(trades.next().is_none());
    }

    fn trade_outputs(&mut self, t: Trade, maker_open: Qty, taker_open: Qty, now: SimTime, out: &mut Vec<VenueOutput>) {
        let liquidity = |maker: bool| match (t.aggressor_side, maker) {
            (None, _) => Liquidity::Auction,
            (Some(_), true) => Liquidity::Maker,
            (Some(_), false) => Liquidity::Taker,
        };
        let sides = [
            (t.taker_order_id, t.taker_participant, t.taker_side, taker_open, false),
            (
                t.maker_order_id,
                t.maker_participant,
                t.taker_side.opposite(),
                maker_open,
                true,
            ),
        ];
        for (order_id, owner, side, leaves, maker) in sides {
            let report = Report::Fill(ExecutionReport {
                order_id,
                venue: self.id,
                instrument: t.instrument,
                side,
                qty: t.qty,
                price: t.price,
                leaves_qty: leaves,
                ts: now,
                liquidity: liquidity(maker),
                routed_to: self.routed_in.contains(&order_id).then_some(self.id),
            });
            self.report(owner, report, out);
        }
        let shown = |p: ParticipantId, anonymous: bool| if anonymous { ParticipantId::GENERIC } else { p };
        let (buyer, seller) = match t.taker_side {
            Side::Buy => (
                shown(t.taker_participant, t.taker_anonymous),
                shown(t.maker_participant, t.maker_anonymous),
            ),
            Side::Sell => (
                shown(t.maker_participant, t.maker_anonymous),
                shown(t.taker_participant, t.taker_anonymous),
            ),
        };
        out.push(VenueOutput::Feed(MarketData::Print {
            venue: self.id,
            instrument: t.instrument,
            venue_ts: now,
            price: t.price,
            qty: t.qty,
            buyer,
            seller,
            aggressor_side: t.aggressor_side,
        }));
        out.push(VenueOutput::Trade(t));
    }

    /// Sends the aggregator every top-of-book change and publishes per-change feeds.
    fn publish_changes(&mut self, instrument: InstrumentId, now: SimTime, out: &mut Vec<VenueOutput>) {
        if self.config.dark {
            return;
        }
        let l1 = self.books[&instrument].best_quotes();
        if self.sent_to_sip[&instrument] != l1 {
            self.sent_to_sip.insert(instrument, l1);
            out.push(VenueOutput::ToSip { instrument, l1 });
        }
        if self.config.l1_interval_us == 0 {
            self.publish_tick(instrument, VenueTimer::L1Tick, now, out);
        }
        if self.config.l2_interval_us == 0 {
            self.publish_tick(instrument, VenueTimer::L2Tick, now, out);
        }
    }

    fn publish_tick(&mut self, instrument: InstrumentId, level: VenueTimer, now: SimTime, out: &mut Vec<VenueOutput>) {
        if self.config.dark {
            return;
        }
        let book = &self.books[&instrument];
        match level {
            VenueTimer::L1Tick => {
                let view = book.best_quotes();
                if self.last_l1[&instrument] != view {
                    self.last_l1.insert(instrument, view);
                    out.push(VenueOutput::Feed(MarketData::L1 {
                        venue: self.id,
                        instrument,
                        venue_ts: now,
                        view,
                    }));
                }
            }
            VenueTimer::L2Tick => {
                let view = book.book_snapshot(self.config.l2_depth);
                if self.last_l2[&instrument] != view {
                    self.last_l2.insert(instrument, view.clone());
                    out.push(VenueOutput::Feed(MarketData::L2 {
                        venue: self.id,
                        instrument,
                        venue_ts: now,
                        view,
                    }));
                }
            }
            VenueTimer::Auction => {}
        }
    }
}
