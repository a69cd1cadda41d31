//! Honest participants: market makers, investors, periodic order flow and brokers.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{yes, Ctx, Input, Names, Strategy};
use crate::order::{OrderKind, Replenish, TimeInForce};
use crate::rng::Substream;
use crate::scenario::{strategy_err, ConfigError};
use crate::types::{OrderId, Price, Qty, Side, SimTime, VenueId};
use crate::venue::Report;

fn one() -> u64 {
    1
}

fn positive(path: &str, v: u64) -> Result<(), ConfigError> {
    if v == 0 {
        return Err(strategy_err(path, "must be positive"));
    }
    Ok(())
}

/// Quotes `value ± half_spread` on every venue and requotes when the value moves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MakerConfig {
    pub venues: Vec<String>,
    #[serde(default = "one")]
    pub half_spread: u64,
    pub size: u64,
    /// Fixed value to quote around when the scenario has no signal.
    #[serde(default)]
    pub value: Option<u64>,
    /// Replace a quote as soon as it is completely filled.
    #[serde(default = "yes")]
    pub requote_on_fill: bool,
}

impl MakerConfig {
    pub(crate) fn validate(&self, names: &Names<'_>) -> Result<(), ConfigError> {
        names.check_all("venues", &self.venues)?;
        positive("size", self.size)?;
        positive("half_spread", self.half_spread)?;
        if self.value.is_none() && names.0.signal.is_none() {
            return Err(strategy_err("value", "required when the scenario has no signal"));
        }
        Ok(())
    }

    pub(crate) fn build(&self, names: &Names<'_>) -> Maker {
        Maker {
            venues: names.venues(&self.venues),
            half_spread: self.half_spread,
            size: Qty(self.size),
            value: self.value,
            requote: self.requote_on_fill,
            quotes: BTreeMap::new(),
        }
    }
}

pub(crate) struct Maker {
    venues: Vec<VenueId>,
    half_spread: u64,
    size: Qty,
    value: Option<u64>,
    requote: bool,
    quotes: BTreeMap<(VenueId, Side), OrderId>,
}

impl Maker {
    fn post(&mut self, ctx: &mut Ctx<'_>, venue: VenueId, side: Side) {
        let Some(v) = self.value else { return };
        let price = Price(v).away_from_touch(side, self.half_spread);
        let order = ctx.order(venue, side, OrderKind::Limit, Some(price), self.size);
        if let Some(id) = ctx.submit(order, false) {
            self.quotes.insert((venue, side), id);
        }
    }

    fn post_all(&mut self, ctx: &mut Ctx<'_>) {
        for venue in self.venues.clone() {
            for side in [Side::Buy, Side::Sell] {
                self.post(ctx, venue, side);
            }
        }
    }
}

impl Strategy for Maker {
    fn on(&mut self, ctx: &mut Ctx<'_>, input: Input<'_>) {
        match input {
            Input::Start => self.post_all(ctx),
            Input::Signal(v) => {
                if self.value == Some(v) {
                    return;
                }
                for ((venue, _), id) in core::mem::take(&mut self.quotes) {
                    ctx.cancel(venue, id);
                }
                self.value = Some(v);
                self.post_all(ctx);
            }
            Input::Report(Report::Fill(f)) if f.leaves_qty.is_zero() => {
                let key = (f.venue, f.side);
                if self.quotes.get(&key) == Some(&f.order_id) {
                    self.quotes.remove(&key);
                    if self.requote {
                        self.post(ctx, f.venue, f.side);
                    }
                }
            }
            Input::Report(Report::Rejected { order_id, .. }) => self.quotes.retain(|_, id| id != order_id),
            _ => {}
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InvestorStyle {
    /// One reserve order showing `display` shares at a time.
    Iceberg {
        display: u64,
        #[serde(default = "fixed")]
        replenish: Replenish,
    },
    /// Plain limit orders of `slice` shares, one every `interval_us`.
    Slices { slice: u64, interval_us: u64 },
    /// One fully hidden order.
    Hidden,
}

fn fixed() -> Replenish {
    Replenish::Fixed
}

/// A large resting interest, worked in one of several styles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvestorConfig {
    pub venue: String,
    pub side: Side,
    pub price: u64,
    pub qty: u64,
    #[serde(default)]
    pub start_us: u64,
    pub style: InvestorStyle,
}

impl InvestorConfig {
    pub(crate) fn validate(&self, names: &Names<'_>) -> Result<(), ConfigError> {
        names.check("venue", &self.venue)?;
        positive("qty", self.qty)?;
        match self.style {
            InvestorStyle::Iceberg { display, .. } => positive("style.display", display),
            InvestorStyle::Slices { slice, interval_us } => {
                positive("style.slice", slice)?;
                positive("style.interval_us", interval_us)
            }
            InvestorStyle::Hidden => Ok(()),
        }
    }

    pub(crate) fn build(&self, names: &Names<'_>) -> Investor {
        Investor {
            venue: names.venue(&self.venue),
            side: self.side,
            price: Price(self.price),
            remaining: self.qty,
            start: SimTime(self.start_us),
            style: self.style,
        }
    }
}

pub(crate) struct Investor {
    venue: VenueId,
    side: Side,
    price: Price,
    remaining: u64,
    start: SimTime,
    style: InvestorStyle,
}

impl Strategy for Investor {
    fn on(&mut self, ctx: &mut Ctx<'_>, input: Input<'_>) {
        match input {
            Input::Start => ctx.timer(self.start, 0),
            Input::Timer(_) if self.remaining > 0 => {
                let (kind, qty) = match self.style {
                    InvestorStyle::Iceberg { display, replenish } => (
                        OrderKind::Reserve {
                            display_size: Qty(display),
                            replenish,
                        },
                        self.remaining,
                    ),
                    InvestorStyle::Hidden => (OrderKind::Hidden, self.remaining),
                    InvestorStyle::Slices { slice, .. } => (OrderKind::Limit, slice.min(self.remaining)),
                };
                let order = ctx.order(self.venue, self.side, kind, Some(self.price), Qty(qty));
                ctx.submit(order, false);
                self.remaining -= qty;
                if let InvestorStyle::Slices { interval_us, .. } = self.style {
                    if self.remaining > 0 {
                        ctx.timer(ctx.now + interval_us, 0);
                    }
                }
            }
            _ => {}
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidePolicy {
    #[default]
    Alternate,
    Random,
    Buy,
    Sell,
}

/// A stream of same-sized orders on a fixed clock.
///
/// Passive orders rest `offset_ticks` behind the reference price; aggressive
/// ones are IOC orders `offset_ticks` through it. The reference is `price`, or
/// the latest signal value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicConfig {
    /// Used in rotation.
    pub venues: Vec<String>,
    #[serde(default)]
    pub side: SidePolicy,
    #[serde(default)]
    pub price: Option<u64>,
    #[serde(default)]
    pub offset_ticks: u64,
    #[serde(default)]
    pub aggressive: bool,
    pub qty: u64,
    pub interval_us: u64,
    #[serde(default)]
    pub start_us: u64,
    /// Total orders; zero is unlimited.
    #[serde(default)]
    pub count: u64,
    /// Orders are anonymous, except for the first `labeled` ones.
    #[serde(default)]
    pub anonymous: bool,
    #[serde(default)]
    pub labeled: u64,
    #[serde(default)]
    pub cancel_after_us: Option<u64>,
}

impl PeriodicConfig {
    pub(crate) fn validate(&self, names: &Names<'_>) -> Result<(), ConfigError> {
        names.check_all("venues", &self.venues)?;
        positive("qty", self.qty)?;
        positive("interval_us", self.interval_us)?;
        if self.price.is_none() && names.0.signal.is_none() {
            return Err(strategy_err("price", "required when the scenario has no signal"));
        }
        Ok(())
    }

    pub(crate) fn build(&self, names: &Names<'_>, rng: Substream) -> Periodic {
        Periodic {
            venues: names.venues(&self.venues),
            cfg: self.clone(),
            value: self.price,
            sent: 0,
            rng,
            live: VecDeque::new(),
        }
    }
}

const CANCEL: u64 = 1;
const SEND: u64 = 0;

pub(crate) struct Periodic {
    venues: Vec<VenueId>,
    cfg: PeriodicConfig,
    value: Option<u64>,
    sent: u64,
    rng: Substream,
    /// Resting orders awaiting their cancel, oldest first.
    live: VecDeque<(VenueId, OrderId)>,
}

impl Periodic {
    fn side(&mut self) -> Side {
        match self.cfg.side {
            SidePolicy::Buy => Side::Buy,
            SidePolicy::Sell => Side::Sell,
            SidePolicy::Alternate if self.sent.is_multiple_of(2) => Side::Buy,
            SidePolicy::Alternate => Side::Sell,
            SidePolicy::Random if self.rng.chance(1, 2) => Side::Buy,
            SidePolicy::Random => Side::Sell,
        }
    }

    fn send(&mut self, ctx: &mut Ctx<'_>) {
        let Some(reference) = self.value else { return };
        let side = self.side();
        let venue = self.venues[(self.sent % self.venues.len() as u64) as usize];
        let (price, tif) = if self.cfg.aggressive {
            (
                Price(reference).away_from_touch(side.opposite(), self.cfg.offset_ticks),
                TimeInForce::Ioc,
            )
        } else {
            (
                Price(reference).away_from_touch(side, self.cfg.offset_ticks),
                TimeInForce::Day,
            )
        };
        let anonymous = self.cfg.anonymous && self.sent >= self.cfg.labeled;
        let order = ctx
            .order(venue, side, OrderKind::Limit, Some(price), Qty(self.cfg.qty))
            .with_tif(tif)
            .with_anonymous(anonymous);
        self.sent += 1;
        if let Some(id) = ctx.submit(order, false) {
            if let (Some(after), TimeInForce::Day) = (self.cfg.cancel_after_us, tif) {
                self.live.push_back((venue, id));
                ctx.timer(ctx.now + after, CANCEL);
            }
        }
    }
}

impl Strategy for Periodic {
    fn on(&mut self, ctx: &mut Ctx<'_>, input: Input<'_>) {
        match input {
            Input::Start => ctx.timer(SimTime(self.cfg.start_us), SEND),
            Input::Signal(v) => self.value = Some(v),
            Input::Timer(SEND) => {
                if self.cfg.count == 0 || self.sent < self.cfg.count {
                    self.send(ctx);
                    ctx.timer(ctx.now + self.cfg.interval_us, SEND);
                }
            }
            Input::Timer(_) => {
                if let Some((venue, id)) = self.live.pop_front() {
                    ctx.cancel(venue, id);
                }
            }
            _ => {}
        }
    }
}

/// Works one parent order: sends it with routing enabled to the venue with the
/// best displayed price, larger size breaking ties.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrokerConfig {
    pub venues: Vec<String>,
    pub side: Side,
    pub qty: u64,
    pub limit: u64,
    #[serde(default)]
    pub start_us: u64,
    #[serde(default = "yes")]
    pub route: bool,
}

impl BrokerConfig {
    pub(crate) fn validate(&self, names: &Names<'_>) -> Result<(), ConfigError> {
        names.check_all("venues", &self.venues)?;
        positive("qty", self.qty)
    }

    pub(crate) fn build(&self, names: &Names<'_>) -> Broker {
        Broker {
            venues: names.venues(&self.venues),
            cfg: self.clone(),
        }
    }
}

pub(crate) struct Broker {
    venues: Vec<VenueId>,
    cfg: BrokerConfig,
}

impl Broker {
    fn pick(&self, ctx: &Ctx<'_>) -> VenueId {
        let side = self.cfg.side;
        let mut best: Option<(Price, Qty, VenueId)> = None;
        for &v in &self.venues {
            let Some(l1) = ctx.view.l1(v, ctx.instrument) else {
                continue;
            };
            let Some(q) = (match side {
                Side::Buy => l1.ask,
                Side::Sell => l1.bid,
            }) else {
                continue;
            };
            let better = match best {
                None => true,
                Some((p, s, _)) => side.better(p, q.price) || (p == q.price && q.qty > s),
            };
            if better {
                best = Some((q.price, q.qty, v));
            }
        }
        best.map(|b| b.2).unwrap_or(self.venues[0])
    }
}

impl Strategy for Broker {
    fn on(&mut self, ctx: &mut Ctx<'_>, input: Input<'_>) {
        match input {
            Input::Start => ctx.timer(SimTime(self.cfg.start_us), 0),
            Input::Timer(_) => {
                let venue = self.pick(ctx);
                let order = ctx.order(
                    venue,
                    self.cfg.side,
                    OrderKind::Limit,
                    Some(Price(self.cfg.limit)),
                    Qty(self.cfg.qty),
                );
                ctx.submit(order, self.cfg.route);
            }
            _ => {}
        }
    }
}
