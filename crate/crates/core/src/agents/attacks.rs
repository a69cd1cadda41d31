//! Predatory strategies: fingerprinting, pinging, quote stuffing, latency
//! sniping and trade-through scalping.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{yes, Ctx, Input, Names, Strategy};
use crate::order::{OrderKind, TimeInForce};
use crate::scenario::{strategy_err, ConfigError};
use crate::types::{OrderId, ParticipantId, Price, Qty, Side, SimTime, VenueId};
use crate::venue::{MarketData, Report};

fn hundred() -> u64 {
    100
}

fn one() -> u64 {
    1
}

fn sell() -> Side {
    Side::Sell
}

fn buy() -> Side {
    Side::Buy
}

/// Attributes anonymous orders to brokers by the gap between each order's
/// listing time and its claimed submit time.
///
/// Labeled orders train a per-broker mean gap. An anonymous order is
/// attributed when exactly one broker's mean lies within `epsilon_us` of its
/// gap; otherwise the fingerprinter abstains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerprinterConfig {
    pub venue: String,
    pub epsilon_us: u64,
}

impl FingerprinterConfig {
    pub(crate) fn build(&self, names: &Names<'_>) -> Fingerprinter {
        Fingerprinter {
            venue: names.venue(&self.venue),
            epsilon: self.epsilon_us as i128,
            seen: BTreeSet::new(),
            stats: BTreeMap::new(),
        }
    }
}

pub(crate) struct Fingerprinter {
    venue: VenueId,
    epsilon: i128,
    seen: BTreeSet<OrderId>,
    /// Sum of observed gaps and sample count per broker.
    stats: BTreeMap<ParticipantId, (i128, i128)>,
}

impl Fingerprinter {
    fn candidate(&self, gap: i128) -> Option<ParticipantId> {
        let mut found = None;
        for (&p, &(sum, n)) in &self.stats {
            if (gap * n - sum).abs() <= self.epsilon * n {
                if found.is_some() {
                    return None;
                }
                found = Some(p);
            }
        }
        found
    }
}

impl Strategy for Fingerprinter {
    fn on(&mut self, ctx: &mut Ctx<'_>, input: Input<'_>) {
        let Input::Market(MarketData::L2 { venue, view, .. }) = input else {
            return;
        };
        if *venue != self.venue {
            return;
        }
        for level in view.bids.iter().chain(view.asks.iter()) {
            for o in &level.orders {
                if o.participant == ctx.me || !self.seen.insert(o.order_id) {
                    continue;
                }
                let gap = o.listed_ts.0 as i128 - o.claimed_submit_ts.0 as i128;
                if o.participant == ParticipantId::GENERIC {
                    let guess = self.candidate(gap);
                    ctx.guess(o.order_id, guess);
                } else {
                    let s = self.stats.entry(o.participant).or_insert((0, 0));
                    s.0 += gap;
                    s.1 += 1;
                }
            }
        }
    }
}

/// Probes the best displayed price on the opposite side with small IOC
/// orders. When more fills than were displayed come back at that price, it
/// infers hidden size there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PingerConfig {
    pub venue: String,
    #[serde(default = "sell")]
    pub side: Side,
    #[serde(default = "hundred")]
    pub qty: u64,
    pub interval_us: u64,
    pub max_probes: u64,
    #[serde(default = "yes")]
    pub enabled: bool,
    /// Probe this many ticks through the best displayed price.
    #[serde(default)]
    pub band_ticks: u64,
}

impl PingerConfig {
    pub(crate) fn validate(&self, names: &Names<'_>) -> Result<(), ConfigError> {
        names.check("venue", &self.venue)?;
        if self.qty == 0 {
            return Err(strategy_err("qty", "must be positive"));
        }
        if self.interval_us == 0 {
            return Err(strategy_err("interval_us", "must be positive"));
        }
        Ok(())
    }

    pub(crate) fn build(&self, names: &Names<'_>) -> Pinger {
        Pinger {
            venue: names.venue(&self.venue),
            cfg: self.clone(),
            probes: 0,
            started: false,
            snapshot: None,
            filled: BTreeMap::new(),
            believed: BTreeSet::new(),
        }
    }
}

pub(crate) struct Pinger {
    venue: VenueId,
    cfg: PingerConfig,
    probes: u64,
    started: bool,
    /// Best displayed opposite price and size from the latest depth snapshot.
    snapshot: Option<(Price, Qty)>,
    /// Fills per price since the latest snapshot.
    filled: BTreeMap<Price, Qty>,
    believed: BTreeSet<Price>,
}

impl Pinger {
    fn target_side(&self) -> Side {
        self.cfg.side.opposite()
    }
}

impl Strategy for Pinger {
    fn on(&mut self, ctx: &mut Ctx<'_>, input: Input<'_>) {
        if !self.cfg.enabled {
            return;
        }
        match input {
            Input::Market(MarketData::L2 { venue, view, .. }) if *venue == self.venue => {
                let levels = match self.target_side() {
                    Side::Buy => &view.bids,
                    Side::Sell => &view.asks,
                };
                self.snapshot = levels.first().map(|l| (l.price, l.qty));
                self.filled.clear();
                if !self.started && self.snapshot.is_some() {
                    self.started = true;
                    ctx.timer(ctx.now, 0);
                }
            }
            Input::Timer(_) => {
                if self.probes >= self.cfg.max_probes {
                    return;
                }
                if let Some((price, _)) = self.snapshot {
                    let limit = price.away_from_touch(self.target_side(), self.cfg.band_ticks);
                    let order = ctx
                        .order(
                            self.venue,
                            self.cfg.side,
                            OrderKind::Limit,
                            Some(limit),
                            Qty(self.cfg.qty),
                        )
                        .with_tif(TimeInForce::Ioc);
                    ctx.submit(order, false);
                    self.probes += 1;
                }
                ctx.timer(ctx.now + self.cfg.interval_us, 0);
            }
            Input::Report(Report::Fill(f)) if f.venue == self.venue => {
                let total = {
                    let q = self.filled.entry(f.price).or_insert(Qty::ZERO);
                    *q += f.qty;
                    *q
                };
                let displayed = match self.snapshot {
                    Some((p, q)) if p == f.price => q,
                    _ => Qty::ZERO,
                };
                if total > displayed && self.believed.insert(f.price) {
                    ctx.belief(self.venue, self.target_side(), f.price);
                }
            }
            _ => {}
        }
    }
}

/// Floods one venue with new/cancel pairs at a fixed rate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StufferConfig {
    pub venue: String,
    #[serde(default = "buy")]
    pub side: Side,
    pub price: u64,
    #[serde(default = "hundred")]
    pub qty: u64,
    #[serde(default)]
    pub start_us: u64,
    pub duration_us: u64,
    /// Messages per millisecond.
    pub rate_per_ms: u64,
}

impl StufferConfig {
    pub(crate) fn validate(&self, names: &Names<'_>) -> Result<(), ConfigError> {
        names.check("venue", &self.venue)?;
        if self.rate_per_ms == 0 || self.rate_per_ms > 1_000 {
            return Err(strategy_err("rate_per_ms", "must be between 1 and 1000"));
        }
        if self.qty == 0 {
            return Err(strategy_err("qty", "must be positive"));
        }
        Ok(())
    }

    pub(crate) fn build(&self, names: &Names<'_>) -> Stuffer {
        Stuffer {
            venue: names.venue(&self.venue),
            gap: 1_000 / self.rate_per_ms,
            end: SimTime(self.start_us + self.duration_us),
            cfg: self.clone(),
            live: None,
        }
    }
}

pub(crate) struct Stuffer {
    venue: VenueId,
    gap: u64,
    end: SimTime,
    cfg: StufferConfig,
    live: Option<OrderId>,
}

impl Strategy for Stuffer {
    fn on(&mut self, ctx: &mut Ctx<'_>, input: Input<'_>) {
        match input {
            Input::Start => ctx.timer(SimTime(self.cfg.start_us), 0),
            Input::Timer(_) => {
                if let Some(id) = self.live.take() {
                    ctx.cancel(self.venue, id);
                } else if ctx.now < self.end {
                    let order = ctx.order(
                        self.venue,
                        self.cfg.side,
                        OrderKind::Limit,
                        Some(Price(self.cfg.price)),
                        Qty(self.cfg.qty),
                    );
                    self.live = ctx.submit(order, false);
                } else {
                    return;
                }
                ctx.timer(ctx.now + self.gap, 0);
            }
            _ => {}
        }
    }
}

/// Races stale quotes after each jump in the public signal.
///
/// On a jump up it buys any ask it still sees below the new value, on a jump
/// down it sells to any bid above it. Filled shares are unloaded one tick
/// inside the new value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SniperConfig {
    pub venues: Vec<String>,
    pub size: u64,
    #[serde(default = "yes")]
    pub exit: bool,
}

impl SniperConfig {
    pub(crate) fn build(&self, names: &Names<'_>) -> Sniper {
        Sniper {
            venues: names.venues(&self.venues),
            size: Qty(self.size),
            exit: self.exit,
            value: None,
            snipes: BTreeSet::new(),
        }
    }
}

pub(crate) struct Sniper {
    venues: Vec<VenueId>,
    size: Qty,
    exit: bool,
    value: Option<u64>,
    snipes: BTreeSet<OrderId>,
}

impl Strategy for Sniper {
    fn on(&mut self, ctx: &mut Ctx<'_>, input: Input<'_>) {
        match input {
            Input::Signal(v) => {
                let prev = self.value.replace(v);
                let Some(prev) = prev else { return };
                if v == prev {
                    return;
                }
                let value = Price(v);
                for venue in self.venues.clone() {
                    let Some(l1) = ctx.view.l1(venue, ctx.instrument) else {
                        continue;
                    };
                    let target = if v > prev {
                        l1.ask.filter(|q| q.price < value).map(|q| (Side::Buy, q))
                    } else {
                        l1.bid.filter(|q| q.price > value).map(|q| (Side::Sell, q))
                    };
                    if let Some((side, q)) = target {
                        let qty = if self.size.is_zero() { q.qty } else { self.size };
                        let order = ctx
                            .order(venue, side, OrderKind::Limit, Some(q.price), qty)
                            .with_tif(TimeInForce::Ioc);
                        if let Some(id) = ctx.submit(order, false) {
                            self.snipes.insert(id);
                        }
                    }
                }
            }
            Input::Report(Report::Fill(f)) if self.exit && self.snipes.contains(&f.order_id) => {
                let Some(v) = self.value else { return };
                let side = f.side.opposite();
                let price = Price(v).away_from_touch(f.side, 1);
                let order = ctx.order(f.venue, side, OrderKind::Limit, Some(price), f.qty);
                ctx.submit(order, false);
            }
            _ => {}
        }
    }
}

/// Front-runs a routed remainder.
///
/// Rests a small sell at `price` on the ping venue. When it fills, the
/// attacker assumes a large buyer is sweeping and will route the rest to the
/// target venue, so it buys the target's liquidity at `price` and offers it
/// back `markup` ticks higher.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalperConfig {
    pub ping_venue: String,
    pub target_venue: String,
    pub price: u64,
    #[serde(default = "hundred")]
    pub ping_qty: u64,
    pub target_qty: u64,
    #[serde(default = "one")]
    pub markup: u64,
    #[serde(default)]
    pub start_us: u64,
}

impl ScalperConfig {
    pub(crate) fn validate(&self, names: &Names<'_>) -> Result<(), ConfigError> {
        names.check("ping_venue", &self.ping_venue)?;
        names.check("target_venue", &self.target_venue)?;
        if self.ping_venue == self.target_venue {
            return Err(strategy_err("target_venue", "must differ from ping_venue"));
        }
        if self.ping_qty == 0 || self.target_qty == 0 {
            return Err(strategy_err("target_qty", "quantities must be positive"));
        }
        Ok(())
    }

    pub(crate) fn build(&self, names: &Names<'_>) -> Scalper {
        Scalper {
            ping_venue: names.venue(&self.ping_venue),
            target_venue: names.venue(&self.target_venue),
            cfg: self.clone(),
            ping: None,
            sweep: None,
            bought: Qty::ZERO,
            unwound: false,
        }
    }
}

pub(crate) struct Scalper {
    ping_venue: VenueId,
    target_venue: VenueId,
    cfg: ScalperConfig,
    ping: Option<OrderId>,
    sweep: Option<OrderId>,
    bought: Qty,
    unwound: bool,
}

impl Scalper {
    fn unwind(&mut self, ctx: &mut Ctx<'_>) {
        if self.unwound || self.bought.is_zero() {
            return;
        }
        self.unwound = true;
        let price = Price(self.cfg.price).up(self.cfg.markup);
        let order = ctx.order(
            self.target_venue,
            Side::Sell,
            OrderKind::Limit,
            Some(price),
            self.bought,
        );
        ctx.submit(order, false);
    }
}

impl Strategy for Scalper {
    fn on(&mut self, ctx: &mut Ctx<'_>, input: Input<'_>) {
        match input {
            Input::Start => ctx.timer(SimTime(self.cfg.start_us), 0),
            Input::Timer(_) => {
                let order = ctx.order(
                    self.ping_venue,
                    Side::Sell,
                    OrderKind::Limit,
                    Some(Price(self.cfg.price)),
                    Qty(self.cfg.ping_qty),
                );
                self.ping = ctx.submit(order, false);
            }
            Input::Report(report) => {
                let id = Some(report.order_id());
                match report {
                    Report::Fill(_) if id == self.ping && self.sweep.is_none() => {
                        let order = ctx
                            .order(
                                self.target_venue,
                                Side::Buy,
                                OrderKind::Limit,
                                Some(Price(self.cfg.price)),
                                Qty(self.cfg.target_qty),
                            )
                            .with_tif(TimeInForce::Ioc);
                        self.sweep = ctx.submit(order, false);
                    }
                    Report::Fill(f) if id == self.sweep => {
                        self.bought += f.qty;
                        if f.leaves_qty.is_zero() {
                            self.unwind(ctx);
                        }
                    }
                    Report::Expired { .. } | Report::Rejected { .. } if id == self.sweep => self.unwind(ctx),
                    _ => {}
                }
            }
            _ => {}
        }
    }
}
