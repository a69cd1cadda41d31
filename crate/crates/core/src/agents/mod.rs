//! Trading agents: honest participants and the predatory strategies.
//!
//! A strategy reacts to [`Input`]s through a [`Ctx`], which is the only way it
//! can act: send order messages, arm timers, or record inferences for the
//! monitors. The context enforces the agent's knowledge of special order types.

mod attacks;
mod honest;
mod scripted;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use attacks::{FingerprinterConfig, PingerConfig, ScalperConfig, SniperConfig, StufferConfig};
pub use honest::{BrokerConfig, InvestorConfig, InvestorStyle, MakerConfig, PeriodicConfig, SidePolicy};
pub use scripted::{QuoteTrigger, ScriptAction, ScriptStep, ScriptedConfig};

use crate::engine::{L1View, L2View};
use crate::order::{Order, OrderKind};
use crate::rng::Substream;
use crate::scenario::{strategy_err, ConfigError, ScenarioConfig};
use crate::simnet::NbboQuote;
use crate::types::{InstrumentId, OrderId, ParticipantId, Price, Qty, Side, SimTime, VenueId};
use crate::venue::{MarketData, OrderMessage, Report};

/// Something an agent reacts to.
#[derive(Clone, Copy, Debug)]
pub enum Input<'a> {
    Start,
    Timer(u64),
    /// New value of the public signal for the agent's instrument.
    Signal(u64),
    Report(&'a Report),
    /// Market data, after the agent's feed handler has processed it.
    Market(&'a MarketData),
}

pub trait Strategy {
    fn on(&mut self, ctx: &mut Ctx<'_>, input: Input<'_>);
}

/// Order types an agent has been told about.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Knowledge {
    pub hide_and_light: bool,
    pub day_iso: bool,
}

impl Knowledge {
    pub fn permits(&self, kind: &OrderKind) -> bool {
        match kind {
            OrderKind::HideAndLight => self.hide_and_light,
            OrderKind::DayIso => self.day_iso,
            _ => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Send {
        venue: VenueId,
        msg: OrderMessage,
    },
    Timer {
        at: SimTime,
        tag: u64,
    },
    Guess {
        order_id: OrderId,
        guess: Option<ParticipantId>,
    },
    Belief {
        venue: VenueId,
        side: Side,
        price: Price,
    },
    /// The agent tried an order type it does not know about.
    NotPermitted,
}

/// The latest market data an agent has processed.
#[derive(Clone, Debug, Default)]
pub struct MarketView {
    direct: BTreeMap<(VenueId, InstrumentId), L1View>,
    depth: BTreeMap<(VenueId, InstrumentId), L2View>,
    consolidated: BTreeMap<InstrumentId, NbboQuote>,
}

impl MarketView {
    pub fn apply(&mut self, md: &MarketData) {
        match md {
            MarketData::L1 {
                venue,
                instrument,
                view,
                ..
            } => {
                self.direct.insert((*venue, *instrument), *view);
            }
            MarketData::L2 {
                venue,
                instrument,
                view,
                ..
            } => {
                self.direct.insert((*venue, *instrument), view.top());
                self.depth.insert((*venue, *instrument), view.clone());
            }
            MarketData::Nbbo(q) => {
                self.consolidated.insert(q.instrument, q.clone());
            }
            MarketData::Print { .. } => {}
        }
    }

    /// Top of book at `venue`: the direct feed if subscribed, else the consolidated quote.
    pub fn l1(&self, venue: VenueId, instrument: InstrumentId) -> Option<L1View> {
        if let Some(v) = self.direct.get(&(venue, instrument)) {
            return Some(*v);
        }
        let q = self.consolidated.get(&instrument)?;
        q.venues.iter().find(|q| q.venue == venue).map(|q| q.l1)
    }

    pub fn l2(&self, venue: VenueId, instrument: InstrumentId) -> Option<&L2View> {
        self.depth.get(&(venue, instrument))
    }
}

pub struct Ctx<'a> {
    pub now: SimTime,
    pub me: ParticipantId,
    pub instrument: InstrumentId,
    pub view: &'a MarketView,
    knowledge: Knowledge,
    next_order_id: &'a mut u64,
    actions: Vec<Action>,
}

impl<'a> Ctx<'a> {
    pub fn new(
        now: SimTime,
        me: ParticipantId,
        instrument: InstrumentId,
        view: &'a MarketView,
        knowledge: Knowledge,
        next_order_id: &'a mut u64,
    ) -> Ctx<'a> {
        Ctx {
            now,
            me,
            instrument,
            view,
            knowledge,
            next_order_id,
            actions: Vec::new(),
        }
    }

    pub fn into_actions(self) -> Vec<Action> {
        self.actions
    }

    /// A fresh order with a run-unique id, stamped with the current time.
    pub fn order(&mut self, venue: VenueId, side: Side, kind: OrderKind, price: Option<Price>, qty: Qty) -> Order {
        let id = OrderId(*self.next_order_id);
        *self.next_order_id += 1;
        Order::new(id, self.me, venue, self.instrument, side, kind, price, qty).with_claimed_submit_ts(self.now)
    }

    /// Sends a new order. Returns `None` if the agent does not know the order type.
    pub fn submit(&mut self, order: Order, route: bool) -> Option<OrderId> {
        if !self.knowledge.permits(&order.kind) {
            self.actions.push(Action::NotPermitted);
            return None;
        }
        let id = order.id;
        let venue = order.venue;
        self.actions.push(Action::Send {
            venue,
            msg: OrderMessage::New { order, route },
        });
        Some(id)
    }

    pub fn cancel(&mut self, venue: VenueId, order_id: OrderId) {
        let msg = OrderMessage::Cancel {
            order_id,
            participant: self.me,
            instrument: self.instrument,
            claimed_submit_ts: self.now,
        };
        self.actions.push(Action::Send { venue, msg });
    }

    pub fn modify(&mut self, venue: VenueId, order_id: OrderId, new_price: Option<Price>, new_qty: Option<Qty>) {
        let msg = OrderMessage::Modify {
            order_id,
            participant: self.me,
            instrument: self.instrument,
            new_price,
            new_qty,
            claimed_submit_ts: self.now,
        };
        self.actions.push(Action::Send { venue, msg });
    }

    pub fn timer(&mut self, at: SimTime, tag: u64) {
        self.actions.push(Action::Timer { at, tag });
    }

    pub fn guess(&mut self, order_id: OrderId, guess: Option<ParticipantId>) {
        self.actions.push(Action::Guess { order_id, guess });
    }

    pub fn belief(&mut self, venue: VenueId, side: Side, price: Price) {
        self.actions.push(Action::Belief { venue, side, price });
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StrategyConfig {
    Scripted(ScriptedConfig),
    Maker(MakerConfig),
    Investor(InvestorConfig),
    Periodic(PeriodicConfig),
    Broker(BrokerConfig),
    Fingerprinter(FingerprinterConfig),
    Pinger(PingerConfig),
    Stuffer(StufferConfig),
    Sniper(SniperConfig),
    Scalper(ScalperConfig),
}

/// Resolves venue names for strategy construction.
pub(crate) struct Names<'a>(pub &'a ScenarioConfig);

impl Names<'_> {
    pub fn venue(&self, name: &str) -> VenueId {
        self.0.venue_id(name).expect("validated venue name")
    }

    pub fn venues(&self, names: &[String]) -> Vec<VenueId> {
        names.iter().map(|n| self.venue(n)).collect()
    }

    pub fn check(&self, path: &str, name: &str) -> Result<(), ConfigError> {
        match self.0.venue_id(name) {
            Some(_) => Ok(()),
            None => Err(strategy_err(path, alloc::format!("unknown venue '{name}'"))),
        }
    }

    pub fn check_all(&self, path: &str, names: &[String]) -> Result<(), ConfigError> {
        if names.is_empty() {
            return Err(strategy_err(path, "at least one venue is required"));
        }
        for (i, n) in names.iter().enumerate() {
            self.check(&alloc::format!("{path}[{i}]"), n)?;
        }
        Ok(())
    }
}

impl StrategyConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            StrategyConfig::Scripted(_) => "scripted",
            StrategyConfig::Maker(_) => "maker",
            StrategyConfig::Investor(_) => "investor",
            StrategyConfig::Periodic(_) => "periodic",
            StrategyConfig::Broker(_) => "broker",
            StrategyConfig::Fingerprinter(_) => "fingerprinter",
            StrategyConfig::Pinger(_) => "pinger",
            StrategyConfig::Stuffer(_) => "stuffer",
            StrategyConfig::Sniper(_) => "sniper",
            StrategyConfig::Scalper(_) => "scalper",
        }
    }

    /// Checks references against the scenario. Error paths are relative to the strategy.
    pub fn validate(&self, scenario: &ScenarioConfig) -> Result<(), ConfigError> {
        let names = Names(scenario);
        match self {
            StrategyConfig::Scripted(c) => c.validate(&names),
            StrategyConfig::Maker(c) => c.validate(&names),
            StrategyConfig::Investor(c) => c.validate(&names),
            StrategyConfig::Periodic(c) => c.validate(&names),
            StrategyConfig::Broker(c) => c.validate(&names),
            StrategyConfig::Fingerprinter(c) => names.check("venue", &c.venue),
            StrategyConfig::Pinger(c) => c.validate(&names),
            StrategyConfig::Stuffer(c) => c.validate(&names),
            StrategyConfig::Sniper(c) => names.check_all("venues", &c.venues),
            StrategyConfig::Scalper(c) => c.validate(&names),
        }
    }

    /// Instantiates the strategy. `rng` is the agent's own random stream.
    pub fn build(&self, scenario: &ScenarioConfig, rng: Substream) -> Box<dyn Strategy> {
        let names = Names(scenario);
        match self {
            StrategyConfig::Scripted(c) => Box::new(c.build(&names)),
            StrategyConfig::Maker(c) => Box::new(c.build(&names)),
            StrategyConfig::Investor(c) => Box::new(c.build(&names)),
            StrategyConfig::Periodic(c) => Box::new(c.build(&names, rng)),
            StrategyConfig::Broker(c) => Box::new(c.build(&names)),
            StrategyConfig::Fingerprinter(c) => Box::new(c.build(&names)),
            StrategyConfig::Pinger(c) => Box::new(c.build(&names)),
            StrategyConfig::Stuffer(c) => Box::new(c.build(&names)),
            StrategyConfig::Sniper(c) => Box::new(c.build(&names)),
            StrategyConfig::Scalper(c) => Box::new(c.build(&names)),
        }
    }
}

fn yes() -> bool {
    true
}

#[cfg(test)]
mod tests;
