//! Post-hoc auditors over a run's trace.
//!
//! Each monitor is a pure function of the scenario and the [`Trace`]. They act
//! as an omniscient regulator: ground-truth owners of anonymous orders and the
//! contents of hidden orders are visible to them.

mod integrity;
mod metrics;
mod privacy;
mod queue;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use metrics::{
    AgentMetrics, AnonymityMetrics, AttackMetrics, ConfidentialityMetrics, Invariants, Metrics, StalenessStats,
    VenueMetrics,
};

use crate::scenario::ScenarioConfig;
use crate::trace::{Trace, TraceEvent};
use crate::types::{OrderId, ParticipantId, Price, Qty, Side, SimTime, VenueId};
use crate::venue::OrderMessage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    TradingIntegrity,
    FairMarketAccess,
    SymmetricInformation,
    QueueIntegrity,
    ParticipantAnonymity,
    DataConfidentiality,
}

impl Property {
    pub const ALL: [Property; 6] = [
        Property::TradingIntegrity,
        Property::FairMarketAccess,
        Property::SymmetricInformation,
        Property::QueueIntegrity,
        Property::ParticipantAnonymity,
        Property::DataConfidentiality,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Property::TradingIntegrity => "trading_integrity",
            Property::FairMarketAccess => "fair_market_access",
            Property::SymmetricInformation => "symmetric_information",
            Property::QueueIntegrity => "queue_integrity",
            Property::ParticipantAnonymity => "participant_anonymity",
            Property::DataConfidentiality => "data_confidentiality",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// `maker_order` executed while `ahead_of`, listed earlier at the same price and class, waited.
    RankInversion {
        maker_order: OrderId,
        ahead_of: OrderId,
        price: Price,
    },
    OrderToTrade {
        orders: u64,
        trades: u64,
        window_us: u64,
        threshold: u64,
    },
    /// The maker had sent a cancel no later than the taker sent its order.
    CancelOvertaken {
        maker_order: OrderId,
        taker_order: OrderId,
        cancel_sent_at: SimTime,
        order_sent_at: SimTime,
    },
    /// A routed remainder filled at a worse price than the quote it was routed to.
    TradeThrough {
        order_id: OrderId,
        protected_price: Price,
        price: Price,
        qty: Qty,
    },
    Staleness {
        staleness_us: u64,
        threshold_us: u64,
    },
    Fingerprinted {
        order_id: OrderId,
        owner: String,
    },
    HiddenDetected {
        order_id: OrderId,
        price: Price,
        belief_ts: SimTime,
        reveal_ts: SimTime,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub property: Property,
    pub ts: SimTime,
    /// Agent held responsible or, for privacy breaches, the agent that breached.
    pub agent: Option<String>,
    pub venue: Option<String>,
    pub order_id: Option<OrderId>,
    /// Trace event ids that reproduce the finding.
    pub events: Vec<u64>,
    pub evidence: Evidence,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorReport {
    pub metrics: Metrics,
    pub violations: Vec<Violation>,
}

/// Runs every monitor over a finished trace.
pub fn evaluate(config: &ScenarioConfig, trace: &Trace) -> MonitorReport {
    let index = Index::build(config, trace);
    let mut violations = Vec::new();
    violations.extend(integrity::trading_integrity(&index, trace));
    violations.extend(integrity::fair_access(&index, trace));
    violations.extend(integrity::symmetric_information(&index, trace));
    violations.extend(queue::audit(&index, trace));
    let (anonymity, v) = privacy::anonymity(&index, trace);
    violations.extend(v);
    let (confidentiality, v) = privacy::confidentiality(&index, trace);
    violations.extend(v);
    violations.sort_by_key(|v| (v.ts, v.events.first().copied(), v.property));
    let metrics = metrics::collect(&index, trace, anonymity, confidentiality, &violations);
    MonitorReport { metrics, violations }
}

/// What the agent sent for one order.
#[derive(Clone, Debug)]
pub(crate) struct OrderInfo {
    pub agent: ParticipantId,
    pub side: Side,
    pub total: Qty,
    pub anonymous: bool,
    pub sent_ts: SimTime,
}

/// Lookups shared by the monitors.
pub(crate) struct Index<'a> {
    pub config: &'a ScenarioConfig,
    pub orders: BTreeMap<OrderId, OrderInfo>,
    /// First cancel each order's owner sent, with its record id.
    pub cancels: BTreeMap<OrderId, (u64, SimTime)>,
}

impl<'a> Index<'a> {
    fn build(config: &'a ScenarioConfig, trace: &Trace) -> Index<'a> {
        let mut orders = BTreeMap::new();
        let mut cancels = BTreeMap::new();
        for (id, r) in trace.iter() {
            let TraceEvent::Sent { agent, msg, .. } = &r.event else {
                continue;
            };
            match msg {
                OrderMessage::New { order, .. } => {
                    orders.insert(
                        order.id,
                        OrderInfo {
                            agent: *agent,
                            side: order.side,
                            total: order.total_qty,
                            anonymous: order.anonymous,
                            sent_ts: r.ts,
                        },
                    );
                }
                OrderMessage::Cancel { order_id, .. } => {
                    cancels.entry(*order_id).or_insert((id, r.ts));
                }
                OrderMessage::Modify { .. } => {}
            }
        }
        Index {
            config,
            orders,
            cancels,
        }
    }

    pub fn agent_name(&self, p: ParticipantId) -> String {
        self.config
            .agents
            .get(p.0 as usize)
            .map(|a| a.name.clone())
            .unwrap_or_else(|| alloc::format!("participant-{}", p.0))
    }

    pub fn venue_name(&self, v: VenueId) -> String {
        self.config.venues[v.0 as usize].name.clone()
    }

    pub fn owner(&self, order: OrderId) -> Option<ParticipantId> {
        self.orders.get(&order).map(|o| o.agent)
    }
}
