//! The run trace: everything an omniscient regulator would see.
//!
//! Monitors are pure functions over this record. Entries are appended in
//! processing order, so a record's index is a stable event id.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::{BookEvent, Trade};
use crate::types::{InstrumentId, OrderId, ParticipantId, Price, Side, SimTime, VenueId};
use crate::venue::{OrderMessage, Report};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedKind {
    L1,
    L2,
    Print,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRejectReason {
    /// The agent is not aware of the order type it tried to use.
    OrderTypeNotPermitted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceEvent {
    /// An agent put a message on the wire; `msg` carries the claimed timestamp as sent.
    Sent {
        agent: ParticipantId,
        venue: VenueId,
        msg: OrderMessage,
    },
    Book {
        venue: VenueId,
        instrument: InstrumentId,
        event: BookEvent,
    },
    Trade {
        venue: VenueId,
        trade: Trade,
    },
    Report {
        venue: VenueId,
        to: ParticipantId,
        report: Report,
    },
    Routed {
        from: VenueId,
        to: VenueId,
        order_id: OrderId,
        participant: ParticipantId,
        protected_price: Price,
    },
    Published {
        venue: VenueId,
        instrument: InstrumentId,
        feed: FeedKind,
    },
    Signal {
        instrument: InstrumentId,
        value: u64,
    },
    /// A fingerprinting attempt on an anonymous order; `None` is an abstention.
    Guess {
        agent: ParticipantId,
        order_id: OrderId,
        guess: Option<ParticipantId>,
    },
    /// An inferred hidden order resting on `side` at `price`.
    Belief {
        agent: ParticipantId,
        venue: VenueId,
        instrument: InstrumentId,
        side: Side,
        price: Price,
    },
    Staleness {
        agent: ParticipantId,
        staleness_us: u64,
        backlog: u64,
    },
    AgentReject {
        agent: ParticipantId,
        reason: AgentRejectReason,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub ts: SimTime,
    #[serde(flatten)]
    pub event: TraceEvent,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, ts: SimTime, event: TraceEvent) {
        self.records.push(TraceRecord { ts, event });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records with their event ids.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &TraceRecord)> {
        self.records.iter().enumerate().map(|(i, r)| (i as u64, r))
    }

    pub fn trades(&self) -> impl Iterator<Item = (SimTime, VenueId, &Trade)> {
        self.records.iter().filter_map(|r| match &r.event {
            TraceEvent::Trade { venue, trade } => Some((r.ts, *venue, trade)),
            _ => None,
        })
    }
}
