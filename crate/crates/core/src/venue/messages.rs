//! Wire records exchanged between participants, venues and the aggregator.

use serde::{Deserialize, Serialize};

use crate::engine::{L1View, L2View};
use crate::order::{DisplayState, Order};
use crate::simnet::NbboQuote;
use crate::types::{InstrumentId, OrderId, ParticipantId, Price, Qty, Side, SimTime, VenueId};

/// An order-entry message. Loosely follows FIX new/cancel/replace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "msg_type", rename_all = "snake_case")]
pub enum OrderMessage {
    New {
        order: Order,
        /// Allow the venue to route a marketable remainder to a better away quote.
        route: bool,
    },
    Cancel {
        order_id: OrderId,
        participant: ParticipantId,
        instrument: InstrumentId,
        claimed_submit_ts: SimTime,
    },
    Modify {
        order_id: OrderId,
        participant: ParticipantId,
        instrument: InstrumentId,
        new_price: Option<Price>,
        new_qty: Option<Qty>,
        claimed_submit_ts: SimTime,
    },
}

impl OrderMessage {
    pub fn order_id(&self) -> OrderId {
        match self {
            OrderMessage::New { order, .. } => order.id,
            OrderMessage::Cancel { order_id, .. } | OrderMessage::Modify { order_id, .. } => *order_id,
        }
    }

    pub fn participant(&self) -> ParticipantId {
        match self {
            OrderMessage::New { order, .. } => order.participant,
            OrderMessage::Cancel { participant, .. } | OrderMessage::Modify { participant, .. } => *participant,
        }
    }

    pub fn instrument(&self) -> InstrumentId {
        match self {
            OrderMessage::New { order, .. } => order.instrument,
            OrderMessage::Cancel { instrument, .. } | OrderMessage::Modify { instrument, .. } => *instrument,
        }
    }

    pub fn claimed_submit_ts(&self) -> SimTime {
        match self {
            OrderMessage::New { order, .. } => order.claimed_submit_ts,
            OrderMessage::Cancel { claimed_submit_ts, .. } | OrderMessage::Modify { claimed_submit_ts, .. } => {
                *claimed_submit_ts
            }
        }
    }

    pub fn set_claimed_submit_ts(&mut self, ts: SimTime) {
        match self {
            OrderMessage::New { order, .. } => order.claimed_submit_ts = ts,
            OrderMessage::Cancel { claimed_submit_ts, .. } | OrderMessage::Modify { claimed_submit_ts, .. } => {
                *claimed_submit_ts = ts
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            OrderMessage::New { .. } => "new",
            OrderMessage::Cancel { .. } => "cancel",
            OrderMessage::Modify { .. } => "modify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Liquidity {
    Maker,
    Taker,
    Auction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub order_id: OrderId,
    pub venue: VenueId,
    pub instrument: InstrumentId,
    pub side: Side,
    pub qty: Qty,
    pub price: Price,
    pub leaves_qty: Qty,
    pub ts: SimTime,
    pub liquidity: Liquidity,
    /// Set when the fill belongs to a remainder another venue routed here.
    pub routed_to: Option<VenueId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Malformed,
    DuplicateOrderId,
    UnknownInstrument,
    UnknownOrder,
    /// A reserve or discretionary remainder would lock or cross an away quote.
    WouldLockOrCross,
    /// The remainder is marketable at a better away quote and the venue rejects instead of routing.
    TradeThrough,
}

/// Private messages from a venue to an order's owner.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "report", rename_all = "snake_case")]
pub enum Report {
    Accepted {
        order_id: OrderId,
        venue: VenueId,
        instrument: InstrumentId,
        /// Price the order is displayed at (differs from the limit when slid).
        price: Option<Price>,
        open_qty: Qty,
        display_state: DisplayState,
        ts: SimTime,
    },
    Fill(ExecutionReport),
    Canceled {
        order_id: OrderId,
        venue: VenueId,
        open_qty: Qty,
        ts: SimTime,
    },
    Modified {
        order_id: OrderId,
        venue: VenueId,
        price: Option<Price>,
        open_qty: Qty,
        ts: SimTime,
    },
    Expired {
        order_id: OrderId,
        venue: VenueId,
        qty: Qty,
        ts: SimTime,
    },
    Routed {
        order_id: OrderId,
        venue: VenueId,
        to: VenueId,
        qty: Qty,
        ts: SimTime,
    },
    Rejected {
        order_id: OrderId,
        venue: VenueId,
        reason: RejectReason,
        ts: SimTime,
    },
}

impl Report {
    pub fn order_id(&self) -> OrderId {
        match self {
            Report::Fill(f) => f.order_id,
            Report::Accepted { order_id, .. }
            | Report::Canceled { order_id, .. }
            | Report::Modified { order_id, .. }
            | Report::Expired { order_id, .. }
            | Report::Routed { order_id, .. }
            | Report::Rejected { order_id, .. } => *order_id,
        }
    }

    pub fn venue(&self) -> VenueId {
        match self {
            Report::Fill(f) => f.venue,
            Report::Accepted { venue, .. }
            | Report::Canceled { venue, .. }
            | Report::Modified { venue, .. }
            | Report::Expired { venue, .. }
            | Report::Routed { venue, .. }
            | Report::Rejected { venue, .. } => *venue,
        }
    }
}

/// Public market data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "feed", rename_all = "snake_case")]
pub enum MarketData {
    L1 {
        venue: VenueId,
        instrument: InstrumentId,
        venue_ts: SimTime,
        view: L1View,
    },
    L2 {
        venue: VenueId,
        instrument: InstrumentId,
        venue_ts: SimTime,
        view: L2View,
    },
    /// Post-trade print. Anonymous sides carry the generic participant id.
    Print {
        venue: VenueId,
        instrument: InstrumentId,
        venue_ts: SimTime,
        price: Price,
        qty: Qty,
        buyer: ParticipantId,
        seller: ParticipantId,
        aggressor_side: Option<Side>,
    },
    Nbbo(NbboQuote),
}

impl MarketData {
    /// Time the data was generated at its source.
    pub fn venue_ts(&self) -> SimTime {
        match self {
            MarketData::L1 { venue_ts, .. } | MarketData::L2 { venue_ts, .. } | MarketData::Print { venue_ts, .. } => {
                *venue_ts
            }
            MarketData::Nbbo(q) => q.ts,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            MarketData::L1 { .. } => "l1",
            MarketData::L2 { .. } => "l2",
            MarketData::Print { .. } => "print",
            MarketData::Nbbo(_) => "nbbo",
        }
    }
}
