//! Market-data views of a book. Values only; they never alias book state.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::types::{OrderId, ParticipantId, Price, Qty, SimTime};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quote {
    pub price: Price,
    pub qty: Qty,
}

/// Top of book, displayed liquidity only.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct L1View {
    pub bid: Option<Quote>,
    pub ask: Option<Quote>,
}

/// One displayed order inside a depth level (market-by-order detail).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderView {
    pub order_id: OrderId,
    /// Owner, or [`ParticipantId::GENERIC`] for anonymous orders.
    pub participant: ParticipantId,
    pub qty: Qty,
    /// Time the order (or its current slice) was listed in the book.
    pub listed_ts: SimTime,
    /// Submission timestamp written by the sender.
    pub claimed_submit_ts: SimTime,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthLevel {
    pub price: Price,
    pub qty: Qty,
    pub orders: Vec<OrderView>,
}

/// Depth view. Bids best-first (descending), asks best-first (ascending).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct L2View {
    pub bids: Vec<DepthLevel>,
    pub asks: Vec<DepthLevel>,
}

impl L2View {
    pub fn is_empty(&self) -> bool {
        self.bids.is_empty() && self.asks.is_empty()
    }

    pub fn level(&self, side: crate::types::Side, price: Price) -> Option<&DepthLevel> {
        let levels = match side {
            crate::types::Side::Buy => &self.bids,
            crate::types::Side::Sell => &self.asks,
        };
        levels.iter().find(|l| l.price == price)
    }

    /// Displayed quantity at `price` on `side`, zero if the level is absent.
    pub fn displayed_at(&self, side: crate::types::Side, price: Price) -> Qty {
        self.level(side, price).map(|l| l.qty).unwrap_or(Qty::ZERO)
    }

    pub fn top(&self) -> L1View {
        L1View {
            bid: self.bids.first().map(|l| Quote {
                price: l.price,
                qty: l.qty,
            }),
            ask: self.asks.first().map(|l| Quote {
                price: l.price,
                qty: l.qty,
            }),
        }
    }
}
