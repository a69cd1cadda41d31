//! Matching engine: one limit order book per instrument.

mod book;
pub mod pro_rata;
mod view;

pub use book::{
    rank_key, replenish_reserve, AuctionOutcome, BookEvent, InsertOutcome, MatchingAlgo, ModifyOutcome, OrderBook,
    PriceLevel, RankKey, RemoveReason, Reposition, RequeueReason, Trade,
};
pub use view::{DepthLevel, L1View, L2View, OrderView, Quote};

use thiserror::Error;

use crate::types::{InstrumentId, OrderId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("duplicate order id {0}")]
    DuplicateOrderId(OrderId),
    #[error("unknown instrument {0}")]
    UnknownInstrument(InstrumentId),
    #[error("unknown order {0}")]
    UnknownOrder(OrderId),
    #[error("invalid modification: {0}")]
    InvalidModification(&'static str),
    #[error("invalid order: {0}")]
    InvalidOrder(&'static str),
}
