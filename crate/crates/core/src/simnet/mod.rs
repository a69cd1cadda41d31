//! Discrete-event plumbing: the scheduler, latency links, the consolidated
//! quote aggregator and the market-data consumption model.

mod consumer;
mod link;
mod scheduler;
mod sip;

pub use consumer::ConsumerModel;
pub use link::{Link, LinkSpec};
pub use scheduler::{Endpoint, Event, Scheduler};
pub use sip::{NbboQuote, Sip, VenueQuote};

use crate::types::SimTime;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("event scheduled at {at:?}, before the current time {now:?}")]
    SchedulingInPast { at: SimTime, now: SimTime },
    #[error("unknown endpoint {0:?}")]
    UnknownEndpoint(Endpoint),
}
