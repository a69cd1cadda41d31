//! Deterministic multi-venue market simulator.
//!
//! The crate is `no_std` (with `alloc`): every component is a pure state
//! machine driven by the discrete-event scheduler in [`simnet`]. File formats,
//! the command line and report writers live in the companion `marketsim` crate.
//!
//! - [`engine`]: limit order book, price-time and pro-rata matching, call auctions.
//! - [`venue`]: one exchange with speed bumps, lock/cross handling, order
//!   protection routing and market-data publication.
//! - [`simnet`]: scheduler, latency links, the consolidated quote aggregator and
//!   the feed-consumption model.
//! - [`agents`]: honest participants and the predatory strategies.
//! - [`monitors`]: post-hoc auditors over a run's trace.
//! - [`scenario`] and [`sim`]: configuration and the run loop wiring it all together.
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod agents;
pub mod engine;
pub mod monitors;
pub mod order;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod simnet;
pub mod trace;
pub mod types;
pub mod venue;

pub use order::{DisplayClass, DisplayState, Order, OrderKind, Replenish, TimeInForce};
pub use types::{InstrumentId, OrderId, ParticipantId, Price, Qty, Side, SimTime, VenueId};
