//! Queue integrity: replays book events against a pure price-time reference.
//!
//! An order's reference position is the moment it first rested. Only a
//! replenished reserve slice or a modification legitimately moves it to the
//! back; venue-side slides, relights and the first-ISO exception do not.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use super::{Evidence, Index, Property, Violation};
use crate::engine::{BookEvent, MatchingAlgo, RequeueReason};
use crate::order::DisplayClass;
use crate::trace::{Trace, TraceEvent};
use crate::types::{InstrumentId, OrderId, Price, Side, VenueId};

struct Resting {
    instrument: InstrumentId,
    side: Side,
    price: Price,
    class: DisplayClass,
    /// Record id of the event that set the reference position.
    reference: u64,
}

pub(crate) fn audit(index: &Index<'_>, trace: &Trace) -> Vec<Violation> {
    let audited: BTreeSet<VenueId> = index
        .config
        .venues
        .iter()
        .enumerate()
        .filter(|(_, v)| {
            v.matching == MatchingAlgo::Fifo
                && !v.is_batch()
                && !index.config.monitors.queue_audit_exempt.contains(&v.name)
        })
        .map(|(i, _)| VenueId(i as u32))
        .collect();
    let mut book: BTreeMap<(VenueId, OrderId), Resting> = BTreeMap::new();
    let mut out = Vec::new();
    for (id, r) in trace.iter() {
        let TraceEvent::Book {
            venue,
            instrument,
            event,
        } = &r.event
        else {
            continue;
        };
        if !audited.contains(venue) {
            continue;
        }
        match event {
            BookEvent::Rested {
                order_id,
                side,
                price: Some(price),
                class,
                ..
            } => {
                book.insert(
                    (*venue, *order_id),
                    Resting {
                        instrument: *instrument,
                        side: *side,
                        price: *price,
                        class: *class,
                        reference: id,
                    },
                );
            }
            BookEvent::Requeued {
                order_id,
                reason,
                price,
                class,
                ..
            } => {
                if let Some(o) = book.get_mut(&(*venue, *order_id)) {
                    o.price = *price;
                    o.class = *class;
                    if matches!(reason, RequeueReason::Replenish | RequeueReason::Modify) {
                        o.reference = id;
                    }
                }
            }
            BookEvent::Removed { order_id, .. } => {
                book.remove(&(*venue, *order_id));
            }
            BookEvent::Executed {
                maker_order_id, price, ..
            } => {
                let Some(m) = book.get(&(*venue, *maker_order_id)) else {
                    continue;
                };
                let ahead = book
                    .iter()
                    .filter(|((v, oid), o)| {
                        v == venue
                            && oid != maker_order_id
                            && o.instrument == m.instrument
                            && o.side == m.side
                            && o.price == m.price
                            && o.class == m.class
                            && o.reference < m.reference
                    })
                    .min_by_key(|(_, o)| o.reference);
                if let Some(((_, ahead_id), a)) = ahead {
                    out.push(Violation {
                        property: Property::QueueIntegrity,
                        ts: r.ts,
                        agent: index.owner(*maker_order_id).map(|p| index.agent_name(p)),
                        venue: Some(index.venue_name(*venue)),
                        order_id: Some(*maker_order_id),
                        events: vec![id, m.reference, a.reference],
                        evidence: Evidence::RankInversion {
                            maker_order: *maker_order_id,
                            ahead_of: *ahead_id,
                            price: *price,
                        },
                    });
                }
            }
            _ => {}
        }
    }
    out
}
