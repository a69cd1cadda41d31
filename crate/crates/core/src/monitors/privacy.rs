//! Participant anonymity and data confidentiality.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use super::{AnonymityMetrics, ConfidentialityMetrics, Evidence, Index, Property, Violation};
use crate::engine::{BookEvent, RequeueReason};
use crate::order::OrderKind;
use crate::trace::{FeedKind, Trace, TraceEvent};
use crate::types::{InstrumentId, OrderId, ParticipantId, Price, Side, SimTime, VenueId};

/// Scores fingerprinting guesses against the true owners of anonymous orders.
/// Every correct attribution is a violation.
pub(crate) fn anonymity(index: &Index<'_>, trace: &Trace) -> (AnonymityMetrics, Vec<Violation>) {
    let anonymous: Vec<_> = index.orders.values().filter(|o| o.anonymous).collect();
    let submitters: BTreeSet<_> = anonymous.iter().map(|o| o.agent).collect();
    let mut m = AnonymityMetrics {
        anonymous_orders: anonymous.len() as u64,
        anonymous_submitters: submitters.len() as u64,
        chance_baseline: if submitters.is_empty() {
            0.0
        } else {
            1.0 / submitters.len() as f64
        },
        ..AnonymityMetrics::default()
    };
    let mut out = Vec::new();
    for (id, r) in trace.iter() {
        let TraceEvent::Guess { agent, order_id, guess } = r.event else {
            continue;
        };
        let Some(guess) = guess else {
            m.abstentions += 1;
            continue;
        };
        m.guesses += 1;
        let Some(owner) = index.owner(order_id) else { continue };
        if owner == guess {
            m.correct += 1;
            out.push(Violation {
                property: Property::ParticipantAnonymity,
                ts: r.ts,
                agent: Some(index.agent_name(agent)),
                venue: None,
                order_id: Some(order_id),
                events: vec![id],
                evidence: Evidence::Fingerprinted {
                    order_id,
                    owner: index.agent_name(owner),
                },
            });
        }
    }
    if m.anonymous_orders > 0 {
        m.accuracy = m.correct as f64 / m.anonymous_orders as f64;
    }
    if m.guesses > 0 {
        m.precision = Some(m.correct as f64 / m.guesses as f64);
    }
    (m, out)
}

struct Hidden {
    venue: VenueId,
    instrument: InstrumentId,
    side: Side,
    price: Price,
    kind: OrderKind,
    resting: bool,
    /// Time public evidence of the hidden quantity first became possible.
    trigger: Option<SimTime>,
    reveal: Option<SimTime>,
    /// First correct belief: time, record id and believer.
    detected: Option<(SimTime, u64, ParticipantId)>,
}

/// Scores hidden-liquidity beliefs. An order counts as detected when an agent
/// correctly believed it was resting at its venue, side and price before the
/// market data first revealed it.
///
/// A reserve order is revealed by the first depth update after its first
/// replenishment; a fully hidden order by the first print or depth update
/// after its first execution. Orders never revealed are revealed at the end
/// of the run.
pub(crate) fn confidentiality(index: &Index<'_>, trace: &Trace) -> (ConfidentialityMetrics, Vec<Violation>) {
    let mut hidden: BTreeMap<(VenueId, OrderId), Hidden> = BTreeMap::new();
    let mut beliefs = 0;
    let mut correct_beliefs = 0;
    for (id, r) in trace.iter() {
        match &r.event {
            TraceEvent::Book {
                venue,
                instrument,
                event,
            } => match event {
                BookEvent::Rested {
                    order_id,
                    side,
                    kind,
                    price: Some(price),
                    visible_qty,
                    open_qty,
                    ..
                } => {
                    let is_hidden = matches!(kind, OrderKind::Hidden)
                        || (matches!(kind, OrderKind::Reserve { .. }) && open_qty > visible_qty);
                    if is_hidden {
                        hidden.insert(
                            (*venue, *order_id),
                            Hidden {
                                venue: *venue,
                                instrument: *instrument,
                                side: *side,
                                price: *price,
                                kind: *kind,
                                resting: true,
                                trigger: None,
                                reveal: None,
                                detected: None,
                            },
                        );
                    }
                }
                BookEvent::Requeued {
                    order_id,
                    reason,
                    price,
                    ..
                } => {
                    if let Some(h) = hidden.get_mut(&(*venue, *order_id)) {
                        h.price = *price;
                        if *reason == RequeueReason::Replenish && h.trigger.is_none() {
                            h.trigger = Some(r.ts);
                        }
                    }
                }
                BookEvent::Executed { maker_order_id, .. } => {
                    if let Some(h) = hidden.get_mut(&(*venue, *maker_order_id)) {
                        if matches!(h.kind, OrderKind::Hidden) && h.trigger.is_none() {
                            h.trigger = Some(r.ts);
                        }
                    }
                }
                BookEvent::Removed { order_id, .. } => {
                    if let Some(h) = hidden.get_mut(&(*venue, *order_id)) {
                        h.resting = false;
                    }
                }
                _ => {}
            },
            TraceEvent::Published {
                venue,
                instrument,
                feed,
            } => {
                for h in hidden.values_mut() {
                    let reveals = match h.kind {
                        OrderKind::Hidden => matches!(feed, FeedKind::L2 | FeedKind::Print),
                        _ => *feed == FeedKind::L2,
                    };
                    if h.venue == *venue
                        && h.instrument == *instrument
                        && h.trigger.is_some()
                        && h.reveal.is_none()
                        && reveals
                    {
                        h.reveal = Some(r.ts);
                    }
                }
            }
            TraceEvent::Belief {
                agent,
                venue,
                instrument,
                side,
                price,
                ..
            } => {
                beliefs += 1;
                let mut right = false;
                for h in hidden.values_mut() {
                    if h.resting
                        && h.reveal.is_none()
                        && h.venue == *venue
                        && h.instrument == *instrument
                        && h.side == *side
                        && h.price == *price
                    {
                        right = true;
                        h.detected.get_or_insert((r.ts, id, *agent));
                    }
                }
                if right {
                    correct_beliefs += 1;
                }
            }
            _ => {}
        }
    }
    let end = SimTime(index.config.duration_us);
    let mut m = ConfidentialityMetrics {
        hidden_orders: hidden.len() as u64,
        beliefs,
        correct_beliefs,
        ..ConfidentialityMetrics::default()
    };
    let mut out = Vec::new();
    let mut lead_sum = 0u64;
    for ((venue, order_id), h) in &hidden {
        let Some((belief_ts, belief_id, agent)) = h.detected else {
            continue;
        };
        let reveal = h.reveal.unwrap_or(end);
        let lead = reveal.since(belief_ts);
        m.detected += 1;
        lead_sum += lead;
        m.min_lead_time_us = Some(m.min_lead_time_us.map_or(lead, |x: u64| x.min(lead)));
        out.push(Violation {
            property: Property::DataConfidentiality,
            ts: belief_ts,
            agent: Some(index.agent_name(agent)),
            venue: Some(index.venue_name(*venue)),
            order_id: Some(*order_id),
            events: vec![belief_id],
            evidence: Evidence::HiddenDetected {
                order_id: *order_id,
                price: h.price,
                belief_ts,
                reveal_ts: reveal,
            },
        });
    }
    if m.hidden_orders > 0 {
        m.detection_rate = m.detected as f64 / m.hidden_orders as f64;
    }
    if m.detected > 0 {
        m.mean_lead_time_us = Some(lead_sum as f64 / m.detected as f64);
    }
    (m, out)
}
