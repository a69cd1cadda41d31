//! Trading integrity, fair market access and symmetric information.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use super::{Evidence, Index, Property, Violation};
use crate::trace::{Trace, TraceEvent};
use crate::types::{OrderId, ParticipantId, Price, Side, VenueId};
use crate::venue::OrderMessage;

/// Flags each agent, once, whose order entries (new orders and modifications)
/// exceed `threshold × max(trades, 1)` within any sliding window.
pub(crate) fn trading_integrity(index: &Index<'_>, trace: &Trace) -> Vec<Violation> {
    let window = index.config.monitors.order_to_trade_window_us;
    let threshold = index.config.monitors.order_to_trade_threshold;
    // Per agent: order-entry times and trade times still inside the window.
    let mut orders: BTreeMap<ParticipantId, VecDeque<u64>> = BTreeMap::new();
    let mut trades: BTreeMap<ParticipantId, VecDeque<u64>> = BTreeMap::new();
    let mut flagged = BTreeSet::new();
    let mut out = Vec::new();
    for (id, r) in trace.iter() {
        let t = r.ts.0;
        match &r.event {
            TraceEvent::Trade { trade, .. } => {
                for p in [trade.taker_participant, trade.maker_participant] {
                    trades.entry(p).or_default().push_back(t);
                }
                if trade.taker_participant == trade.maker_participant {
                    trades.entry(trade.taker_participant).or_default().pop_back();
                }
            }
            TraceEvent::Sent { agent, msg, .. } if !matches!(msg, OrderMessage::Cancel { .. }) => {
                if flagged.contains(agent) {
                    continue;
                }
                let o = orders.entry(*agent).or_default();
                o.push_back(t);
                let tr = trades.entry(*agent).or_default();
                for q in [&mut *o, &mut *tr] {
                    while q.front().is_some_and(|&s| s + window <= t) {
                        q.pop_front();
                    }
                }
                let (n, k) = (o.len() as u64, tr.len() as u64);
                if n > threshold * k.max(1) {
                    flagged.insert(*agent);
                    out.push(Violation {
                        property: Property::TradingIntegrity,
                        ts: r.ts,
                        agent: Some(index.agent_name(*agent)),
                        venue: None,
                        order_id: None,
                        events: vec![id],
                        evidence: Evidence::OrderToTrade {
                            orders: n,
                            trades: k,
                            window_us: window,
                            threshold,
                        },
                    });
                }
            }
            _ => {}
        }
    }
    out
}

/// Two observable breaches of equal access: a resting order executed although
/// its owner had already sent a cancel by the time the taker sent its order,
/// and a routed remainder that fills worse than the quote it was routed to.
pub(crate) fn fair_access(index: &Index<'_>, trace: &Trace) -> Vec<Violation> {
    let mut routed: BTreeMap<(VenueId, OrderId), (u64, Price)> = BTreeMap::new();
    let mut out = Vec::new();
    for (id, r) in trace.iter() {
        match &r.event {
            TraceEvent::Routed {
                to,
                order_id,
                protected_price,
                ..
            } => {
                routed.insert((*to, *order_id), (id, *protected_price));
            }
            TraceEvent::Trade { venue, trade } => {
                if trade.aggressor_side.is_some() {
                    if let (Some(&(cancel_id, cancel_ts)), Some(taker)) = (
                        index.cancels.get(&trade.maker_order_id),
                        index.orders.get(&trade.taker_order_id),
                    ) {
                        if cancel_ts <= taker.sent_ts {
                            out.push(Violation {
                                property: Property::FairMarketAccess,
                                ts: r.ts,
                                agent: Some(index.agent_name(trade.taker_participant)),
                                venue: Some(index.venue_name(*venue)),
                                order_id: Some(trade.maker_order_id),
                                events: vec![id, cancel_id],
                                evidence: Evidence::CancelOvertaken {
                                    maker_order: trade.maker_order_id,
                                    taker_order: trade.taker_order_id,
                                    cancel_sent_at: cancel_ts,
                                    order_sent_at: taker.sent_ts,
                                },
                            });
                        }
                    }
                }
                if let Some(&(route_id, protected)) = routed.get(&(*venue, trade.taker_order_id)) {
                    let worse = match trade.taker_side {
                        Side::Buy => trade.price > protected,
                        Side::Sell => trade.price < protected,
                    };
                    if worse {
                        out.push(Violation {
                            property: Property::FairMarketAccess,
                            ts: r.ts,
                            agent: Some(index.agent_name(trade.maker_participant)),
                            venue: Some(index.venue_name(*venue)),
                            order_id: Some(trade.taker_order_id),
                            events: vec![id, route_id],
                            evidence: Evidence::TradeThrough {
                                order_id: trade.taker_order_id,
                                protected_price: protected,
                                price: trade.price,
                                qty: trade.qty,
                            },
                        });
                    }
                }
            }
            _ => {}
        }
    }
    out
}

/// Flags each agent, once, whose market-data staleness exceeds the threshold.
pub(crate) fn symmetric_information(index: &Index<'_>, trace: &Trace) -> Vec<Violation> {
    let threshold = index.config.monitors.staleness_threshold_us;
    let mut flagged = BTreeSet::new();
    let mut out = Vec::new();
    for (id, r) in trace.iter() {
        let TraceEvent::Staleness {
            agent, staleness_us, ..
        } = r.event
        else {
            continue;
        };
        if staleness_us > threshold && flagged.insert(agent) {
            out.push(Violation {
                property: Property::SymmetricInformation,
                ts: r.ts,
                agent: Some(index.agent_name(agent)),
                venue: None,
                order_id: None,
                events: vec![id],
                evidence: Evidence::Staleness {
                    staleness_us,
                    threshold_us: threshold,
                },
            });
        }
    }
    out
}
