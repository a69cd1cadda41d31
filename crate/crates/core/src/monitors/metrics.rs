//! Run metrics: per-agent accounting, venue feed counts, attack outcomes and
//! the bookkeeping invariants.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Evidence, Index, Property, Violation};
use crate::engine::BookEvent;
use crate::trace::{AgentRejectReason, FeedKind, Trace, TraceEvent};
use crate::types::{OrderId, ParticipantId, Qty, Side, SimTime, VenueId};
use crate::venue::OrderMessage;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StalenessStats {
    pub samples: u64,
    pub mean_us: f64,
    pub p50_us: u64,
    pub p99_us: u64,
    pub max_us: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentMetrics {
    pub strategy: String,
    pub messages: u64,
    pub orders: u64,
    pub cancels: u64,
    pub modifies: u64,
    pub rejected_order_types: u64,
    pub trades: u64,
    pub bought: u64,
    pub sold: u64,
    /// Orders and modifications per trade, with at least one trade in the denominator.
    pub order_to_trade: f64,
    pub cash: i64,
    pub inventory: i64,
    /// Cash plus inventory at the mark price.
    pub pnl: i64,
    pub staleness: Option<StalenessStats>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VenueMetrics {
    pub trades: u64,
    pub volume: u64,
    pub l1_published: u64,
    pub l2_published: u64,
    pub prints: u64,
    pub routed_out: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnonymityMetrics {
    pub anonymous_orders: u64,
    pub anonymous_submitters: u64,
    pub guesses: u64,
    pub abstentions: u64,
    pub correct: u64,
    /// Correct attributions over all anonymous orders.
    pub accuracy: f64,
    /// Correct attributions over attempted ones.
    pub precision: Option<f64>,
    pub chance_baseline: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfidentialityMetrics {
    pub hidden_orders: u64,
    pub beliefs: u64,
    pub correct_beliefs: u64,
    pub detected: u64,
    pub detection_rate: f64,
    pub mean_lead_time_us: Option<f64>,
    pub min_lead_time_us: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AttackMetrics {
    /// Value-signal changes after the initial value.
    pub signal_jumps: u64,
    /// Trades where an order sent after the latest jump hit one listed before
    /// it, at a price that gains against the new value.
    pub snipe_captures: u64,
    pub snipe_capture_qty: u64,
    /// Captures per signal jump.
    pub snipe_capture_rate: f64,
    pub snipe_captures_by_agent: BTreeMap<String, u64>,
    pub routed_orders: u64,
    /// Routed remainders filled worse than their protected price.
    pub trade_through_fills: u64,
    pub trade_through_qty: u64,
    /// Ticks times shares paid above the protected price.
    pub trade_through_cost: u64,
    pub rank_inversions: u64,
    pub rank_inversions_by_agent: BTreeMap<String, u64>,
    pub order_to_trade_flagged: Vec<String>,
    pub fingerprint: AnonymityMetrics,
    pub ping: ConfidentialityMetrics,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invariants {
    /// Shares bought equal shares sold across all executions.
    pub buy_sell_balanced: bool,
    /// No order executed more than it was sent with.
    pub fills_within_order_qty: bool,
    /// Sum of all agents' marked P&L; zero in a closed market without fees.
    pub pnl_sum: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub scenario: String,
    pub seed: u64,
    pub duration_us: u64,
    pub mark_price: Option<u64>,
    pub trades: u64,
    pub volume: u64,
    pub agents: BTreeMap<String, AgentMetrics>,
    pub venues: BTreeMap<String, VenueMetrics>,
    pub attacks: AttackMetrics,
    pub violations: BTreeMap<String, u64>,
    pub invariants: Invariants,
}

fn percentile(sorted: &[u64], pct: usize) -> u64 {
    sorted[(sorted.len() - 1) * pct / 100]
}

pub(crate) fn collect(
    index: &Index<'_>,
    trace: &Trace,
    fingerprint: AnonymityMetrics,
    ping: ConfidentialityMetrics,
    violations: &[Violation],
) -> Metrics {
    let config = index.config;
    let mut agents: Vec<AgentMetrics> = config
        .agents
        .iter()
        .map(|a| AgentMetrics {
            strategy: a.strategy.kind_name().into(),
            ..AgentMetrics::default()
        })
        .collect();
    let mut venues = alloc::vec![VenueMetrics::default(); config.venues.len()];
    let mut staleness: Vec<Vec<u64>> = alloc::vec![Vec::new(); config.agents.len()];
    let mut attacks = AttackMetrics {
        fingerprint,
        ping,
        ..AttackMetrics::default()
    };
    let mut executed: BTreeMap<OrderId, Qty> = BTreeMap::new();
    let (mut bought, mut sold) = (0u64, 0u64);
    let mut listed: BTreeMap<(VenueId, OrderId), SimTime> = BTreeMap::new();
    let mut value: Option<u64> = None;
    let mut last_jump = SimTime::ZERO;
    let mut last_trade = None;
    let (mut trades, mut volume) = (0u64, 0u64);
    let agent = |p: ParticipantId| p.0 as usize;

    for (_, r) in trace.iter() {
        match &r.event {
            TraceEvent::Sent { agent: p, msg, .. } => {
                let a = &mut agents[agent(*p)];
                a.messages += 1;
                match msg {
                    OrderMessage::New { .. } => a.orders += 1,
                    OrderMessage::Cancel { .. } => a.cancels += 1,
                    OrderMessage::Modify { .. } => a.modifies += 1,
                }
            }
            TraceEvent::AgentReject {
                agent: p,
                reason: AgentRejectReason::OrderTypeNotPermitted,
            } => agents[agent(*p)].rejected_order_types += 1,
            TraceEvent::Signal { value: v, .. } => {
                if value.is_some() {
                    attacks.signal_jumps += 1;
                }
                value = Some(*v);
                last_jump = r.ts;
            }
            TraceEvent::Staleness {
                agent: p, staleness_us, ..
            } => staleness[agent(*p)].push(*staleness_us),
            TraceEvent::Published { venue, feed, .. } => {
                let v = &mut venues[venue.0 as usize];
                match feed {
                    FeedKind::L1 => v.l1_published += 1,
                    FeedKind::L2 => v.l2_published += 1,
                    FeedKind::Print => v.prints += 1,
                }
            }
            TraceEvent::Routed { from, .. } => {
                venues[from.0 as usize].routed_out += 1;
                attacks.routed_orders += 1;
            }
            TraceEvent::Book { venue, event, .. } => match event {
                BookEvent::Rested { order_id, .. } => {
                    listed.entry((*venue, *order_id)).or_insert(r.ts);
                }
                BookEvent::Executed {
                    maker_order_id,
                    taker_order_id,
                    qty,
                    ..
                } => {
                    for id in [maker_order_id, taker_order_id] {
                        *executed.entry(*id).or_default() += *qty;
                        match index.orders.get(id).map(|o| o.side) {
                            Some(Side::Buy) => bought += qty.0,
                            Some(Side::Sell) => sold += qty.0,
                            None => {}
                        }
                    }
                }
                _ => {}
            },
            TraceEvent::Trade { venue, trade } => {
                trades += 1;
                volume += trade.qty.0;
                last_trade = Some(trade.price.0);
                let v = &mut venues[venue.0 as usize];
                v.trades += 1;
                v.volume += trade.qty.0;
                let notional = (trade.price.0 * trade.qty.0) as i64;
                let (_, buyer) = trade.buyer();
                let (_, seller) = trade.seller();
                for (p, sign) in [(buyer, 1i64), (seller, -1i64)] {
                    let a = &mut agents[agent(p)];
                    a.cash -= sign * notional;
                    a.inventory += sign * trade.qty.0 as i64;
                    if sign > 0 {
                        a.bought += trade.qty.0;
                    } else {
                        a.sold += trade.qty.0;
                    }
                }
                agents[agent(buyer)].trades += 1;
                if seller != buyer {
                    agents[agent(seller)].trades += 1;
                }
                if let Some(v) = value {
                    let taker_gains = match trade.taker_side {
                        Side::Buy => trade.price.0 < v,
                        Side::Sell => trade.price.0 > v,
                    };
                    let stale = listed
                        .get(&(*venue, trade.maker_order_id))
                        .is_some_and(|&t| t < last_jump);
                    let reacted = index
                        .orders
                        .get(&trade.taker_order_id)
                        .is_some_and(|o| o.sent_ts >= last_jump);
                    if trade.aggressor_side.is_some() && taker_gains && stale && reacted {
                        attacks.snipe_captures += 1;
                        attacks.snipe_capture_qty += trade.qty.0;
                        *attacks
                            .snipe_captures_by_agent
                            .entry(index.agent_name(trade.taker_participant))
                            .or_default() += 1;
                    }
                }
            }
            _ => {}
        }
    }

    let mark = value.or(config.mark_price).or(last_trade);
    for (i, a) in agents.iter_mut().enumerate() {
        a.pnl = a.cash + a.inventory * mark.unwrap_or(0) as i64;
        a.order_to_trade = (a.orders + a.modifies) as f64 / a.trades.max(1) as f64;
        let s = &mut staleness[i];
        if !s.is_empty() {
            s.sort_unstable();
            a.staleness = Some(StalenessStats {
                samples: s.len() as u64,
                mean_us: s.iter().sum::<u64>() as f64 / s.len() as f64,
                p50_us: percentile(s, 50),
                p99_us: percentile(s, 99),
                max_us: *s.last().expect("non-empty"),
            });
        }
    }
    if attacks.signal_jumps > 0 {
        attacks.snipe_capture_rate = attacks.snipe_captures as f64 / attacks.signal_jumps as f64;
    }

    let mut by_property: BTreeMap<String, u64> = Property::ALL.iter().map(|p| (p.as_str().into(), 0)).collect();
    for v in violations {
        *by_property.entry(v.property.as_str().into()).or_default() += 1;
        match &v.evidence {
            Evidence::RankInversion { .. } => {
                attacks.rank_inversions += 1;
                if let Some(a) = &v.agent {
                    *attacks.rank_inversions_by_agent.entry(a.clone()).or_default() += 1;
                }
            }
            Evidence::TradeThrough {
                protected_price,
                price,
                qty,
                ..
            } => {
                attacks.trade_through_fills += 1;
                attacks.trade_through_qty += qty.0;
                attacks.trade_through_cost += price.0.abs_diff(protected_price.0) * qty.0;
            }
            Evidence::OrderToTrade { .. } => attacks.order_to_trade_flagged.extend(v.agent.clone()),
            _ => {}
        }
    }

    let fills_within_order_qty = executed
        .iter()
        .all(|(id, q)| index.orders.get(id).is_some_and(|o| *q <= o.total));
    Metrics {
        scenario: config.name.clone(),
        seed: config.seed,
        duration_us: config.duration_us,
        mark_price: mark,
        trades,
        volume,
        invariants: Invariants {
            buy_sell_balanced: bought == sold,
            fills_within_order_qty,
            pnl_sum: agents.iter().map(|a| a.pnl).sum(),
        },
        agents: config.agents.iter().map(|a| a.name.clone()).zip(agents).collect(),
        venues: config.venues.iter().map(|v| v.name.clone()).zip(venues).collect(),
        attacks,
        violations: by_property,
    }
}
