//! Invariants of the matching engine under random inputs.

use std::collections::BTreeMap;

use marketsim_core::engine::{pro_rata, MatchingAlgo, OrderBook, Trade};
use marketsim_core::{
    DisplayClass, InstrumentId, Order, OrderId, OrderKind, ParticipantId, Price, Qty, Replenish, Side, SimTime,
    TimeInForce, VenueId,
};
use proptest::prelude::*;

fn order(id: u64, side: Side, kind: OrderKind, price: Option<u64>, qty: u64) -> Order {
    Order::new(
        OrderId(id),
        ParticipantId(1),
        VenueId(0),
        InstrumentId(0),
        side,
        kind,
        price.map(Price),
        Qty(qty),
    )
}

#[derive(Clone, Debug)]
struct Spec {
    buy: bool,
    kind: u8,
    price: u64,
    qty: u64,
    ioc: bool,
}

fn spec() -> impl Strategy<Value = Spec> {
    (any::<bool>(), 0u8..6, 95u64..=105, 1u64..600, prop::bool::weighted(0.1)).prop_map(
        |(buy, kind, price, qty, ioc)| Spec {
            buy,
            kind,
            price,
            qty,
            ioc,
        },
    )
}

fn build(id: u64, s: &Spec) -> Order {
    let side = if s.buy { Side::Buy } else { Side::Sell };
    let (kind, priced) = match s.kind {
        0 => (OrderKind::Market, false),
        1 => (OrderKind::Hidden, true),
        2 => (
            OrderKind::Reserve {
                display_size: Qty(100),
                replenish: Replenish::Random,
            },
            true,
        ),
        3 => (OrderKind::Discretionary { range: 2 }, true),
        _ => (OrderKind::Limit, true),
    };
    let tif = if s.ioc { TimeInForce::Ioc } else { TimeInForce::Day };
    order(id, side, kind, priced.then_some(s.price), s.qty).with_tif(tif)
}

proptest! {
    #[test]
    fn pro_rata_allocation_is_bounded_and_complete(
        incoming in 0u64..5_000,
        resting in prop::collection::vec(1u64..2_000, 1..12),
    ) {
        let sizes: Vec<Qty> = resting.iter().map(|&q| Qty(q)).collect();
        let alloc = pro_rata::allocate(Qty(incoming), &sizes);
        let total: u64 = resting.iter().sum();
        prop_assert_eq!(alloc.iter().map(|q| q.0).sum::<u64>(), incoming.min(total));
        for (a, &r) in alloc.iter().zip(&resting) {
            prop_assert!(a.0 <= r);
            if incoming < total {
                // Within one share of the exact proportional quota.
                let exact = incoming as u128 * r as u128;
                let scaled = a.0 as u128 * total as u128;
                prop_assert!(scaled.abs_diff(exact) < total as u128);
            }
        }
    }

    #[test]
    fn pro_rata_total_is_monotone_in_incoming(
        a in 0u64..3_000,
        b in 0u64..3_000,
        resting in prop::collection::vec(1u64..1_000, 1..10),
    ) {
        let sizes: Vec<Qty> = resting.iter().map(|&q| Qty(q)).collect();
        let (lo, hi) = (a.min(b), a.max(b));
        let sum = |q| pro_rata::allocate(Qty(q), &sizes).iter().map(|x| x.0).sum::<u64>();
        prop_assert!(sum(lo) <= sum(hi));
    }

    #[test]
    fn auction_volume_is_maximal_over_the_limit_span(
        orders in prop::collection::vec((any::<bool>(), prop::option::weighted(0.9, 90u64..=110), 1u64..500), 1..30),
        last in prop::option::of(85u64..=115),
    ) {
        let mut book = OrderBook::new(InstrumentId(0), MatchingAlgo::Fifo, Qty(100));
        book.set_last_trade_price(last.map(Price));
        for (i, (buy, price, qty)) in orders.iter().enumerate() {
            let side = if *buy { Side::Buy } else { Side::Sell };
            let kind = if price.is_some() { OrderKind::Limit } else { OrderKind::Market };
            book.accumulate(order(i as u64 + 1, side, kind, *price, *qty), SimTime(i as u64)).unwrap();
        }
        // Independent volume: demand at p is every buy willing to pay p, supply likewise.
        let volume = |p: u64| {
            let (mut d, mut s) = (0u64, 0u64);
            for (buy, price, qty) in &orders {
                match (buy, price) {
                    (true, None) => d += qty,
                    (true, Some(l)) if *l >= p => d += qty,
                    (false, None) => s += qty,
                    (false, Some(l)) if *l <= p => s += qty,
                    _ => {}
                }
            }
            d.min(s)
        };
        let limits: Vec<u64> = orders.iter().filter_map(|o| o.1).collect();
        let best = match (limits.iter().min(), limits.iter().max()) {
            (Some(&lo), Some(&hi)) => (lo..=hi).map(volume).max().unwrap_or(0),
            _ => 0,
        };
        match book.auction_price() {
            Some((p, v)) => {
                prop_assert_eq!(v.0, best);
                prop_assert_eq!(volume(p.0), best);
            }
            None => prop_assert_eq!(best, 0),
        }
        let before: u64 = book.orders().map(|o| o.open_qty.0).sum();
        let out = book.clear_batch_auction(SimTime(1_000));
        let traded: u64 = out.trades.iter().map(|t| t.qty.0).sum();
        prop_assert_eq!(traded, best);
        prop_assert!(out.trades.iter().all(|t| Some(t.price) == out.clearing_price));
        let after: u64 = book.orders().map(|o| o.open_qty.0).sum();
        prop_assert!(after + 2 * traded <= before);
        book.check_invariants().unwrap();
    }

    #[test]
    fn quantities_are_conserved(
        specs in prop::collection::vec(spec(), 1..80),
        cancels in prop::collection::vec(any::<prop::sample::Index>(), 0..20),
        pro_rata in any::<bool>(),
    ) {
        let algo = if pro_rata { MatchingAlgo::ProRata } else { MatchingAlgo::Fifo };
        let mut book = OrderBook::new(InstrumentId(0), algo, Qty(100)).with_seed(7);
        let mut submitted: BTreeMap<u64, u64> = BTreeMap::new();
        let mut accounted: BTreeMap<u64, u64> = BTreeMap::new();
        let mut trades: Vec<Trade> = Vec::new();
        for (i, s) in specs.iter().enumerate() {
            let id = i as u64 + 1;
            submitted.insert(id, s.qty);
            let out = book.insert_order(build(id, s), SimTime(i as u64)).unwrap();
            *accounted.entry(id).or_default() += out.expired_qty.0;
            trades.extend(out.trades);
        }
        let ids: Vec<OrderId> = book.orders().map(|o| o.id).collect();
        for ix in cancels {
            if ids.is_empty() {
                break;
            }
            if let Ok(o) = book.cancel_order(*ix.get(&ids), SimTime(10_000)) {
                *accounted.entry(o.id.0).or_default() += o.open_qty.0;
            }
        }
        for t in &trades {
            *accounted.entry(t.taker_order_id.0).or_default() += t.qty.0;
            *accounted.entry(t.maker_order_id.0).or_default() += t.qty.0;
        }
        for o in book.orders() {
            *accounted.entry(o.id.0).or_default() += o.open_qty.0;
            prop_assert!(o.displayed_qty <= o.open_qty);
        }
        for (id, qty) in &submitted {
            prop_assert_eq!(accounted.get(id).copied().unwrap_or(0), *qty, "order {}", id);
        }
        book.check_invariants().unwrap();
    }

    #[test]
    fn hidden_orders_trade_only_after_lit_at_the_same_price(
        specs in prop::collection::vec(spec(), 1..80),
        pro_rata in any::<bool>(),
    ) {
        let algo = if pro_rata { MatchingAlgo::ProRata } else { MatchingAlgo::Fifo };
        let mut book = OrderBook::new(InstrumentId(0), algo, Qty(100)).with_seed(3);
        for (i, s) in specs.iter().enumerate() {
            let hidden_before: BTreeMap<OrderId, DisplayClass> =
                book.orders().map(|o| (o.id, o.display_class())).collect();
            let out = book.insert_order(build(i as u64 + 1, s), SimTime(i as u64)).unwrap();
            for t in &out.trades {
                if hidden_before.get(&t.maker_order_id) != Some(&DisplayClass::Hidden) {
                    continue;
                }
                let maker_side = t.taker_side.opposite();
                let lit_left = book.orders().any(|o| {
                    o.side == maker_side
                        && o.limit_price == Some(t.price)
                        && o.display_class() == DisplayClass::Lit
                        && !o.displayed_qty.is_zero()
                });
                prop_assert!(!lit_left, "hidden order {:?} filled ahead of lit quantity at {:?}", t.maker_order_id, t.price);
            }
        }
    }
}
