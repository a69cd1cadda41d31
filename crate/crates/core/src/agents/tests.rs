use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::engine::{DepthLevel, OrderView, Quote};
use crate::order::TimeInForce;
use crate::scenario::{MonitorConfig, SipConfig};
use crate::simnet::LinkSpec;
use crate::venue::{ExecutionReport, Liquidity, VenueConfig};

fn scenario(agents: Vec<StrategyConfig>) -> ScenarioConfig {
    ScenarioConfig {
        name: String::new(),
        duration_us: 1_000_000,
        seed: 1,
        instruments: vec!["XYZ".into()],
        venues: vec![VenueConfig::new("E1"), VenueConfig::new("E2")],
        sip: SipConfig::default(),
        default_link: LinkSpec::default(),
        links: Vec::new(),
        agents: agents
            .into_iter()
            .enumerate()
            .map(|(i, strategy)| crate::scenario::AgentConfig {
                name: alloc::format!("a{i}"),
                instrument: None,
                link: None,
                feeds: Vec::new(),
                sip: false,
                processing_rate: 0,
                knows_hide_and_light: false,
                knows_day_iso: false,
                signal_latency_us: 0,
                strategy,
            })
            .collect(),
        signal: None,
        monitors: MonitorConfig::default(),
        mark_price: None,
    }
}

const ME: ParticipantId = ParticipantId(7);
const E1: VenueId = VenueId(0);
const E2: VenueId = VenueId(1);
const XYZ: InstrumentId = InstrumentId(0);

struct Harness {
    strategy: Box<dyn Strategy>,
    view: MarketView,
    knowledge: Knowledge,
    next_id: u64,
}

impl Harness {
    fn new(config: StrategyConfig) -> Harness {
        let sc = scenario(vec![config.clone()]);
        config.validate(&sc).expect("valid strategy");
        Harness {
            strategy: config.build(&sc, Substream::new(1, 0)),
            view: MarketView::default(),
            knowledge: Knowledge::default(),
            next_id: 1,
        }
    }

    fn step(&mut self, now: u64, input: Input<'_>) -> Vec<Action> {
        if let Input::Market(md) = input {
            self.view.apply(md);
        }
        let mut ctx = Ctx::new(SimTime(now), ME, XYZ, &self.view, self.knowledge, &mut self.next_id);
        self.strategy.on(&mut ctx, input);
        ctx.into_actions()
    }
}

fn sent(actions: &[Action]) -> Vec<(VenueId, &OrderMessage)> {
    actions
        .iter()
        .filter_map(|a| match a {
            Action::Send { venue, msg } => Some((*venue, msg)),
            _ => None,
        })
        .collect()
}

fn new_order(msg: &OrderMessage) -> &Order {
    match msg {
        OrderMessage::New { order, .. } => order,
        other => panic!("expected a new order, got {other:?}"),
    }
}

fn fill(order_id: OrderId, venue: VenueId, side: Side, price: u64, qty: u64, leaves: u64) -> Report {
    Report::Fill(ExecutionReport {
        order_id,
        venue,
        instrument: XYZ,
        side,
        qty: Qty(qty),
        price: Price(price),
        leaves_qty: Qty(leaves),
        ts: SimTime(0),
        liquidity: Liquidity::Taker,
        routed_to: None,
    })
}

fn l1(venue: VenueId, bid: Option<(u64, u64)>, ask: Option<(u64, u64)>) -> MarketData {
    let q = |x: Option<(u64, u64)>| {
        x.map(|(p, s)| Quote {
            price: Price(p),
            qty: Qty(s),
        })
    };
    MarketData::L1 {
        venue,
        instrument: XYZ,
        venue_ts: SimTime(0),
        view: L1View {
            bid: q(bid),
            ask: q(ask),
        },
    }
}

fn l2(venue: VenueId, bids: Vec<DepthLevel>) -> MarketData {
    MarketData::L2 {
        venue,
        instrument: XYZ,
        venue_ts: SimTime(0),
        view: L2View { bids, asks: Vec::new() },
    }
}

fn level(price: u64, orders: Vec<(u64, u32, u64, u64)>) -> DepthLevel {
    let orders: Vec<OrderView> = orders
        .into_iter()
        .map(|(id, p, listed, claimed)| OrderView {
            order_id: OrderId(id),
            participant: ParticipantId(p),
            qty: Qty(100),
            listed_ts: SimTime(listed),
            claimed_submit_ts: SimTime(claimed),
        })
        .collect();
    DepthLevel {
        price: Price(price),
        qty: Qty(100 * orders.len() as u64),
        orders,
    }
}

#[test]
fn knowledge_gates_special_order_types() {
    let view = MarketView::default();
    let mut next = 1;
    let mut ctx = Ctx::new(SimTime(5), ME, XYZ, &view, Knowledge::default(), &mut next);
    let o = ctx.order(E1, Side::Buy, OrderKind::DayIso, Some(Price(100)), Qty(100));
    assert_eq!(o.claimed_submit_ts, SimTime(5));
    assert_eq!(ctx.submit(o, false), None);
    let o = ctx.order(E1, Side::Buy, OrderKind::Limit, Some(Price(100)), Qty(100));
    assert_eq!(ctx.submit(o, false), Some(OrderId(2)));
    let actions = ctx.into_actions();
    assert_eq!(actions[0], Action::NotPermitted);
    assert!(matches!(actions[1], Action::Send { venue: E1, .. }));
    assert_eq!(next, 3);
}

#[test]
fn scripted_steps_fire_on_time_and_on_quote() {
    let config = StrategyConfig::Scripted(ScriptedConfig {
        actions: vec![
            ScriptStep {
                at_us: Some(1_000),
                when: None,
                action: ScriptAction::New {
                    label: Some("a".into()),
                    venue: "E1".into(),
                    side: Side::Sell,
                    kind: OrderKind::Limit,
                    price: Some(101),
                    qty: 100,
                    tif: TimeInForce::Day,
                    anonymous: false,
                    route: false,
                },
            },
            ScriptStep {
                at_us: None,
                when: Some(QuoteTrigger {
                    venue: "E2".into(),
                    side: Side::Buy,
                    at_or_better: 101,
                }),
                action: ScriptAction::Cancel { label: "a".into() },
            },
        ],
    });
    let mut h = Harness::new(config);
    assert_eq!(
        h.step(0, Input::Start),
        vec![Action::Timer {
            at: SimTime(1_000),
            tag: 0
        }]
    );
    let out = h.step(1_000, Input::Timer(0));
    assert_eq!(new_order(sent(&out)[0].1).limit_price, Some(Price(101)));
    assert!(h.step(1_500, Input::Market(&l1(E2, Some((100, 100)), None))).is_empty());
    let out = h.step(2_000, Input::Market(&l1(E2, Some((101, 100)), None)));
    assert!(matches!(
        sent(&out)[..],
        [(
            E1,
            OrderMessage::Cancel {
                order_id: OrderId(1),
                ..
            }
        )]
    ));
    // Fires once.
    assert!(h.step(2_100, Input::Market(&l1(E2, Some((102, 100)), None))).is_empty());
}

#[test]
fn scripted_rejects_unknown_labels_and_missing_trigger() {
    let step = |at_us, action| ScriptStep {
        at_us,
        when: None,
        action,
    };
    let sc = scenario(Vec::new());
    let c = ScriptedConfig {
        actions: vec![step(Some(1), ScriptAction::Cancel { label: "x".into() })],
    };
    assert_eq!(c.validate(&Names(&sc)).unwrap_err().path, "actions[0].action.label");
    let c = ScriptedConfig {
        actions: vec![step(None, ScriptAction::Cancel { label: "x".into() })],
    };
    assert_eq!(c.validate(&Names(&sc)).unwrap_err().path, "actions[0]");
}

#[test]
fn maker_requotes_around_new_value() {
    let mut h = Harness::new(StrategyConfig::Maker(MakerConfig {
        venues: vec!["E1".into()],
        half_spread: 1,
        size: 500,
        value: Some(100),
        requote_on_fill: true,
    }));
    let out = h.step(0, Input::Start);
    let prices: Vec<_> = sent(&out).iter().map(|(_, m)| new_order(m).limit_price).collect();
    assert_eq!(prices, vec![Some(Price(99)), Some(Price(101))]);

    assert!(h.step(10, Input::Signal(100)).is_empty());
    let out = h.step(20, Input::Signal(103));
    let msgs = sent(&out);
    assert_eq!(msgs.len(), 4);
    assert!(msgs[..2].iter().all(|(_, m)| matches!(m, OrderMessage::Cancel { .. })));
    assert_eq!(new_order(msgs[2].1).limit_price, Some(Price(102)));
    assert_eq!(new_order(msgs[3].1).limit_price, Some(Price(104)));

    // Full fill of the new ask (id 4) puts a fresh one up.
    let out = h.step(30, Input::Report(&fill(OrderId(4), E1, Side::Sell, 104, 500, 0)));
    assert_eq!(new_order(sent(&out)[0].1).id, OrderId(5));
    // Fills on stale ids do nothing.
    assert!(h
        .step(40, Input::Report(&fill(OrderId(1), E1, Side::Buy, 99, 500, 0)))
        .is_empty());
}

#[test]
fn periodic_alternates_and_cancels() {
    let mut h = Harness::new(StrategyConfig::Periodic(PeriodicConfig {
        venues: vec!["E1".into(), "E2".into()],
        side: SidePolicy::Alternate,
        price: Some(100),
        offset_ticks: 2,
        aggressive: false,
        qty: 100,
        interval_us: 1_000,
        start_us: 0,
        count: 3,
        anonymous: true,
        labeled: 1,
        cancel_after_us: Some(500),
    }));
    h.step(0, Input::Start);
    let mut orders = Vec::new();
    for t in 0..4 {
        let out = h.step(t * 1_000, Input::Timer(0));
        orders.extend(sent(&out).into_iter().map(|(v, m)| (v, new_order(m).clone())));
    }
    assert_eq!(orders.len(), 3);
    let summary: Vec<_> = orders
        .iter()
        .map(|(v, o)| (*v, o.side, o.limit_price.unwrap().0, o.anonymous))
        .collect();
    assert_eq!(
        summary,
        vec![
            (E1, Side::Buy, 98, false),
            (E2, Side::Sell, 102, true),
            (E1, Side::Buy, 98, true)
        ]
    );
    let out = h.step(3_500, Input::Timer(1));
    assert!(matches!(
        sent(&out)[..],
        [(
            E1,
            OrderMessage::Cancel {
                order_id: OrderId(1),
                ..
            }
        )]
    ));
}

#[test]
fn broker_picks_best_price_then_size() {
    let mut h = Harness::new(StrategyConfig::Broker(BrokerConfig {
        venues: vec!["E1".into(), "E2".into()],
        side: Side::Buy,
        qty: 1_000,
        limit: 102,
        start_us: 0,
        route: true,
    }));
    h.step(0, Input::Market(&l1(E1, None, Some((101, 100)))));
    h.step(0, Input::Market(&l1(E2, None, Some((101, 500)))));
    let out = h.step(0, Input::Timer(0));
    let msgs = sent(&out);
    assert_eq!(msgs[0].0, E2);
    assert!(matches!(msgs[0].1, OrderMessage::New { route: true, .. }));
}

#[test]
fn fingerprinter_attributes_unique_match_and_abstains_otherwise() {
    let mut h = Harness::new(StrategyConfig::Fingerprinter(FingerprinterConfig {
        venue: "E1".into(),
        epsilon_us: 50,
    }));
    // Broker 1 shows a 500us gap, broker 2 a 900us gap.
    let train = l2(E1, vec![level(100, vec![(1, 1, 1_500, 1_000), (2, 2, 1_900, 1_000)])]);
    assert!(h.step(0, Input::Market(&train)).is_empty());
    let g = ParticipantId::GENERIC.0;
    let probe = l2(
        E1,
        vec![level(
            100,
            vec![
                (1, 1, 1_500, 1_000),
                (3, g, 2_520, 2_000),
                (4, g, 2_700, 2_000),
                (5, g, 2_880, 2_000),
            ],
        )],
    );
    let out = h.step(0, Input::Market(&probe));
    assert_eq!(
        out,
        vec![
            Action::Guess {
                order_id: OrderId(3),
                guess: Some(ParticipantId(1))
            },
            Action::Guess {
                order_id: OrderId(4),
                guess: None
            },
            Action::Guess {
                order_id: OrderId(5),
                guess: Some(ParticipantId(2))
            },
        ]
    );
    // Already-seen orders are not guessed twice.
    assert!(h.step(0, Input::Market(&probe)).is_empty());
}

#[test]
fn pinger_believes_after_more_fills_than_displayed() {
    let mut h = Harness::new(StrategyConfig::Pinger(PingerConfig {
        venue: "E1".into(),
        side: Side::Sell,
        qty: 100,
        interval_us: 10_000,
        max_probes: 2,
        enabled: true,
        band_ticks: 0,
    }));
    let out = h.step(5, Input::Market(&l2(E1, vec![level(100, vec![(9, 1, 0, 0)])])));
    assert_eq!(out, vec![Action::Timer { at: SimTime(5), tag: 0 }]);
    let out = h.step(5, Input::Timer(0));
    let o = new_order(sent(&out)[0].1).clone();
    assert_eq!(
        (o.side, o.limit_price, o.tif),
        (Side::Sell, Some(Price(100)), TimeInForce::Ioc)
    );
    assert!(h
        .step(50, Input::Report(&fill(o.id, E1, Side::Sell, 100, 100, 0)))
        .is_empty());
    let out = h.step(10_050, Input::Report(&fill(OrderId(2), E1, Side::Sell, 100, 100, 0)));
    assert_eq!(
        out,
        vec![Action::Belief {
            venue: E1,
            side: Side::Buy,
            price: Price(100)
        }]
    );
    h.step(10_005, Input::Timer(0));
    assert!(sent(&h.step(20_005, Input::Timer(0))).is_empty(), "probe budget spent");
}

#[test]
fn stuffer_alternates_new_and_cancel_at_rate() {
    let mut h = Harness::new(StrategyConfig::Stuffer(StufferConfig {
        venue: "E1".into(),
        side: Side::Buy,
        price: 95,
        qty: 100,
        start_us: 1_000,
        duration_us: 200,
        rate_per_ms: 25,
    }));
    let mut t = 1_000;
    let mut kinds = Vec::new();
    loop {
        let out = h.step(t, Input::Timer(0));
        kinds.extend(sent(&out).iter().map(|(_, m)| m.kind_name()));
        match out.iter().find_map(|a| match a {
            Action::Timer { at, .. } => Some(at.0),
            _ => None,
        }) {
            Some(next) => {
                assert_eq!(next - t, 40);
                t = next;
            }
            None => break,
        }
    }
    assert_eq!(kinds, vec!["new", "cancel", "new", "cancel", "new", "cancel"]);
}

#[test]
fn sniper_hits_stale_quotes_and_exits() {
    let mut h = Harness::new(StrategyConfig::Sniper(SniperConfig {
        venues: vec!["E1".into()],
        size: 300,
        exit: true,
    }));
    h.step(0, Input::Signal(100));
    h.step(0, Input::Market(&l1(E1, Some((99, 300)), Some((101, 300)))));
    let out = h.step(10, Input::Signal(103));
    let o = new_order(sent(&out)[0].1).clone();
    assert_eq!(
        (o.side, o.limit_price, o.tif, o.open_qty),
        (Side::Buy, Some(Price(101)), TimeInForce::Ioc, Qty(300))
    );
    let out = h.step(20, Input::Report(&fill(o.id, E1, Side::Buy, 101, 300, 0)));
    let exit = new_order(sent(&out)[0].1);
    assert_eq!((exit.side, exit.limit_price), (Side::Sell, Some(Price(102))));
    // A small jump that leaves quotes fair is ignored.
    h.step(30, Input::Market(&l1(E1, Some((102, 300)), Some((104, 300)))));
    assert!(h.step(40, Input::Signal(104)).is_empty());
}

#[test]
fn scalper_sweeps_target_after_ping_fill_then_offers_up() {
    let mut h = Harness::new(StrategyConfig::Scalper(ScalperConfig {
        ping_venue: "E1".into(),
        target_venue: "E2".into(),
        price: 100,
        ping_qty: 100,
        target_qty: 40_000,
        markup: 1,
        start_us: 0,
    }));
    h.step(0, Input::Start);
    let out = h.step(0, Input::Timer(0));
    assert_eq!(sent(&out)[0].0, E1);
    let out = h.step(10, Input::Report(&fill(OrderId(1), E1, Side::Sell, 100, 100, 0)));
    let sweep = new_order(sent(&out)[0].1).clone();
    assert_eq!((sweep.venue, sweep.side, sweep.tif), (E2, Side::Buy, TimeInForce::Ioc));
    assert!(h
        .step(20, Input::Report(&fill(sweep.id, E2, Side::Buy, 100, 30_000, 10_000)))
        .is_empty());
    let expired = Report::Expired {
        order_id: sweep.id,
        venue: E2,
        qty: Qty(10_000),
        ts: SimTime(20),
    };
    let out = h.step(20, Input::Report(&expired));
    let offer = new_order(sent(&out)[0].1);
    assert_eq!(
        (offer.venue, offer.side, offer.limit_price, offer.open_qty),
        (E2, Side::Sell, Some(Price(101)), Qty(30_000))
    );
}

#[test]
fn strategy_errors_carry_relative_paths() {
    let sc = scenario(Vec::new());
    let bad = StrategyConfig::Maker(MakerConfig {
        venues: vec!["E1".into(), "NOPE".into()],
        half_spread: 1,
        size: 100,
        value: Some(100),
        requote_on_fill: true,
    });
    assert_eq!(bad.validate(&sc).unwrap_err().path, "venues[1]");
}
