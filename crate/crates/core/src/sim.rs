//! The run loop: wires venues, the aggregator, agents and the value signal
//! through the scheduler and records everything in a [`Trace`].

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::agents::{Action, Ctx, Input, Knowledge, MarketView, Strategy};
use crate::engine::L1View;
use crate::rng::{stream_id, StreamTag, Substream};
use crate::scenario::{ConfigError, FeedLevel, ScenarioConfig};
use crate::simnet::{ConsumerModel, Endpoint, Link, LinkSpec, NbboQuote, Scheduler, Sip};
use crate::trace::{AgentRejectReason, FeedKind, Trace, TraceEvent};
use crate::types::{InstrumentId, ParticipantId, SimTime, VenueId};
use crate::venue::{MarketData, OrderMessage, Report, Venue, VenueOutput, VenueTimer};

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Keep one line per processed event in [`RunOutput::event_log`].
    pub event_log: bool,
}

#[derive(Debug)]
pub struct RunOutput {
    pub trace: Trace,
    /// `deliver_at \t seq \t src \t dst \t summary` per processed event, if requested.
    pub event_log: Vec<String>,
    pub events_processed: u64,
}

#[derive(Clone, Debug)]
enum Payload {
    Start,
    /// An order message reaching a venue's gateway, before any speed bump.
    Gateway {
        msg: OrderMessage,
        routed: bool,
    },
    /// The same message once it reaches the matching engine.
    Engine {
        msg: OrderMessage,
        routed: bool,
    },
    Report(Report),
    /// Market data arriving at an agent's feed handler.
    Data(MarketData),
    /// Market data once the feed handler has worked through it.
    Process(MarketData),
    SipL1 {
        instrument: InstrumentId,
        l1: L1View,
    },
    Nbbo(NbboQuote),
    VenueTimer(VenueTimer),
    AgentTimer(u64),
    /// A value change delivered to an agent.
    Signal(u64),
    /// A value change at its source.
    Jump(u64),
    Sample,
}

impl Payload {
    fn summary(&self) -> String {
        match self {
            Payload::Start => "start".into(),
            Payload::Gateway { msg, routed } | Payload::Engine { msg, routed } => {
                let stage = if matches!(self, Payload::Gateway { .. }) {
                    "gateway"
                } else {
                    "engine"
                };
                format!("{stage} {} order={} routed={routed}", msg.kind_name(), msg.order_id().0)
            }
            Payload::Report(r) => format!("report order={}", r.order_id().0),
            Payload::Data(md) => format!("data {}", md.kind_name()),
            Payload::Process(md) => format!("process {}", md.kind_name()),
            Payload::SipL1 { instrument, .. } => format!("sip_l1 instrument={}", instrument.0),
            Payload::Nbbo(q) => format!("nbbo instrument={}", q.instrument.0),
            Payload::VenueTimer(t) => format!("venue_timer {t:?}"),
            Payload::AgentTimer(tag) => format!("agent_timer tag={tag}"),
            Payload::Signal(v) => format!("signal value={v}"),
            Payload::Jump(v) => format!("jump value={v}"),
            Payload::Sample => "sample".into(),
        }
    }
}

fn endpoint_name(e: Endpoint) -> String {
    match e {
        Endpoint::Venue(v) => format!("venue:{}", v.0),
        Endpoint::Agent(a) => format!("agent:{}", a.0),
        Endpoint::Sip => "sip".into(),
        Endpoint::Signal => "signal".into(),
        Endpoint::Clock => "clock".into(),
    }
}

struct Agent {
    id: ParticipantId,
    instrument: InstrumentId,
    strategy: Box<dyn Strategy>,
    knowledge: Knowledge,
    view: MarketView,
    consumer: ConsumerModel,
    has_market_data: bool,
    signal_latency_us: u64,
}

struct Sim<'a> {
    config: &'a ScenarioConfig,
    sched: Scheduler<Payload>,
    venues: Vec<Venue>,
    agents: Vec<Agent>,
    sip: Sip,
    links: BTreeMap<(Endpoint, Endpoint), Link>,
    /// Per venue: subscribers to its direct L1 and L2 feeds.
    subscribers: Vec<(Vec<ParticipantId>, Vec<ParticipantId>)>,
    sip_subscribers: Vec<ParticipantId>,
    signal_instrument: InstrumentId,
    next_order_id: u64,
    trace: Trace,
    end: SimTime,
}

/// Runs a scenario to completion.
pub fn run(config: &ScenarioConfig, options: RunOptions) -> Result<RunOutput, ConfigError> {
    config.validate()?;
    let mut sim = Sim::new(config);
    sim.prime();
    let mut log = Vec::new();
    while let Some(ev) = sim.sched.pop_until(sim.end) {
        if options.event_log {
            log.push(format!(
                "{}\t{}\t{}\t{}\t{}",
                ev.deliver_at.0,
                ev.seq,
                endpoint_name(ev.src),
                endpoint_name(ev.dst),
                ev.payload.summary()
            ));
        }
        sim.dispatch(ev.src, ev.dst, ev.payload);
    }
    Ok(RunOutput {
        events_processed: sim.sched.processed(),
        trace: sim.trace,
        event_log: log,
    })
}

/// Jump times and values of the value signal, in time order, starting with the initial value at zero.
pub fn signal_path(config: &ScenarioConfig) -> Vec<(SimTime, u64)> {
    let Some(s) = &config.signal else { return Vec::new() };
    // Explicit jumps set the value; seeded ones move it by `size_ticks`.
    let mut moves: Vec<(u64, u8, i64)> = s.jumps.iter().map(|j| (j.at_us, 0, j.value as i64)).collect();
    if let Some(r) = &s.random {
        let mut rng = Substream::new(config.seed, stream_id(StreamTag::Signal, 0));
        for i in 0..r.count {
            let base = r.first_us + i * r.interval_us;
            let at = base.saturating_add_signed(rng.symmetric(r.jitter_us));
            let step = if rng.chance(1, 2) {
                r.size_ticks as i64
            } else {
                -(r.size_ticks as i64)
            };
            moves.push((at, 1, step));
        }
    }
    moves.sort_by_key(|m| (m.0, m.1));
    let mut value = s.initial;
    let mut path = alloc::vec![(SimTime::ZERO, value)];
    for (at, relative, x) in moves {
        if at > config.duration_us {
            continue;
        }
        value = if relative == 1 {
            // A move that would take the value to zero goes the other way.
            match value.checked_add_signed(x) {
                Some(v) if v > 0 => v,
                _ => value + x.unsigned_abs(),
            }
        } else {
            x as u64
        };
        path.push((SimTime(at), value));
    }
    path
}

impl<'a> Sim<'a> {
    fn new(config: &'a ScenarioConfig) -> Sim<'a> {
        let instruments: Vec<InstrumentId> = (0..config.instruments.len()).map(|i| InstrumentId(i as u32)).collect();
        let venues: Vec<Venue> = config
            .venues
            .iter()
            .enumerate()
            .map(|(i, v)| Venue::new(VenueId(i as u32), v.clone(), &instruments, config.seed))
            .collect();
        let mut subscribers = alloc::vec![(Vec::new(), Vec::new()); venues.len()];
        let mut sip_subscribers = Vec::new();
        let agents = config
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let id = ParticipantId(i as u32);
                for f in &a.feeds {
                    let v = config.venue_id(&f.venue).expect("validated feed venue");
                    let subs: &mut (Vec<_>, Vec<_>) = &mut subscribers[v.0 as usize];
                    match f.level {
                        FeedLevel::L1 => subs.0.push(id),
                        FeedLevel::L2 => subs.1.push(id),
                    }
                }
                if a.sip {
                    sip_subscribers.push(id);
                }
                let rng = Substream::for_entity(config.seed, StreamTag::Agent, i as u64);
                Agent {
                    id,
                    instrument: a
                        .instrument
                        .as_deref()
                        .and_then(|n| config.instrument_id(n))
                        .unwrap_or(InstrumentId(0)),
                    strategy: a.strategy.build(config, rng),
                    knowledge: Knowledge {
                        hide_and_light: a.knows_hide_and_light,
                        day_iso: a.knows_day_iso,
                    },
                    view: MarketView::default(),
                    consumer: ConsumerModel::new(a.processing_rate),
                    has_market_data: a.has_market_data(),
                    signal_latency_us: a.signal_latency_us,
                }
            })
            .collect();
        Sim {
            config,
            sched: Scheduler::new(),
            venues,
            agents,
            sip: Sip::new(config.sip.latency_us),
            links: BTreeMap::new(),
            subscribers,
            sip_subscribers,
            signal_instrument: config.signal_instrument(),
            next_order_id: 1,
            trace: Trace::default(),
            end: SimTime(config.duration_us),
        }
    }

    fn at(&mut self, t: SimTime, src: Endpoint, dst: Endpoint, payload: Payload) {
        self.sched
            .schedule(t, src, dst, payload)
            .expect("events are never scheduled in the past");
    }

    fn prime(&mut self) {
        for i in 0..self.agents.len() {
            let a = Endpoint::Agent(ParticipantId(i as u32));
            self.at(SimTime::ZERO, Endpoint::Clock, a, Payload::Start);
        }
        for (at, value) in signal_path(self.config) {
            self.at(at, Endpoint::Signal, Endpoint::Signal, Payload::Jump(value));
        }
        for i in 0..self.venues.len() {
            let v = Endpoint::Venue(VenueId(i as u32));
            for (timer, period) in self.venues[i].timers() {
                self.at(SimTime(period), Endpoint::Clock, v, Payload::VenueTimer(timer));
            }
        }
        let sample = self.config.monitors.staleness_sample_us;
        if self.agents.iter().any(|a| a.has_market_data) {
            self.at(SimTime(sample), Endpoint::Clock, Endpoint::Clock, Payload::Sample);
        }
    }

    fn link_spec(&self, a: Endpoint, b: Endpoint) -> LinkSpec {
        for l in &self.config.links {
            let (Ok(x), Ok(y)) = (self.config.endpoint(&l.a), self.config.endpoint(&l.b)) else {
                continue;
            };
            if (x, y) == (a, b) || (y, x) == (a, b) {
                return l.spec();
            }
        }
        for e in [a, b] {
            if let Endpoint::Agent(p) = e {
                if let Some(link) = self.config.agents[p.0 as usize].link {
                    return link.spec();
                }
            }
        }
        self.config.default_link
    }

    fn link(&mut self, a: Endpoint, b: Endpoint) -> &mut Link {
        let key = if a <= b { (a, b) } else { (b, a) };
        if !self.links.contains_key(&key) {
            let link = Link::new(self.link_spec(a, b), self.config.seed, a, b);
            self.links.insert(key, link);
        }
        self.links.get_mut(&key).expect("inserted above")
    }

    fn delay(&mut self, a: Endpoint, b: Endpoint) -> u64 {
        self.link(a, b).delay()
    }

    fn dispatch(&mut self, src: Endpoint, dst: Endpoint, payload: Payload) {
        let now = self.sched.now();
        match (dst, payload) {
            (Endpoint::Agent(p), Payload::Start) => self.agent_input(p, Input::Start),
            (Endpoint::Agent(p), Payload::AgentTimer(tag)) => self.agent_input(p, Input::Timer(tag)),
            (Endpoint::Agent(p), Payload::Signal(v)) => self.agent_input(p, Input::Signal(v)),
            (Endpoint::Agent(p), Payload::Report(r)) => self.agent_input(p, Input::Report(&r)),
            (Endpoint::Agent(p), Payload::Data(md)) => {
                let done = self.agents[p.0 as usize].consumer.ingest(now, md.venue_ts());
                if done == now {
                    self.process(p, md);
                } else {
                    self.at(done, Endpoint::Clock, dst, Payload::Process(md));
                }
            }
            (Endpoint::Agent(p), Payload::Process(md)) => self.process(p, md),
            (Endpoint::Venue(v), Payload::Gateway { msg, routed }) => {
                let t = self.venues[v.0 as usize].effective_time(&msg, routed, now);
                self.at(t, src, dst, Payload::Engine { msg, routed });
            }
            (Endpoint::Venue(v), Payload::Engine { msg, routed }) => {
                let outs = self.venues[v.0 as usize].handle(msg, routed, now);
                self.venue_outputs(v, outs);
            }
            (Endpoint::Venue(v), Payload::Nbbo(q)) => {
                let outs = self.venues[v.0 as usize].on_nbbo(q, now);
                self.venue_outputs(v, outs);
            }
            (Endpoint::Venue(v), Payload::VenueTimer(timer)) => {
                let outs = self.venues[v.0 as usize].on_timer(timer, now);
                self.venue_outputs(v, outs);
                let period = self.venues[v.0 as usize]
                    .timers()
                    .into_iter()
                    .find(|(t, _)| *t == timer)
                    .map(|(_, p)| p);
                if let Some(p) = period {
                    self.at(now + p, Endpoint::Clock, dst, Payload::VenueTimer(timer));
                }
            }
            (Endpoint::Sip, Payload::SipL1 { instrument, l1 }) => {
                let Endpoint::Venue(v) = src else { return };
                let quote = self.sip.on_l1(instrument, v, l1, now);
                let out = now + self.sip.latency_us;
                for i in 0..self.venues.len() {
                    let to = Endpoint::Venue(VenueId(i as u32));
                    let t = out + self.delay(Endpoint::Sip, to);
                    self.at(t, Endpoint::Sip, to, Payload::Nbbo(quote.clone()));
                }
                for p in self.sip_subscribers.clone() {
                    if self.agents[p.0 as usize].instrument != instrument {
                        continue;
                    }
                    let to = Endpoint::Agent(p);
                    let t = out + self.delay(Endpoint::Sip, to);
                    self.at(t, Endpoint::Sip, to, Payload::Data(MarketData::Nbbo(quote.clone())));
                }
            }
            (Endpoint::Signal, Payload::Jump(value)) => {
                let instrument = self.signal_instrument;
                self.trace.push(now, TraceEvent::Signal { instrument, value });
                for i in 0..self.agents.len() {
                    let a = &self.agents[i];
                    if a.instrument == instrument {
                        let t = now + a.signal_latency_us;
                        self.at(t, Endpoint::Signal, Endpoint::Agent(a.id), Payload::Signal(value));
                    }
                }
            }
            (Endpoint::Clock, Payload::Sample) => {
                for a in &mut self.agents {
                    if !a.has_market_data {
                        continue;
                    }
                    let staleness_us = a.consumer.staleness(now);
                    let backlog = a.consumer.backlog(now) as u64;
                    self.trace.push(
                        now,
                        TraceEvent::Staleness {
                            agent: a.id,
                            staleness_us,
                            backlog,
                        },
                    );
                }
                let next = now + self.config.monitors.staleness_sample_us;
                self.at(next, Endpoint::Clock, Endpoint::Clock, Payload::Sample);
            }
            (dst, payload) => unreachable!("{} cannot receive {}", endpoint_name(dst), payload.summary()),
        }
    }

    fn process(&mut self, p: ParticipantId, md: MarketData) {
        self.agents[p.0 as usize].view.apply(&md);
        self.agent_input(p, Input::Market(&md));
    }

    fn agent_input(&mut self, p: ParticipantId, input: Input<'_>) {
        let now = self.sched.now();
        let agent = &mut self.agents[p.0 as usize];
        let mut ctx = Ctx::new(
            now,
            p,
            agent.instrument,
            &agent.view,
            agent.knowledge,
            &mut self.next_order_id,
        );
        agent.strategy.on(&mut ctx, input);
        let instrument = agent.instrument;
        for action in ctx.into_actions() {
            match action {
                Action::Send { venue, mut msg } => {
                    let (a, v) = (Endpoint::Agent(p), Endpoint::Venue(venue));
                    let link = self.link(a, v);
                    let claimed = link.perturb(msg.claimed_submit_ts());
                    let delay = link.delay();
                    msg.set_claimed_submit_ts(claimed);
                    self.trace.push(
                        now,
                        TraceEvent::Sent {
                            agent: p,
                            venue,
                            msg: msg.clone(),
                        },
                    );
                    self.at(now + delay, a, v, Payload::Gateway { msg, routed: false });
                }
                Action::Timer { at, tag } => {
                    self.at(
                        at.max(now),
                        Endpoint::Clock,
                        Endpoint::Agent(p),
                        Payload::AgentTimer(tag),
                    );
                }
                Action::Guess { order_id, guess } => self.trace.push(
                    now,
                    TraceEvent::Guess {
                        agent: p,
                        order_id,
                        guess,
                    },
                ),
                Action::Belief { venue, side, price } => self.trace.push(
                    now,
                    TraceEvent::Belief {
                        agent: p,
                        venue,
                        instrument,
                        side,
                        price,
                    },
                ),
                Action::NotPermitted => self.trace.push(
                    now,
                    TraceEvent::AgentReject {
                        agent: p,
                        reason: AgentRejectReason::OrderTypeNotPermitted,
                    },
                ),
            }
        }
    }

    fn venue_outputs(&mut self, v: VenueId, outs: Vec<VenueOutput>) {
        let now = self.sched.now();
        let src = Endpoint::Venue(v);
        let out = now + self.venues[v.0 as usize].config.speed_bump_out_us;
        for o in outs {
            match o {
                VenueOutput::Report { to, report } => {
                    self.trace.push(
                        now,
                        TraceEvent::Report {
                            venue: v,
                            to,
                            report: report.clone(),
                        },
                    );
                    let dst = Endpoint::Agent(to);
                    let t = out + self.delay(src, dst);
                    self.at(t, src, dst, Payload::Report(report));
                }
                VenueOutput::Route {
                    to,
                    msg,
                    protected_price,
                } => {
                    self.trace.push(
                        now,
                        TraceEvent::Routed {
                            from: v,
                            to,
                            order_id: msg.order_id(),
                            participant: msg.participant(),
                            protected_price,
                        },
                    );
                    let dst = Endpoint::Venue(to);
                    let t = out + self.delay(src, dst);
                    self.at(t, src, dst, Payload::Gateway { msg, routed: true });
                }
                VenueOutput::ToSip { instrument, l1 } => {
                    self.at(out, src, Endpoint::Sip, Payload::SipL1 { instrument, l1 });
                }
                VenueOutput::Feed(md) => self.publish(v, out, md),
                VenueOutput::Book { instrument, event } => {
                    self.trace.push(
                        now,
                        TraceEvent::Book {
                            venue: v,
                            instrument,
                            event,
                        },
                    );
                }
                VenueOutput::Trade(trade) => self.trace.push(now, TraceEvent::Trade { venue: v, trade }),
            }
        }
    }

    fn publish(&mut self, v: VenueId, out: SimTime, md: MarketData) {
        let (feed, instrument) = match &md {
            MarketData::L1 { instrument, .. } => (FeedKind::L1, *instrument),
            MarketData::L2 { instrument, .. } => (FeedKind::L2, *instrument),
            MarketData::Print { instrument, .. } => (FeedKind::Print, *instrument),
            MarketData::Nbbo(_) => return,
        };
        self.trace.push(
            self.sched.now(),
            TraceEvent::Published {
                venue: v,
                instrument,
                feed,
            },
        );
        let (l1, l2) = &self.subscribers[v.0 as usize];
        let to: Vec<ParticipantId> = match feed {
            FeedKind::L1 => l1.clone(),
            FeedKind::L2 => l2.clone(),
            FeedKind::Print => l1.iter().chain(l2.iter()).copied().collect(),
        };
        let src = Endpoint::Venue(v);
        for p in to {
            if self.agents[p.0 as usize].instrument != instrument {
                continue;
            }
            let dst = Endpoint::Agent(p);
            let t = out + self.delay(src, dst);
            self.at(t, src, dst, Payload::Data(md.clone()));
        }
    }
}
