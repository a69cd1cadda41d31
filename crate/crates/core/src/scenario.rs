//! Scenario configuration and its validation.
//!
//! Venues, agents and instruments are referenced by name in the document and
//! numbered by position once validated: the i-th venue is `VenueId(i)`, the
//! i-th agent `ParticipantId(i)`, the i-th instrument `InstrumentId(i)`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::agents::StrategyConfig;
use crate::simnet::{Endpoint, LinkSpec};
use crate::types::{InstrumentId, ParticipantId, VenueId};
use crate::venue::VenueConfig;

/// A configuration problem, located by a path such as `links[2].b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl core::error::Error for ConfigError {}

fn err(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

fn default_instruments() -> Vec<String> {
    vec!["XYZ".into()]
}

fn default_link() -> LinkSpec {
    LinkSpec {
        base_latency_us: 100,
        ..LinkSpec::default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub duration_us: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_instruments")]
    pub instruments: Vec<String>,
    pub venues: Vec<VenueConfig>,
    #[serde(default)]
    pub sip: SipConfig,
    /// Latency of any pair of endpoints not covered by `links` or an agent's own link.
    #[serde(default = "default_link")]
    pub default_link: LinkSpec,
    #[serde(default)]
    pub links: Vec<LinkConfig>,
    pub agents: Vec<AgentConfig>,
    #[serde(default)]
    pub signal: Option<SignalConfig>,
    #[serde(default)]
    pub monitors: MonitorConfig,
    /// Price used to mark inventory when there is no value signal.
    #[serde(default)]
    pub mark_price: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SipConfig {
    pub latency_us: u64,
}

impl Default for SipConfig {
    fn default() -> SipConfig {
        SipConfig { latency_us: 90 }
    }
}

/// An explicit link between two endpoints, written `venue:<name>`, `agent:<name>` or `sip`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub a: String,
    pub b: String,
    pub base_latency_us: u64,
    #[serde(default)]
    pub jitter_us: u64,
    #[serde(default)]
    pub timestamp_noise_us: u64,
}

impl LinkConfig {
    pub fn spec(&self) -> LinkSpec {
        LinkSpec {
            base_latency_us: self.base_latency_us,
            jitter_us: self.jitter_us,
            timestamp_noise_us: self.timestamp_noise_us,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkProfile {
    Colocated,
    Fast,
    Slow,
}

impl LinkProfile {
    pub fn base_latency_us(self) -> u64 {
        match self {
            LinkProfile::Colocated => 50,
            LinkProfile::Fast => 500,
            LinkProfile::Slow => 900,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AgentLink {
    Profile(LinkProfile),
    Spec(LinkSpec),
}

impl AgentLink {
    pub fn spec(self) -> LinkSpec {
        match self {
            AgentLink::Profile(p) => LinkSpec {
                base_latency_us: p.base_latency_us(),
                ..LinkSpec::default()
            },
            AgentLink::Spec(s) => s,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedLevel {
    L1,
    L2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedSubscription {
    pub venue: String,
    pub level: FeedLevel,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub name: String,
    /// Instrument traded; defaults to the first one.
    #[serde(default)]
    pub instrument: Option<String>,
    /// Link to every venue and to the aggregator, unless `links` says otherwise.
    #[serde(default)]
    pub link: Option<AgentLink>,
    /// Direct venue feeds.
    #[serde(default)]
    pub feeds: Vec<FeedSubscription>,
    /// Subscribes to the consolidated quote.
    #[serde(default)]
    pub sip: bool,
    /// Market-data messages processed per millisecond; zero is unlimited.
    #[serde(default)]
    pub processing_rate: u64,
    #[serde(default)]
    pub knows_hide_and_light: bool,
    #[serde(default)]
    pub knows_day_iso: bool,
    #[serde(default)]
    pub signal_latency_us: u64,
    pub strategy: StrategyConfig,
}

impl AgentConfig {
    pub fn has_market_data(&self) -> bool {
        self.sip || !self.feeds.is_empty()
    }
}

/// Fundamental value process: piecewise constant, published to every agent at jump times.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    #[serde(default)]
    pub instrument: Option<String>,
    pub initial: u64,
    /// Explicit jumps.
    #[serde(default)]
    pub jumps: Vec<SignalJump>,
    /// Seeded jumps, added to the explicit ones.
    #[serde(default)]
    pub random: Option<RandomJumps>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalJump {
    pub at_us: u64,
    pub value: u64,
}

/// `count` jumps of `size_ticks` in a random direction, the i-th at
/// `first_us + i * interval_us` plus a uniform offset in `[-jitter_us, jitter_us]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomJumps {
    pub count: u64,
    pub first_us: u64,
    pub interval_us: u64,
    #[serde(default)]
    pub jitter_us: u64,
    pub size_ticks: u64,
}

fn default_otr() -> u64 {
    50
}

fn default_window() -> u64 {
    1_000_000
}

fn default_staleness() -> u64 {
    10_000
}

fn default_sample() -> u64 {
    1_000
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorConfig {
    /// Messages per trade above which an agent is flagged.
    #[serde(default = "default_otr")]
    pub order_to_trade_threshold: u64,
    #[serde(default = "default_window")]
    pub order_to_trade_window_us: u64,
    #[serde(default = "default_staleness")]
    pub staleness_threshold_us: u64,
    #[serde(default = "default_sample")]
    pub staleness_sample_us: u64,
    /// Venues whose documented priority exceptions are not audited.
    #[serde(default)]
    pub queue_audit_exempt: Vec<String>,
}

impl Default for MonitorConfig {
    fn default() -> MonitorConfig {
        MonitorConfig {
            order_to_trade_threshold: default_otr(),
            order_to_trade_window_us: default_window(),
            staleness_threshold_us: default_staleness(),
            staleness_sample_us: default_sample(),
            queue_audit_exempt: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn venue_id(&self, name: &str) -> Option<VenueId> {
        self.venues
            .iter()
            .position(|v| v.name == name)
            .map(|i| VenueId(i as u32))
    }

    pub fn agent_id(&self, name: &str) -> Option<ParticipantId> {
        self.agents
            .iter()
            .position(|a| a.name == name)
            .map(|i| ParticipantId(i as u32))
    }

    pub fn instrument_id(&self, name: &str) -> Option<InstrumentId> {
        self.instruments
            .iter()
            .position(|i| i == name)
            .map(|i| InstrumentId(i as u32))
    }

    /// Resolves an endpoint reference such as `venue:E1`, `agent:maker` or `sip`.
    pub fn endpoint(&self, reference: &str) -> Result<Endpoint, String> {
        if reference == "sip" {
            return Ok(Endpoint::Sip);
        }
        match reference.split_once(':') {
            Some(("venue", name)) => self
                .venue_id(name)
                .map(Endpoint::Venue)
                .ok_or_else(|| format!("unknown venue '{name}'")),
            Some(("agent", name)) => self
                .agent_id(name)
                .map(Endpoint::Agent)
                .ok_or_else(|| format!("unknown agent '{name}'")),
            _ => Err(format!("'{reference}' is not venue:<name>, agent:<name> or sip")),
        }
    }

    pub fn signal_instrument(&self) -> InstrumentId {
        self.signal
            .as_ref()
            .and_then(|s| s.instrument.as_deref())
            .and_then(|n| self.instrument_id(n))
            .unwrap_or(InstrumentId(0))
    }

    /// Checks every cross-reference and range before a run starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.duration_us == 0 {
            return Err(err("duration_us", "must be positive"));
        }
        if self.instruments.is_empty() {
            return Err(err("instruments", "at least one instrument is required"));
        }
        unique(self.instruments.iter().map(String::as_str), "instruments")?;
        if self.venues.is_empty() {
            return Err(err("venues", "at least one venue is required"));
        }
        unique(self.venues.iter().map(|v| v.name.as_str()), "venues")?;
        for (i, v) in self.venues.iter().enumerate() {
            if v.round_lot == 0 {
                return Err(err(format!("venues[{i}].round_lot"), "must be positive"));
            }
            if v.tick_size == 0 {
                return Err(err(format!("venues[{i}].tick_size"), "must be positive"));
            }
        }
        unique(self.agents.iter().map(|a| a.name.as_str()), "agents")?;
        for (i, l) in self.links.iter().enumerate() {
            let a = self.endpoint(&l.a).map_err(|m| err(format!("links[{i}].a"), m))?;
            let b = self.endpoint(&l.b).map_err(|m| err(format!("links[{i}].b"), m))?;
            if a == b {
                return Err(err(format!("links[{i}]"), "a link needs two distinct endpoints"));
            }
        }
        for (i, a) in self.agents.iter().enumerate() {
            if let Some(name) = &a.instrument {
                if self.instrument_id(name).is_none() {
                    return Err(err(
                        format!("agents[{i}].instrument"),
                        format!("unknown instrument '{name}'"),
                    ));
                }
            }
            for (j, f) in a.feeds.iter().enumerate() {
                if self.venue_id(&f.venue).is_none() {
                    let path = format!("agents[{i}].feeds[{j}].venue");
                    return Err(err(path, format!("unknown venue '{}'", f.venue)));
                }
            }
            a.strategy
                .validate(self)
                .map_err(|e| err(format!("agents[{i}].strategy.{}", e.path), e.message))?;
        }
        if let Some(s) = &self.signal {
            if let Some(name) = &s.instrument {
                if self.instrument_id(name).is_none() {
                    return Err(err("signal.instrument", format!("unknown instrument '{name}'")));
                }
            }
            for (i, j) in s.jumps.iter().enumerate() {
                if j.at_us > self.duration_us {
                    return Err(err(format!("signal.jumps[{i}].at_us"), "after the end of the run"));
                }
            }
            if let Some(r) = &s.random {
                if r.count > 0 && r.interval_us <= 2 * r.jitter_us {
                    return Err(err("signal.random.jitter_us", "jitter must be under half the interval"));
                }
            }
        }
        if self.monitors.staleness_sample_us == 0 {
            return Err(err("monitors.staleness_sample_us", "must be positive"));
        }
        for (i, name) in self.monitors.queue_audit_exempt.iter().enumerate() {
            if self.venue_id(name).is_none() {
                let path = format!("monitors.queue_audit_exempt[{i}]");
                return Err(err(path, format!("unknown venue '{name}'")));
            }
        }
        Ok(())
    }
}

fn unique<'a>(names: impl Iterator<Item = &'a str>, path: &str) -> Result<(), ConfigError> {
    let mut seen = BTreeSet::new();
    for (i, n) in names.enumerate() {
        if !seen.insert(n) {
            return Err(err(format!("{path}[{i}]"), format!("duplicate name '{n}'")));
        }
    }
    Ok(())
}

/// Error raised while checking one strategy; `path` is relative to the strategy.
pub(crate) fn strategy_err(path: &str, message: impl ToString) -> ConfigError {
    err(path, message.to_string())
}
