use serde::{Deserialize, Serialize};

use super::Endpoint;
use crate::rng::{StreamTag, Substream};
use crate::types::SimTime;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub base_latency_us: u64,
    /// Delivery jitter, uniform in `[0, jitter_us]`.
    #[serde(default)]
    pub jitter_us: u64,
    /// Noise added to the sender-written submission timestamp, uniform in `[-σ, +σ]`.
    #[serde(default)]
    pub timestamp_noise_us: u64,
}

/// A symmetric point-to-point link with its own random stream.
#[derive(Clone, Debug)]
pub struct Link {
    pub spec: LinkSpec,
    rng: Substream,
}

impl Link {
    pub fn new(spec: LinkSpec, master_seed: u64, a: Endpoint, b: Endpoint) -> Link {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        Link {
            spec,
            rng: Substream::for_entity(master_seed, StreamTag::Link, (lo.code() << 24) | hi.code()),
        }
    }

    /// Delivery delay for one message: base plus a jitter draw.
    pub fn delay(&mut self) -> u64 {
        self.spec.base_latency_us + self.rng.uniform(0, self.spec.jitter_us)
    }

    /// Applies timestamp noise to a claimed submission time (saturating at zero).
    pub fn perturb(&mut self, claimed: SimTime) -> SimTime {
        let noise = self.rng.symmetric(self.spec.timestamp_noise_us);
        SimTime(claimed.0.saturating_add_signed(noise))
    }
}
