//! Counter-based random substreams.
//!
//! Every entity that draws random numbers (a link, an agent, a reserve order)
//! owns a ChaCha stream keyed by `(master seed, stream id)`. Adding an entity
//! never shifts the draws seen by another one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Entity families that own substreams. The tag occupies the top byte of the stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamTag {
    Link = 1,
    Agent = 2,
    Reserve = 3,
    Signal = 4,
    Venue = 5,
}

pub fn stream_id(tag: StreamTag, id: u64) -> u64 {
    ((tag as u64) << 56) | (id & 0x00FF_FFFF_FFFF_FFFF)
}

#[derive(Clone, Debug)]
pub struct Substream(ChaCha8Rng);

impl Substream {
    pub fn new(master_seed: u64, stream: u64) -> Substream {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream);
        Substream(rng)
    }

    pub fn for_entity(master_seed: u64, tag: StreamTag, id: u64) -> Substream {
        Substream::new(master_seed, stream_id(tag, id))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.random()
    }

    /// Uniform draw from `[lo, hi]`. Returns `lo` when the range is empty.
    pub fn uniform(&mut self, lo: u64, hi: u64) -> u64 {
        if hi <= lo {
            return lo;
        }
        self.0.random_range(lo..=hi)
    }

    /// Uniform draw from `[-bound, +bound]`.
    pub fn symmetric(&mut self, bound: u64) -> i64 {
        if bound == 0 {
            return 0;
        }
        let b = bound as i64;
        self.0.random_range(-b..=b)
    }

    /// Bernoulli draw with probability `num / den`.
    pub fn chance(&mut self, num: u32, den: u32) -> bool {
        if den == 0 {
            return false;
        }
        if num >= den {
            return true;
        }
        self.0.random_range(0..den) < num
    }
}
