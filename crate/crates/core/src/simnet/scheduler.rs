use alloc::collections::BinaryHeap;
use core::cmp::{Ordering, Reverse};

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::types::{ParticipantId, SimTime, VenueId};

/// Source or destination of a simulated message.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Endpoint {
    Venue(VenueId),
    Agent(ParticipantId),
    Sip,
    /// The exogenous value process.
    Signal,
    /// Timers and other self-addressed events.
    Clock,
}

impl Endpoint {
    /// Dense code used to derive per-link random streams.
    pub(crate) fn code(self) -> u64 {
        match self {
            Endpoint::Venue(v) => (1 << 22) | v.0 as u64,
            Endpoint::Agent(a) => (2 << 22) | (a.0 as u64 & 0x3F_FFFF),
            Endpoint::Sip => 3 << 22,
            Endpoint::Signal => 4 << 22,
            Endpoint::Clock => 5 << 22,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event<P> {
    pub deliver_at: SimTime,
    pub seq: u64,
    pub src: Endpoint,
    pub dst: Endpoint,
    pub payload: P,
}

struct Entry<P>(Event<P>);

impl<P> PartialEq for Entry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<P> Eq for Entry<P> {}

impl<P> Entry<P> {
    fn key(&self) -> (SimTime, u64) {
        (self.0.deliver_at, self.0.seq)
    }
}

impl<P> PartialOrd for Entry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Entry<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Min-queue of events ordered by `(deliver_at, seq)`.
pub struct Scheduler<P> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Reverse<Entry<P>>>,
    processed: u64,
}

impl<P> Default for Scheduler<P> {
    fn default() -> Self {
        Scheduler::new()
    }
}

impl<P> Scheduler<P> {
    pub fn new() -> Scheduler<P> {
        Scheduler {
            now: SimTime::ZERO,
            next_seq: 0,
            heap: BinaryHeap::new(),
            processed: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(e)| e.0.deliver_at)
    }

    /// Queues an event and returns its sequence number.
    pub fn schedule(&mut self, deliver_at: SimTime, src: Endpoint, dst: Endpoint, payload: P) -> Result<u64, SimError> {
        if deliver_at < self.now {
            return Err(SimError::SchedulingInPast {
                at: deliver_at,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Entry(Event {
            deliver_at,
            seq,
            src,
            dst,
            payload,
        })));
        Ok(seq)
    }

    /// Removes the next event and advances the clock to it.
    pub fn pop(&mut self) -> Option<Event<P>> {
        let Reverse(Entry(event)) = self.heap.pop()?;
        self.now = event.deliver_at;
        self.processed += 1;
        Some(event)
    }

    /// Pops the next event if it is due at or before `t_end`.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<Event<P>> {
        if self.peek_time()? > t_end {
            return None;
        }
        self.pop()
    }

    /// Runs `handler` on every event due at or before `t_end`; returns how many ran.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut Scheduler<P>, Event<P>),
    {
        let mut count = 0;
        while let Some(event) = self.pop_until(t_end) {
            handler(self, event);
            count += 1;
        }
        count
    }
}
