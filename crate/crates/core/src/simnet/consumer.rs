use alloc::collections::VecDeque;

use crate::types::SimTime;

/// A participant that processes market data at a finite rate.
///
/// Messages are served in arrival order, each taking `1/rate` ms. Staleness is
/// how far the consumer lags the source: with a backlog, the age of the oldest
/// update still waiting; otherwise the age the last update had when consumed.
#[derive(Clone, Debug)]
pub struct ConsumerModel {
    /// Messages per millisecond; zero means unlimited.
    pub rate_per_ms: u64,
    busy_until_ns: u64,
    pending: VecDeque<(SimTime, SimTime)>,
    last: Option<(SimTime, SimTime)>,
}

impl ConsumerModel {
    pub fn new(rate_per_ms: u64) -> ConsumerModel {
        ConsumerModel {
            rate_per_ms,
            busy_until_ns: 0,
            pending: VecDeque::new(),
            last: None,
        }
    }

    /// Queues an update that arrived at `arrival` and was stamped `venue_ts`
    /// at its source. Returns the time processing completes.
    pub fn ingest(&mut self, arrival: SimTime, venue_ts: SimTime) -> SimTime {
        self.advance(arrival);
        if self.rate_per_ms == 0 {
            self.last = Some((arrival, venue_ts));
            return arrival;
        }
        let start = self.busy_until_ns.max(arrival.0 * 1_000);
        self.busy_until_ns = start + 1_000_000 / self.rate_per_ms;
        let done = SimTime(self.busy_until_ns.div_ceil(1_000));
        self.pending.push_back((done, venue_ts));
        done
    }

    fn advance(&mut self, now: SimTime) {
        while let Some(&(done, ts)) = self.pending.front() {
            if done > now {
                break;
            }
            self.pending.pop_front();
            self.last = Some((done, ts));
        }
    }

    pub fn backlog(&mut self, now: SimTime) -> usize {
        self.advance(now);
        self.pending.len()
    }

    pub fn staleness(&mut self, now: SimTime) -> u64 {
        self.advance(now);
        if let Some(&(_, ts)) = self.pending.front() {
            return now.since(ts);
        }
        self.last.map(|(done, ts)| done.since(ts)).unwrap_or(0)
    }
}
