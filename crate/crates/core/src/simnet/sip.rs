use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::L1View;
use crate::types::{InstrumentId, Price, Side, SimTime, VenueId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VenueQuote {
    pub venue: VenueId,
    pub l1: L1View,
}

/// Consolidated best bid and offer, as known to the aggregator.
///
/// Carries the per-venue quotes it was computed from so a venue can find the
/// best price excluding its own.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NbboQuote {
    pub instrument: InstrumentId,
    pub best_bid: Option<(Price, VenueId)>,
    pub best_ask: Option<(Price, VenueId)>,
    pub ts: SimTime,
    pub venues: Vec<VenueQuote>,
}

impl NbboQuote {
    pub fn empty(instrument: InstrumentId) -> NbboQuote {
        NbboQuote {
            instrument,
            best_bid: None,
            best_ask: None,
            ts: SimTime::ZERO,
            venues: Vec::new(),
        }
    }

    /// Best price on `side` over every venue except `exclude`.
    pub fn best_excluding(&self, side: Side, exclude: VenueId) -> Option<(Price, VenueId)> {
        best(side, self.venues.iter().filter(|q| q.venue != exclude))
    }
}

fn best<'a>(side: Side, quotes: impl Iterator<Item = &'a VenueQuote>) -> Option<(Price, VenueId)> {
    let mut out: Option<(Price, VenueId)> = None;
    for q in quotes {
        let quote = match side {
            Side::Buy => q.l1.bid,
            Side::Sell => q.l1.ask,
        };
        let Some(quote) = quote else { continue };
        // Equal prices keep the lower venue id, which comes first in iteration.
        if out.is_none_or(|(p, _)| side.better(quote.price, p)) {
            out = Some((quote.price, q.venue));
        }
    }
    out
}

/// The consolidated feed: last L1 received from each venue, per instrument.
#[derive(Clone, Debug)]
pub struct Sip {
    pub latency_us: u64,
    quotes: BTreeMap<InstrumentId, BTreeMap<VenueId, L1View>>,
}

impl Sip {
    pub fn new(latency_us: u64) -> Sip {
        Sip {
            latency_us,
            quotes: BTreeMap::new(),
        }
    }

    /// Records a venue's L1 and returns the recomputed NBBO for its instrument.
    pub fn on_l1(&mut self, instrument: InstrumentId, venue: VenueId, l1: L1View, now: SimTime) -> NbboQuote {
        self.quotes.entry(instrument).or_default().insert(venue, l1);
        self.nbbo(instrument, now)
    }

    pub fn nbbo(&self, instrument: InstrumentId, now: SimTime) -> NbboQuote {
        let venues: Vec<VenueQuote> = self
            .quotes
            .get(&instrument)
            .map(|m| m.iter().map(|(&venue, &l1)| VenueQuote { venue, l1 }).collect())
            .unwrap_or_default();
        NbboQuote {
            instrument,
            best_bid: best(Side::Buy, venues.iter()),
            best_ask: best(Side::Sell, venues.iter()),
            ts: now,
            venues,
        }
    }
}
