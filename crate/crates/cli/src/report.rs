//! Output files: trades.csv, metrics.json, violations.json and events.log.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use marketsim_core::trace::Trace;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::Outcome;

pub const TRADE_COLUMNS: [&str; 8] = [
    "ts_us",
    "venue",
    "instrument",
    "price_ticks",
    "qty",
    "taker_order",
    "maker_order",
    "aggressor_side",
];

/// SHA-256 over the trace, one JSON record per line.
pub fn trace_hash(trace: &Trace) -> String {
    let mut h = Sha256::new();
    for r in &trace.records {
        serde_json::to_writer(&mut HashWriter(&mut h), r).expect("trace records serialize");
        h.update(b"\n");
    }
    format!("{:x}", h.finalize())
}

struct HashWriter<'a>(&'a mut Sha256);

impl Write for HashWriter<'_> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.update(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

/// The trades file. Auction fills have an empty aggressor side.
pub fn trades_csv(outcome: &Outcome) -> anyhow::Result<Vec<u8>> {
    let config = &outcome.config;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRADE_COLUMNS)?;
    for (ts, venue, t) in outcome.output.trace.trades() {
        w.write_record([
            ts.0.to_string().as_str(),
            &config.venues[venue.0 as usize].name,
            &config.instruments[t.instrument.0 as usize],
            &t.price.0.to_string(),
            &t.qty.0.to_string(),
            &t.taker_order_id.0.to_string(),
            &t.maker_order_id.0.to_string(),
            t.aggressor_side.map_or("", |s| s.as_str()),
        ])?;
    }
    Ok(w.into_inner()?)
}

/// Metrics with the run's trace hash and event count alongside.
pub fn metrics_json(outcome: &Outcome) -> Value {
    let mut v = serde_json::to_value(&outcome.report.metrics).expect("metrics serialize");
    let obj = v.as_object_mut().expect("metrics is an object");
    obj.insert("trace_hash".into(), outcome.trace_hash.clone().into());
    obj.insert("events_processed".into(), outcome.output.events_processed.into());
    v
}

pub fn violations_json(outcome: &Outcome) -> Value {
    serde_json::to_value(&outcome.report.violations).expect("violations serialize")
}

pub(crate) fn write_json(path: &Path, v: &Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes every output of a run into `dir`, creating it if needed.
pub fn write_all(dir: &Path, outcome: &Outcome) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let trades = dir.join("trades.csv");
    fs::write(&trades, trades_csv(outcome)?).with_context(|| format!("writing {}", trades.display()))?;
    write_json(&dir.join("metrics.json"), &metrics_json(outcome))?;
    write_json(&dir.join("violations.json"), &violations_json(outcome))?;
    if !outcome.output.event_log.is_empty() {
        let path = dir.join("events.log");
        let mut text = outcome.output.event_log.join("\n");
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
