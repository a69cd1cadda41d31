//! Countermeasure A/B runs: the same scenario and seed with and without one
//! config change.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::thread;

use marketsim_core::scenario::{ConfigError, ScenarioConfig};
use serde_json::{json, Value};

use crate::report::{metrics_json, write_all, write_json};
use crate::{execute, Outcome};

/// Numeric leaves of a JSON value keyed by dotted path.
pub fn flatten(v: &Value) -> BTreeMap<String, f64> {
    fn walk(prefix: &str, v: &Value, out: &mut BTreeMap<String, f64>) {
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    let p = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&p, x, out);
                }
            }
            Value::Number(n) => {
                out.insert(prefix.into(), n.as_f64().unwrap_or(f64::NAN));
            }
            Value::Bool(b) => {
                out.insert(prefix.into(), f64::from(u8::from(*b)));
            }
            _ => {}
        }
    }
    let mut out = BTreeMap::new();
    walk("", v, &mut out);
    out
}

/// The figures a comparison reports for one leg.
fn summary(outcome: &Outcome) -> Value {
    let m = metrics_json(outcome);
    let pnl: BTreeMap<_, _> = outcome
        .report
        .metrics
        .agents
        .iter()
        .map(|(name, a)| (name.clone(), a.pnl))
        .collect();
    json!({
        "trades": m["trades"],
        "volume": m["volume"],
        "attacks": m["attacks"],
        "violations": m["violations"],
        "pnl": pnl,
        "trace_hash": m["trace_hash"],
    })
}

pub struct Comparison {
    pub baseline: Outcome,
    pub toggled: Outcome,
}

impl Comparison {
    /// Runs both legs, in parallel since they share no state.
    pub fn run(baseline: ScenarioConfig, toggled: ScenarioConfig, event_log: bool) -> Result<Comparison, ConfigError> {
        let (a, b) = thread::scope(|s| {
            let a = s.spawn(|| execute(baseline, event_log));
            let b = s.spawn(|| execute(toggled, event_log));
            (a.join().expect("baseline leg"), b.join().expect("toggled leg"))
        });
        Ok(Comparison {
            baseline: a?,
            toggled: b?,
        })
    }

    /// Per-metric baseline, toggled and delta, over attack metrics, violation
    /// counts, totals and P&L.
    pub fn deltas(&self) -> BTreeMap<String, (f64, f64, f64)> {
        let (a, b) = (flatten(&summary(&self.baseline)), flatten(&summary(&self.toggled)));
        let mut out = BTreeMap::new();
        for key in a.keys().chain(b.keys()) {
            let x = a.get(key).copied().unwrap_or(0.0);
            let y = b.get(key).copied().unwrap_or(0.0);
            out.insert(key.clone(), (x, y, y - x));
        }
        out
    }

    pub fn to_json(&self, toggle: &str) -> Value {
        let delta: BTreeMap<_, _> = self.deltas().into_iter().map(|(k, (_, _, d))| (k, d)).collect();
        json!({
            "scenario": self.baseline.config.name,
            "seed": self.baseline.config.seed,
            "toggle": toggle,
            "baseline": summary(&self.baseline),
            "toggled": summary(&self.toggled),
            "delta": delta,
        })
    }

    /// Side-by-side table of the metrics that differ, or a note that none do.
    pub fn table(&self) -> String {
        let rows: Vec<_> = self.deltas().into_iter().filter(|(_, (_, _, d))| *d != 0.0).collect();
        let mut s = String::new();
        if rows.is_empty() {
            s.push_str("no metric changed\n");
            return s;
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        writeln!(
            s,
            "{:width$}  {:>14}  {:>14}  {:>14}",
            "metric", "baseline", "toggled", "delta"
        )
        .unwrap();
        for (k, (a, b, d)) in rows {
            writeln!(s, "{k:width$}  {a:>14}  {b:>14}  {d:>+14}").unwrap();
        }
        s
    }

    /// Writes each leg's outputs under `baseline/` and `toggled/` and the
    /// delta report as compare.json.
    pub fn write(&self, dir: &Path, toggle: &str) -> anyhow::Result<()> {
        write_all(&dir.join("baseline"), &self.baseline)?;
        write_all(&dir.join("toggled"), &self.toggled)?;
        write_json(&dir.join("compare.json"), &self.to_json(toggle))
    }
}
