use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use marketsim::report::TRADE_COLUMNS;
use marketsim_core::scenario::ScenarioConfig;
use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.json"))
}

fn marketsim(args: &[&str], log: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_marketsim"))
        .args(args)
        .env("MARKETSIM_LOG", log)
        .output()
        .expect("binary runs")
}

fn run(name: &str, out: &Path, extra: &[&str]) -> Output {
    let path = scenario(name);
    let mut args = vec![
        "run",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = marketsim(&args, "off");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    o
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.json");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn same_seed_gives_byte_identical_trades() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run("honest_baseline", &a, &["--seed", "42"]);
    run("honest_baseline", &b, &["--seed", "42"]);
    let ta = fs::read(a.join("trades.csv")).unwrap();
    assert_eq!(ta, fs::read(b.join("trades.csv")).unwrap());
    assert_eq!(
        json(&a.join("metrics.json"))["trace_hash"],
        json(&b.join("metrics.json"))["trace_hash"]
    );
    let text = String::from_utf8(ta).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), TRADE_COLUMNS.join(","));
    assert!(lines.count() > 100);
    assert_eq!(json(&a.join("metrics.json"))["seed"], 42);
}

#[test]
fn snipe_baseline_reports_captures() {
    let dir = tempfile::tempdir().unwrap();
    run("snipe_baseline", dir.path(), &[]);
    let m = json(&dir.path().join("metrics.json"));
    assert!(m["attacks"]["snipe_captures"].as_u64().unwrap() > 0);
    let v = json(&dir.path().join("violations.json"));
    assert!(v
        .as_array()
        .unwrap()
        .iter()
        .all(|x| x["property"].is_string() && x["ts"].is_u64()));
    assert!(!dir.path().join("events.log").exists());
}

#[test]
fn overrides_change_the_run() {
    let dir = tempfile::tempdir().unwrap();
    run(
        "snipe_baseline",
        dir.path(),
        &["--override", "venues[0].speed_bump_in_us=1000"],
    );
    let m = json(&dir.path().join("metrics.json"));
    assert_eq!(m["attacks"]["snipe_captures"], 0);
}

#[test]
fn events_log_follows_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("queue_jump_hl");
    let out = dir.path().to_str().unwrap();
    let o = marketsim(&["run", "--scenario", path.to_str().unwrap(), "--out", out], "events");
    assert!(o.status.success());
    let log = fs::read_to_string(dir.path().join("events.log")).unwrap();
    let first = log.lines().next().unwrap();
    assert_eq!(first.split('\t').count(), 5, "{first}");
    assert!(log.lines().any(|l| l.contains("venue:0")));
}

#[test]
fn bad_link_endpoint_exits_2_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(
        dir.path(),
        r#"{"duration_us": 1000, "venues": [{"name": "E1"}],
            "links": [{"a": "venue:E1", "b": "venue:E9", "base_latency_us": 10}],
            "agents": [{"name": "x", "strategy": {"type": "scripted"}}]}"#,
    );
    let o = marketsim(
        &[
            "run",
            "--scenario",
            p.to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ],
        "off",
    );
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("links[0].b"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn parse_errors_exit_2_with_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(dir.path(), "{\n  \"duration_us\": 1000,\n  \"venuez\": []\n}\n");
    let o = marketsim(&["run", "--scenario", p.to_str().unwrap(), "--out", "unused"], "off");
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(":3:"), "{err}");
    assert!(err.contains("venuez"), "{err}");
}

#[test]
fn bad_override_path_exits_2() {
    let path = scenario("honest_baseline");
    let o = marketsim(
        &[
            "run",
            "--scenario",
            path.to_str().unwrap(),
            "--out",
            "unused",
            "--override",
            "venues[7].dark=true",
        ],
        "off",
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("venues[7]"));
}

fn compare(name: &str, toggle: &str) -> Value {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario(name);
    let o = marketsim(
        &[
            "compare",
            "--scenario",
            path.to_str().unwrap(),
            "--seed",
            "7",
            "--toggle",
            toggle,
            "--out",
            dir.path().to_str().unwrap(),
        ],
        "off",
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("baseline/trades.csv").exists());
    assert!(dir.path().join("toggled/metrics.json").exists());
    json(&dir.path().join("compare.json"))
}

#[test]
fn compare_speed_bump_removes_snipes() {
    let c = compare("snipe_baseline", "venues[0].speed_bump_in_us=1000");
    assert!(c["baseline"]["attacks"]["snipe_captures"].as_u64().unwrap() > 0);
    assert_eq!(c["toggled"]["attacks"]["snipe_captures"], 0);
    assert!(c["delta"]["attacks.snipe_captures"].as_f64().unwrap() < 0.0);
    assert_eq!(c["toggle"], "venues[0].speed_bump_in_us=1000");
}

#[test]
fn compare_batch_auction_removes_snipes() {
    let c = compare("snipe_baseline", "venues[0].batch_interval_us=100000");
    assert_eq!(c["toggled"]["attacks"]["snipe_captures"], 0);
}

#[test]
fn compare_on_attack_free_scenario_has_no_attack_deltas() {
    let c = compare("honest_baseline", "venues[0].speed_bump_in_us=350");
    for (k, d) in c["delta"].as_object().unwrap() {
        if k.starts_with("attacks.") || k.starts_with("violations.") {
            assert_eq!(d.as_f64().unwrap(), 0.0, "{k}");
        }
    }
}

#[test]
fn bundled_scenarios_survive_reserialization() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let a: ScenarioConfig = serde_json::from_str(&text).unwrap();
        let b: ScenarioConfig = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(a, b, "{}", path.display());
    }
}
