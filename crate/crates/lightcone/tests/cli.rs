//! End-to-end checks of the command-line binary: exit codes, shipped-scenario
//! behavior, and byte-level determinism across process invocations.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lightcone")
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn simulate_is_byte_identical_across_processes() {
    let tmp = tempfile::tempdir().unwrap();
    let config = scenarios_dir().join("order_flip.toml");
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<String> = std::fs::read_dir(&dir_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"manifest.json".to_string()));
    assert!(names.contains(&"arrivals.csv".to_string()));
    for name in &names {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}

#[test]
fn seed_override_changes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = scenarios_dir().join("us_exchanges.toml");
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    let out_a = run(&[
        "simulate", "--config", config.to_str().unwrap(),
        "--out", dir_a.to_str().unwrap(),
    ]);
    let out_b = run(&[
        "simulate", "--config", config.to_str().unwrap(),
        "--out", dir_b.to_str().unwrap(),
        "--seed", "999",
    ]);
    assert!(out_a.status.success() && out_b.status.success());
    let a = std::fs::read(dir_a.join("arrivals.csv")).unwrap();
    let b = std::fs::read(dir_b.join("arrivals.csv")).unwrap();
    assert_ne!(a, b, "a different seed must produce a different stream");
}

#[test]
fn convention_filter_limits_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = scenarios_dir().join("order_flip.toml");
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--convention",
        "lab_frame",
    ]);
    assert!(out.status.success());
    let names: Vec<String> = std::fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(names.iter().any(|n| n.contains("lab_frame")));
    assert!(!names.iter().any(|n| n.contains("arrival_order")));
}

#[test]
fn flip_exit_codes() {
    let order_flip = scenarios_dir().join("order_flip.toml");
    let config = order_flip.to_str().unwrap();

    // Spacelike pair: success, boost printed.
    let ok = run(&["flip", "--config", config, "A-0", "B-0"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = stdout(&ok);
    assert!(text.contains("spacelike"), "{text}");
    assert!(text.contains("flip boost"), "{text}");

    // Same event twice: usage error.
    let same = run(&["flip", "--config", config, "A-0", "A-0"]);
    assert_eq!(same.status.code(), Some(2));

    // Unknown id: config-class error.
    let unknown = run(&["flip", "--config", config, "A-0", "Z-9"]);
    assert_eq!(unknown.status.code(), Some(2));

    // Timelike pair: physics violation, message explains the absolute order.
    let tmp = tempfile::tempdir().unwrap();
    let events = tmp.path().join("events.csv");
    std::fs::write(
        &events,
        "exchange_id,t_emit_us,side,price_ticks,size\nA,0,bid,100,10\nA,500,bid,101,10\n",
    )
    .unwrap();
    let timelike_config = tmp.path().join("timelike.toml");
    let body = std::fs::read_to_string(&order_flip)
        .unwrap()
        .replace("order_flip_events.csv", events.to_str().unwrap());
    std::fs::write(&timelike_config, body).unwrap();
    let timelike = run(&["flip", "--config", timelike_config.to_str().unwrap(), "A-0", "A-1"]);
    assert_eq!(timelike.status.code(), Some(3));
    let text = stdout(&timelike);
    assert!(text.contains("timelike"), "{text}");
    assert!(text.contains("absolute"), "{text}");
}

#[test]
fn report_emits_latency_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let config = scenarios_dir().join("us_exchanges.toml");
    let out = run(&[
        "report",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("Mahwah-Carteret,43,143,215"), "{text}");
    assert!(text.contains("Carteret-Aurora,1180,3936,5904"), "{text}");
    let table = std::fs::read_to_string(tmp.path().join("latency_table.csv")).unwrap();
    assert!(table.starts_with("pair,distance_km,light_time_us,fiber_time_us\n"));
    let chart = std::fs::read_to_string(tmp.path().join("timescales.csv")).unwrap();
    assert!(chart.contains("distance_km,light_time_us,fiber_time_us,sip_feed_us,direct_feed_us"));
}

#[test]
fn empty_network_report_is_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("min.toml");
    std::fs::write(
        &config,
        r#"
seed = 1
horizon_us = 0.0

[network]
[[network.nodes]]
id = "A"
name = "A"
lat = 0.0
lon = 0.0
alt_m = 0.0

[network.sip]
node = "A"

[[streams]]
exchange_id = "A"
rate_per_s = 1.0
duration_us = 0.0
spread_ticks = 2
mid_walk = { initial_ticks = 100, step_ticks = 1 }

[[conventions]]
kind = "arrival_order"
"#,
    )
    .unwrap();
    let out = run(&[
        "report",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let table =
        std::fs::read_to_string(tmp.path().join("out/latency_table.csv")).unwrap();
    assert_eq!(table, "pair,distance_km,light_time_us,fiber_time_us\n");
}

#[test]
fn horizon_zero_yields_empty_series_and_valid_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("zero.toml");
    let body = std::fs::read_to_string(scenarios_dir().join("us_exchanges.toml"))
        .unwrap()
        .replace("horizon_us = 1.0e6", "horizon_us = 0.0");
    std::fs::write(&config, body).unwrap();
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert!(manifest["outputs"]["arrivals.csv"].is_string());
    let nbbo =
        std::fs::read_to_string(out_dir.join("nbbo_00_arrival_order.csv")).unwrap();
    assert_eq!(nbbo, "t_us,bid_ticks,bid_venue,ask_ticks,ask_venue,crossed\n");
}

#[test]
fn missing_seed_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("no_seed.toml");
    let body = std::fs::read_to_string(scenarios_dir().join("order_flip.toml"))
        .unwrap()
        .replace("seed = 7\n", "");
    std::fs::write(&config, body).unwrap();
    let out = run(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn races_without_feeds_is_a_config_error() {
    let out = run(&[
        "races",
        "--config",
        scenarios_dir().join("order_flip.toml").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("feeds"));
}

#[test]
fn shipped_race_scenario_hits_calibrated_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "races",
        "--config",
        scenarios_dir().join("races.toml").to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("races_summary.json")).unwrap(),
    )
    .unwrap();
    let rate = summary["summary"]["races_per_minute_per_security"].as_f64().unwrap();
    assert!(
        (rate - 1.0).abs() <= 0.1,
        "calibrated to ~1 race/min/security, got {rate}"
    );
    // Deterministic feed model: the fast side wins every recorded race.
    assert_eq!(summary["summary"]["fast_win_fraction"].as_f64().unwrap(), 1.0);
    assert_eq!(summary["window_us"].as_f64().unwrap(), 1108.0);
    assert!(summary["feed_ratio"].as_f64().unwrap() > 50.0);
    // Every row of the race log carries the same exact window.
    let csv = std::fs::read_to_string(tmp.path().join("races.csv")).unwrap();
    for line in csv.lines().skip(1) {
        assert!(line.contains(",1108,"), "{line}");
    }
}

#[test]
fn jittered_race_scenario_win_fraction() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "races",
        "--config",
        scenarios_dir().join("races_jitter.toml").to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(tmp.path().join("races_summary.json")).unwrap(),
    )
    .unwrap();
    let fraction = summary["summary"]["fast_win_fraction"].as_f64().unwrap();
    assert!(fraction > 0.9 && fraction < 1.0, "fraction {fraction}");
    // Pinned for the shipped seed: 55 of 58 races won by the fast side.
    assert!((fraction - 55.0 / 58.0).abs() < 1e-12, "fraction {fraction}");
}

#[test]
fn gravitational_clocks_surface_in_node_report() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("grav.toml");
    std::fs::write(
        &config,
        r#"
seed = 2
horizon_us = 1000.0

[network]
gravitational_clocks = true

[[network.nodes]]
id = "high"
name = "High"
lat = 40.0
lon = -74.0
alt_m = 1000.0

[[network.nodes]]
id = "low"
name = "Low"
lat = 40.5
lon = -74.5
alt_m = 0.0

[network.sip]
node = "low"

[[streams]]
exchange_id = "high"
rate_per_s = 10.0
duration_us = 1000.0
spread_ticks = 2
mid_walk = { initial_ticks = 100, step_ticks = 1 }

[[conventions]]
kind = "lab_frame"
"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "report",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let nodes = std::fs::read_to_string(out_dir.join("nodes.csv")).unwrap();
    let high = nodes.lines().find(|l| l.starts_with("high,")).unwrap();
    let fields: Vec<&str> = high.split(',').collect();
    let rate: f64 = fields[5].parse().unwrap();
    let drift: f64 = fields[6].parse().unwrap();
    // 1 km of altitude: ~1.09e-13 rate excess, ~9.4e-3 µs/day of drift.
    assert!(rate > 1.0);
    assert!((drift - 9.43e-3).abs() < 1e-3, "drift {drift}");
    let low = nodes.lines().find(|l| l.starts_with("low,")).unwrap();
    assert!(low.contains(",1,0"), "sea level keeps a unit clock: {low}");
}

#[test]
fn shipped_configs_roundtrip_exactly() {
    for name in [
        "order_flip.toml",
        "us_exchanges.toml",
        "nj_chicago.toml",
        "races.toml",
        "races_jitter.toml",
    ] {
        let path = scenarios_dir().join(name);
        let config = lightcone::config::load_config(&path).unwrap();
        let text = toml::to_string(&config).unwrap();
        let reparsed: lightcone::config::ScenarioConfig = toml::from_str(&text).unwrap();
        assert_eq!(config, reparsed, "{name} must round-trip");
    }
}

#[test]
fn nj_chicago_scenario_loads_as_spacelike_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "flip",
        "--config",
        scenarios_dir().join("nj_chicago.toml").to_str().unwrap(),
        "mahwah-0",
        "aurora-0",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("spacelike"));
    drop(tmp);
}
