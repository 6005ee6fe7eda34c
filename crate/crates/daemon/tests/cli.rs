use std::io::Write;
use std::process::{Command, Stdio};

use serde_json::Value;
use sonic_core::modem::read_wav;

fn bin(name: &str) -> Command {
    let path = match name {
        "sonic-encode" => env!("CARGO_BIN_EXE_sonic-encode"),
        "sonic-decode" => env!("CARGO_BIN_EXE_sonic-decode"),
        "sonic-simulate" => env!("CARGO_BIN_EXE_sonic-simulate"),
        "sonic-queuesim" => env!("CARGO_BIN_EXE_sonic-queuesim"),
        _ => unreachable!(),
    };
    let mut c = Command::new(path);
    c.env("RUST_LOG", "warn");
    c
}

fn ok(c: &mut Command) -> String {
    let out = c.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn encode_degrade_decode() {
    let dir = tempfile::tempdir().unwrap();
    let page = dir.path().join("page.wav");
    let degraded = dir.path().join("degraded.wav");
    ok(bin("sonic-encode").args(["--prompt", "how do tides work", "--id", "5", "--out"]).arg(&page));
    ok(bin("sonic-simulate").args(["--rssi", "-85", "--seed", "7", "--in"]).arg(&page).arg("--out").arg(&degraded));

    let a = read_wav(&page).unwrap();
    let b = read_wav(&degraded).unwrap();
    assert_eq!(a.samples.len(), b.samples.len());
    assert_ne!(a.samples, b.samples);
    let again = dir.path().join("again.wav");
    ok(bin("sonic-simulate").args(["--rssi", "-85", "--seed", "7", "--in"]).arg(&page).arg("--out").arg(&again));
    assert_eq!(read_wav(&again).unwrap(), b);

    let out = ok(bin("sonic-decode").arg("--in").arg(&degraded));
    let item: Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(item["id"], 5);
    assert_eq!(item["kind"], "llm_text");
    assert_eq!(item["complete"], true);
}

#[test]
fn simulate_pipes_raw_pcm() {
    let mut child = bin("sonic-simulate")
        .args(["--rssi", "-90", "--seed", "3", "--pcm-stdin", "--pcm-stdout"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let input: Vec<u8> = (0..60_000i32).flat_map(|i| (((i % 200) - 100) as i16 * 100).to_le_bytes()).collect();
    let mut stdin = child.stdin.take().unwrap();
    let feed = input.clone();
    let writer = std::thread::spawn(move || stdin.write_all(&feed).unwrap());
    let out = child.wait_with_output().unwrap();
    writer.join().unwrap();
    assert!(out.status.success());
    assert_eq!(out.stdout.len(), input.len());
    assert_ne!(out.stdout, input);
}

#[test]
fn simulate_rejects_bad_arguments() {
    assert!(!bin("sonic-simulate").args(["--rssi", "-85"]).output().unwrap().status.success());
    assert!(!bin("sonic-simulate").args(["--rssi", "-85", "--pcm-stdin", "--out", "x.wav"]).output().unwrap().status.success());
    assert!(!bin("sonic-simulate").args(["--rssi", "loud", "--pcm-stdin", "--pcm-stdout"]).output().unwrap().status.success());
}

#[test]
fn queuesim_single_run_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("result.json");
    let csv = dir.path().join("result.csv");
    ok(bin("sonic-queuesim").args(["--users", "30", "--freqs", "1", "--seed", "1", "--out"]).arg(&json).arg("--csv").arg(&csv));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(r["users"], 30);
    let series = r["result"]["queue_series"].as_array().unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("minute,queue"));
    assert_eq!(text.lines().count(), series.len() + 1);

    let sweep = dir.path().join("sweep.json");
    let sweep_csv = dir.path().join("sweep.csv");
    ok(bin("sonic-queuesim").args(["--sweep", "--seed", "1", "--out"]).arg(&sweep).arg("--csv").arg(&sweep_csv));
    let runs: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(&sweep).unwrap()).unwrap();
    let labels: Vec<&str> = runs.iter().map(|r| r["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["a", "b", "c", "d"]);
    assert_eq!(runs[1]["result"], r["result"]);
    assert!(runs[2]["result"]["unserved"].as_u64().unwrap() > 0);
    assert_eq!(std::fs::read_to_string(&sweep_csv).unwrap().lines().next(), Some("minute,a,b,c,d"));
}

#[test]
fn queuesim_options() {
    let dir = tempfile::tempdir().unwrap();
    let base: Value = serde_json::from_str(&ok(bin("sonic-queuesim").args(["--users", "15", "--seed", "2"]))).unwrap();
    let pushed: Value =
        serde_json::from_str(&ok(bin("sonic-queuesim").args(["--users", "15", "--seed", "2", "--push", "09:30=10"]))).unwrap();
    assert_eq!(
        pushed["result"]["enqueued"].as_u64().unwrap(),
        base["result"]["enqueued"].as_u64().unwrap() + 10
    );
    let cal = dir.path().join("cal.toml");
    std::fs::write(&cal, "[workload]\ngpt_fraction = 1.0\n").unwrap();
    let all_gpt: Value =
        serde_json::from_str(&ok(bin("sonic-queuesim").args(["--seed", "2", "--calibration"]).arg(&cal))).unwrap();
    assert!(all_gpt["result"]["by_kind"].get("url").is_none());
    assert!(!bin("sonic-queuesim").args(["--freqs", "0"]).output().unwrap().status.success());
    assert!(!bin("sonic-queuesim").args(["--push", "25:00=3"]).output().unwrap().status.success());
    assert!(!bin("sonic-queuesim").args(["--window", "22:00-22:00"]).output().unwrap().status.success());
}

#[test]
fn queuesim_replays_an_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    std::fs::write(&log, "").unwrap();
    let r: Value = serde_json::from_str(&ok(bin("sonic-queuesim").arg("--replay").arg(&log))).unwrap();
    assert_eq!(r["enqueued"], 0);
    std::fs::write(&log, "not json\n").unwrap();
    assert!(!bin("sonic-queuesim").arg("--replay").arg(&log).output().unwrap().status.success());
}

#[test]
fn example_config_matches_defaults() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../sonic.toml");
    let cfg = sonic_daemon::load_config(Some(std::path::Path::new(path))).unwrap();
    assert_eq!(cfg, sonic_core::config::SonicConfig::default());
}
