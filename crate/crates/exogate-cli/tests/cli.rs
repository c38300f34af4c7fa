//! End-to-end CLI behavior: exit codes, overrides, replay, sweeps.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn exogate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exogate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("exogate-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

#[test]
fn validate_accepts_the_shipped_fixtures() {
    for name in ["canonical.json", "canonical_noisy.json"] {
        let out = exogate(&["validate", fixture(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {out:?}");
    }
}

#[test]
fn validate_reports_all_violations_with_exit_1() {
    let dir = temp_dir("validate-bad");
    let text = std::fs::read_to_string(fixture("canonical.json"))
        .unwrap()
        .replace("\"theta_stand\": 0.15", "\"theta_stand\": 0.9")
        .replace("\"m_w\": 40.7", "\"m_w\": -1.0");
    let path = write_file(&dir, "bad.json", &text);
    let out = exogate(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("policy.theta_stand < theta_bend required"),
        "{stderr}"
    );
    assert!(stderr.contains("m_w"), "{stderr}");
}

#[test]
fn parse_errors_exit_1_with_line_context() {
    let dir = temp_dir("parse-bad");
    let path = write_file(&dir, "broken.json", "{\n  \"subject\": ???\n}\n");
    let out = exogate(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "{stderr}");
}

#[test]
fn runtime_divergence_exits_2_with_tick_diagnostic() {
    let dir = temp_dir("diverge");
    let out_dir = dir.join("out");
    let out = exogate(&[
        "run",
        fixture("canonical.json").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--set",
        "mode=coupled",
        "--set",
        "controller.inertia=1e-12",
        "--set",
        "trajectory.intent_kp=1e9",
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("tick"), "{stderr}");
}

#[test]
fn no_exo_zeroes_peak_in_metrics() {
    let out_dir = temp_dir("noexo");
    let out = exogate(&[
        "run",
        fixture("canonical.json").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--no-exo",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(metrics["peak_tau_ass"], serde_json::json!(0.0));
    assert_eq!(metrics["provenance"]["no_exo"], serde_json::json!(true));
}

#[test]
fn no_vision_matches_shadow_behavior() {
    let out_dir = temp_dir("novision");
    let out = exogate(&[
        "run",
        fixture("canonical.json").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--no-vision",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("metrics.json")).unwrap())
            .unwrap();
    // With the gate forced low the latency gain collapses to zero.
    assert_eq!(metrics["latency_gain"], serde_json::json!(0.0));
}

#[test]
fn canonical_metrics_show_positive_latency_gain() {
    let out_dir = temp_dir("gain");
    let out = exogate(&[
        "run",
        fixture("canonical.json").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("metrics.json")).unwrap())
            .unwrap();
    assert!(metrics["latency_gain"].as_f64().unwrap() > 0.0);
}

#[test]
fn replay_reproduces_the_original_log() {
    let run_dir = temp_dir("replay-src");
    let out = exogate(&[
        "run",
        fixture("canonical_noisy.json").to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    let replay_dir = temp_dir("replay-dst");
    let frames = run_dir.join("frames.ndjson");
    let out = exogate(&[
        "replay",
        fixture("canonical_noisy.json").to_str().unwrap(),
        "--frames",
        frames.to_str().unwrap(),
        "--out",
        replay_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    let original = std::fs::read(run_dir.join("log.csv")).unwrap();
    let replayed = std::fs::read(replay_dir.join("log.csv")).unwrap();
    assert_eq!(original, replayed, "replay diverged from the recorded run");
    let original_frames = std::fs::read(run_dir.join("frames.ndjson")).unwrap();
    let replayed_frames = std::fs::read(replay_dir.join("frames.ndjson")).unwrap();
    assert_eq!(original_frames, replayed_frames);
}

#[test]
fn seed_override_changes_noisy_streams() {
    let dir_a = temp_dir("seed-a");
    let dir_b = temp_dir("seed-b");
    for (dir, seed) in [(&dir_a, "7"), (&dir_b, "8")] {
        let out = exogate(&[
            "run",
            fixture("canonical_noisy.json").to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(dir_a.join("frames.ndjson")).unwrap();
    let b = std::fs::read(dir_b.join("frames.ndjson")).unwrap();
    assert_ne!(a, b, "different seeds produced identical noise");
}

#[test]
fn sweep_scales_peak_assistance_with_assist_scale() {
    let out_dir = temp_dir("sweep-gamma");
    let out = exogate(&[
        "sweep",
        fixture("sweep_assist_scale.json").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let aggregate = std::fs::read_to_string(out_dir.join("aggregate.csv")).unwrap();
    let mut lines = aggregate.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("point,policy.assist_scale,onset_latency"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    let peaks: Vec<f64> = rows
        .iter()
        .map(|r| {
            r[header.split(',').position(|c| c == "peak_tau_ass").unwrap()]
                .parse()
                .unwrap()
        })
        .collect();
    assert!(
        peaks[0] < peaks[1] && peaks[1] < peaks[2],
        "peak assistance not increasing in assist_scale: {peaks:?}"
    );
    // Grid points carry the full parameter tuple.
    assert_eq!(rows[0][1], "0.1");
    assert_eq!(rows[2][1], "0.5");
}

#[test]
fn sweep_on_ratio_latency_monotone_under_noise() {
    let dir = temp_dir("sweep-rho");
    let spec = write_file(
        &dir,
        "spec.json",
        &format!(
            r#"{{"base": "{}", "axes": [{{"path": "gate.on_ratio", "values": [0.6, 0.8, 1.0]}}]}}"#,
            fixture("canonical_noisy.json").display()
        ),
    );
    let out_dir = dir.join("out");
    let out = exogate(&[
        "sweep",
        spec.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let aggregate = std::fs::read_to_string(out_dir.join("aggregate.csv")).unwrap();
    let header: Vec<&str> = aggregate.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|c| *c == "onset_latency").unwrap();
    let latencies: Vec<f64> = aggregate
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect();
    assert_eq!(latencies.len(), 3);
    assert!(
        latencies[0] <= latencies[1] && latencies[1] <= latencies[2],
        "stricter dwell must not fire earlier: {latencies:?}"
    );
}

#[test]
fn sweep_cap_refused_with_count() {
    let dir = temp_dir("sweep-cap");
    let values: Vec<String> = (0..101)
        .map(|i| format!("{}", i as f64 * 0.001 + 0.1))
        .collect();
    let spec = write_file(
        &dir,
        "spec.json",
        &format!(
            r#"{{"base": "{}", "axes": [{{"path": "policy.assist_scale", "values": [{}]}}]}}"#,
            fixture("canonical.json").display(),
            values.join(",")
        ),
    );
    let out = exogate(&[
        "sweep",
        spec.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
        "--max-points",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("101"), "{stderr}");
    // Raising the cap lets the same sweep proceed.
    let out = exogate(&[
        "sweep",
        spec.to_str().unwrap(),
        "--out",
        dir.join("out2").to_str().unwrap(),
        "--max-points",
        "101",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
}

#[test]
fn sweep_out_dir_comes_from_the_spec_when_flag_absent() {
    let dir = temp_dir("sweep-outdir");
    let spec = write_file(
        &dir,
        "spec.json",
        &format!(
            r#"{{"base": "{}", "out_dir": "results"}}"#,
            fixture("canonical.json").display()
        ),
    );
    let out = exogate(&["sweep", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(dir.join("results/aggregate.csv").exists());

    // Neither --out nor out_dir is a validation failure.
    let bare = write_file(
        &dir,
        "bare.json",
        &format!(r#"{{"base": "{}"}}"#, fixture("canonical.json").display()),
    );
    let out = exogate(&["sweep", bare.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn empty_axes_sweep_matches_single_run() {
    let dir = temp_dir("sweep-empty");
    let spec = write_file(
        &dir,
        "spec.json",
        &format!(r#"{{"base": "{}"}}"#, fixture("canonical.json").display()),
    );
    let sweep_out = dir.join("sweep");
    let out = exogate(&[
        "sweep",
        spec.to_str().unwrap(),
        "--out",
        sweep_out.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");

    let run_out = dir.join("run");
    let out = exogate(&[
        "run",
        fixture("canonical.json").to_str().unwrap(),
        "--out",
        run_out.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let sweep_log = std::fs::read(sweep_out.join("point_0000/log.csv")).unwrap();
    let run_log = std::fs::read(run_out.join("log.csv")).unwrap();
    assert_eq!(sweep_log, run_log);
    let aggregate = std::fs::read_to_string(sweep_out.join("aggregate.csv")).unwrap();
    assert_eq!(aggregate.lines().count(), 2); // header + single point
}

#[test]
fn unknown_scenario_keys_are_rejected() {
    let dir = temp_dir("unknown-key");
    let text = std::fs::read_to_string(fixture("canonical.json"))
        .unwrap()
        .replace("\"duration\": 11.0", "\"duration\": 11.0, \"extra\": 1");
    let path = write_file(&dir, "extra.json", &text);
    let out = exogate(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
