//! Single-run execution and artifact writing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use exogate_core::simkit::logio::{log_to_csv, metrics_to_json, shadow_to_csv, sig9};
use exogate_core::simkit::{compute_metrics, run_scenario, Metrics, RunOptions, Scenario};
use exogate_core::visiongate::{write_frames, Frame};

use crate::diag;
use crate::{load_patched_scenario, CliError, RunArgs};

/// Writes `content` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn write_atomic(path: &Path, content: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn provenance(
    scenario_path: &Path,
    scenario: &Scenario,
    applied: &[String],
    args: &RunArgs,
    replayed: bool,
) -> Value {
    json!({
        "scenario": scenario_path.display().to_string(),
        "seed": scenario.perception.seed,
        "overrides": applied,
        "no_vision": args.no_vision,
        "no_exo": args.no_exo,
        "replayed_frames": replayed,
        "gate": serde_json::to_value(scenario.gate).expect("gate serializes"),
        "perception": serde_json::to_value(scenario.perception).expect("perception serializes"),
    })
}

/// Runs one scenario and writes `log.csv`, `shadow.csv`, `metrics.json`,
/// `events.json`, and `frames.ndjson` into `out`.
pub fn cmd_run(
    scenario_path: &Path,
    args: &RunArgs,
    replay_frames: Option<Vec<Frame<f64>>>,
) -> Result<(), CliError> {
    let (scenario, applied) = load_patched_scenario(scenario_path, &args.set, args.seed)?;
    let replayed = replay_frames.is_some();
    let opts = RunOptions {
        force_no_vision: args.no_vision,
        force_no_exo: args.no_exo,
        replay_frames,
    };

    diag::info(format!(
        "running {} (seed {})",
        scenario_path.display(),
        scenario.perception.seed
    ));
    let log = run_scenario(&scenario, &opts).map_err(CliError::from)?;
    let resolved = scenario.resolved().map_err(CliError::from)?;
    let metrics = compute_metrics(&log, &resolved);

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::runtime(format!("{}: {e}", args.out.display())))?;

    let mut metrics_doc = metrics_to_json(&metrics);
    metrics_doc.as_object_mut().unwrap().insert(
        "provenance".to_string(),
        provenance(scenario_path, &scenario, &applied, args, replayed),
    );

    let events_doc = exogate_core::simkit::logio::events_to_json(&log.events);

    let mut frames_buf = Vec::new();
    write_frames(&mut frames_buf, &log.frames).map_err(CliError::from)?;

    let writes: [(&str, Vec<u8>); 5] = [
        ("log.csv", log_to_csv(&log).into_bytes()),
        ("shadow.csv", shadow_to_csv(&log).into_bytes()),
        (
            "metrics.json",
            format!("{}\n", serde_json::to_string_pretty(&metrics_doc).unwrap()).into_bytes(),
        ),
        (
            "events.json",
            format!("{}\n", serde_json::to_string_pretty(&events_doc).unwrap()).into_bytes(),
        ),
        ("frames.ndjson", frames_buf),
    ];
    for (name, content) in writes {
        let path = args.out.join(name);
        write_atomic(&path, &content)
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    }

    print_summary(&metrics);
    Ok(())
}

fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{}", sig9(v)),
        None => "n/a".to_string(),
    }
}

fn print_summary(m: &Metrics) {
    println!("onset_latency:        {}", fmt_opt(m.onset_latency));
    println!("latency_novis:        {}", fmt_opt(m.latency_novis));
    println!("latency_gain:         {}", fmt_opt(m.latency_gain));
    println!("peak_tau_ass:         {}", sig9(m.peak_tau_ass));
    println!("tau_user_integral:    {}", sig9(m.tau_user_integral));
    println!(
        "tau_user_integral_novis: {}",
        sig9(m.tau_user_integral_novis)
    );
    println!(
        "tau_user_integral_noexo: {}",
        sig9(m.tau_user_integral_noexo)
    );
    if m.partial {
        println!("note: no grasp event; latency metrics unavailable");
    }
}

/// Output paths of one run, for tests and sweep bookkeeping.
pub fn artifact_paths(out: &Path) -> [PathBuf; 5] {
    [
        out.join("log.csv"),
        out.join("shadow.csv"),
        out.join("metrics.json"),
        out.join("events.json"),
        out.join("frames.ndjson"),
    ]
}
