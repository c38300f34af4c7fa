//! Cartesian parameter sweeps.
//!
//! A sweep spec names a base scenario and a list of axes (dotted parameter
//! path plus value list). Every grid point runs independently — points are
//! distributed over a small worker pool — and lands in its own subdirectory,
//! with one aggregate CSV row per point carrying the full parameter tuple.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Deserialize;
use serde_json::Value;

use exogate_core::simkit::logio::{fmt9, log_to_csv, metrics_to_json, shadow_to_csv};
use exogate_core::simkit::{compute_metrics, run_scenario, Metrics, RunOptions, Scenario};
use exogate_core::visiongate::write_frames;

use crate::runfiles::write_atomic;
use crate::{diag, overrides, CliError};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Base scenario path, relative to the spec file's directory.
    pub base: String,
    #[serde(default)]
    pub axes: Vec<SweepAxis>,
    /// Default output directory (relative to the spec file); `--out` wins.
    #[serde(default)]
    pub out_dir: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted parameter path into the scenario document.
    pub path: String,
    pub values: Vec<Value>,
}

struct PointResult {
    metrics: Metrics,
}

pub fn cmd_sweep(
    spec_path: &Path,
    out: Option<&Path>,
    max_points: usize,
    extra_set: &[String],
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| CliError::validation(format!("{}: {e}", spec_path.display())))?;
    let spec: SweepSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: {e}", spec_path.display())))?;

    let spec_dir = spec_path.parent().unwrap_or_else(|| Path::new("."));
    let out: PathBuf = match (out, &spec.out_dir) {
        (Some(path), _) => path.to_path_buf(),
        (None, Some(dir)) => spec_dir.join(dir),
        (None, None) => {
            return Err(CliError::validation(
                "no output directory: pass --out or set out_dir in the sweep spec".to_string(),
            ))
        }
    };
    let out = out.as_path();

    for axis in &spec.axes {
        if axis.values.is_empty() {
            return Err(CliError::validation(format!(
                "sweep axis '{}' has no values",
                axis.path
            )));
        }
    }
    let grid_size: usize = spec.axes.iter().map(|a| a.values.len()).product();
    if grid_size > max_points {
        return Err(CliError::validation(format!(
            "sweep grid has {grid_size} points, above the cap of {max_points}; \
             raise --max-points to run it anyway"
        )));
    }

    let base_path = spec_dir.join(&spec.base);
    let base_text = std::fs::read_to_string(&base_path)
        .map_err(|e| CliError::validation(format!("{}: {e}", base_path.display())))?;
    let mut base_doc: Value = serde_json::from_str(&base_text)
        .map_err(|e| CliError::validation(format!("{}: {e}", base_path.display())))?;
    for assignment in extra_set {
        overrides::apply_assignment(&mut base_doc, assignment).map_err(CliError::validation)?;
    }

    std::fs::create_dir_all(out)
        .map_err(|e| CliError::runtime(format!("{}: {e}", out.display())))?;

    diag::info(format!(
        "sweeping {grid_size} point(s) into {}",
        out.display()
    ));

    // Points are independent; run them on a small pool and reassemble in
    // grid order so the aggregate is identical however the work interleaves.
    let results: Vec<Mutex<Option<Result<PointResult, CliError>>>> =
        (0..grid_size).map(|_| Mutex::new(None)).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(grid_size.max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if idx >= grid_size {
                    break;
                }
                let outcome = run_point(&spec, &base_doc, idx, out);
                *results[idx].lock().unwrap() = Some(outcome);
            });
        }
    });

    let mut rows = Vec::with_capacity(grid_size);
    for (idx, slot) in results.into_iter().enumerate() {
        match slot.into_inner().unwrap() {
            Some(Ok(point)) => rows.push(point),
            Some(Err(e)) => {
                return Err(CliError {
                    code: e.code,
                    message: format!("point {idx:04}: {}", e.message),
                })
            }
            None => return Err(CliError::runtime(format!("point {idx:04} never ran"))),
        }
    }

    let aggregate = aggregate_csv(&spec, &rows);
    let aggregate_path = out.join("aggregate.csv");
    write_atomic(&aggregate_path, aggregate.as_bytes())
        .map_err(|e| CliError::runtime(format!("{}: {e}", aggregate_path.display())))?;

    println!("{grid_size} point(s) written to {}", out.display());
    Ok(())
}

/// Decomposes a grid index into one value index per axis (first axis slowest).
fn axis_indices(spec: &SweepSpec, mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; spec.axes.len()];
    for (i, axis) in spec.axes.iter().enumerate().rev() {
        out[i] = idx % axis.values.len();
        idx /= axis.values.len();
    }
    out
}

fn run_point(
    spec: &SweepSpec,
    base_doc: &Value,
    idx: usize,
    out: &Path,
) -> Result<PointResult, CliError> {
    let mut doc = base_doc.clone();
    let mut assignments = Vec::new();
    for (axis, value_idx) in spec.axes.iter().zip(axis_indices(spec, idx)) {
        let value = &axis.values[value_idx];
        let assignment = format!("{}={}", axis.path, serde_json::to_string(value).unwrap());
        overrides::apply_assignment(&mut doc, &assignment).map_err(CliError::validation)?;
        assignments.push(assignment);
    }

    let scenario: Scenario =
        serde_json::from_value(doc).map_err(|e| CliError::validation(e.to_string()))?;
    let violations = scenario.violations();
    if !violations.is_empty() {
        return Err(CliError::validation(violations.join("; ")));
    }

    let log = run_scenario(&scenario, &RunOptions::default()).map_err(CliError::from)?;
    let resolved = scenario.resolved().map_err(CliError::from)?;
    let metrics = compute_metrics(&log, &resolved);

    let dir = point_dir(out, idx);
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;

    let mut metrics_doc = metrics_to_json(&metrics);
    metrics_doc.as_object_mut().unwrap().insert(
        "provenance".to_string(),
        serde_json::json!({
            "point": idx,
            "assignments": assignments,
            "seed": scenario.perception.seed,
            "gate": serde_json::to_value(scenario.gate).unwrap(),
            "perception": serde_json::to_value(scenario.perception).unwrap(),
        }),
    );

    let mut frames_buf = Vec::new();
    write_frames(&mut frames_buf, &log.frames).map_err(CliError::from)?;
    let events_doc = exogate_core::simkit::logio::events_to_json(&log.events);
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
        let path = dir.join(name);
        write_atomic(&path, &content)
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
    }

    Ok(PointResult { metrics })
}

pub fn point_dir(out: &Path, idx: usize) -> PathBuf {
    out.join(format!("point_{idx:04}"))
}

fn opt9(x: Option<f64>) -> String {
    x.map(fmt9).unwrap_or_default()
}

fn aggregate_csv(spec: &SweepSpec, rows: &[PointResult]) -> String {
    let mut out = String::new();
    out.push_str("point");
    for axis in &spec.axes {
        out.push(',');
        out.push_str(&axis.path);
    }
    out.push_str(
        ",onset_latency,latency_novis,latency_gain,peak_tau_ass,tau_user_integral,tau_user_integral_novis,tau_user_integral_noexo\n",
    );
    for (idx, row) in rows.iter().enumerate() {
        out.push_str(&format!("{idx}"));
        for (axis, value_idx) in spec.axes.iter().zip(axis_indices(spec, idx)) {
            out.push(',');
            out.push_str(&serde_json::to_string(&axis.values[value_idx]).unwrap());
        }
        let m = &row.metrics;
        out.push_str(&format!(
            ",{},{},{},{},{},{},{}\n",
            opt9(m.onset_latency),
            opt9(m.latency_novis),
            opt9(m.latency_gain),
            fmt9(m.peak_tau_ass),
            fmt9(m.tau_user_integral),
            fmt9(m.tau_user_integral_novis),
            fmt9(m.tau_user_integral_noexo),
        ));
    }
    out
}
