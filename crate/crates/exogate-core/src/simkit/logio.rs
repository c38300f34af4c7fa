//! Serialized forms of logs and metrics.
//!
//! Every float is printed with 9 significant digits so that repeated runs of
//! the same scenario produce byte-identical artifacts that can be compared by
//! hash.

use serde_json::{json, Map, Value};

use crate::admittance::Mode;
use crate::simkit::metrics::Metrics;
use crate::simkit::runner::{SimEvent, SimLog};

/// 9-significant-digit rendering used in CSV output.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 {
        // Collapse -0.0 so signs of zero cannot differ between runs.
        return "0.00000000e0".to_string();
    }
    format!("{x:.8e}")
}

/// Rounds to 9 significant digits for JSON output.
pub fn sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

fn opt_sig9(x: Option<f64>) -> Value {
    match x {
        Some(v) => json!(sig9(v)),
        None => Value::Null,
    }
}

/// Renders the per-tick log as CSV with the fixed column set.
pub fn log_to_csv(log: &SimLog) -> String {
    let mut out = String::with_capacity(log.rows.len() * 200 + 256);
    out.push_str(
        "t,theta_w,theta_dot_w,theta_ref,state,alpha_w,alpha_b,gate,tau_w,tau_box,tau_ass_ref,tau_ass,K,C,mode,tau_meas,tau_user\n",
    );
    for r in &log.rows {
        let mode = match r.mode {
            Mode::Soft => "soft",
            Mode::Hard => "hard",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt9(r.t),
            fmt9(r.theta_w),
            fmt9(r.theta_dot_w),
            fmt9(r.theta_ref),
            r.state,
            r.alpha_w as u8,
            r.alpha_b as u8,
            r.gate as u8,
            fmt9(r.tau_w),
            fmt9(r.tau_box),
            fmt9(r.tau_ass_ref),
            fmt9(r.tau_ass),
            fmt9(r.k),
            fmt9(r.c),
            mode,
            fmt9(r.tau_meas),
            fmt9(r.tau_user),
        ));
    }
    out
}

/// Shadow-trace CSV (posture-only controller on the same inputs).
pub fn shadow_to_csv(log: &SimLog) -> String {
    let mut out = String::with_capacity(log.shadow.len() * 80 + 64);
    out.push_str("t,state,alpha_w,alpha_b,tau_ass_ref,tau_ass\n");
    for r in &log.shadow {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt9(r.t),
            r.state,
            r.alpha_w as u8,
            r.alpha_b as u8,
            fmt9(r.tau_ass_ref),
            fmt9(r.tau_ass),
        ));
    }
    out
}

/// Metrics as a JSON value; the caller may attach a provenance block before
/// writing.
pub fn metrics_to_json(m: &Metrics) -> Value {
    let state_names = [
        "stand_no_box",
        "bend_to_pick",
        "stand_with_box",
        "bend_to_place",
    ];
    let mut durations = Map::new();
    for (name, secs) in state_names.iter().zip(m.state_durations.iter()) {
        durations.insert(name.to_string(), json!(sig9(*secs)));
    }
    json!({
        "onset_latency": opt_sig9(m.onset_latency),
        "latency_novis": opt_sig9(m.latency_novis),
        "latency_gain": opt_sig9(m.latency_gain),
        "peak_tau_ass": sig9(m.peak_tau_ass),
        "tau_user_integral": sig9(m.tau_user_integral),
        "tau_user_integral_novis": sig9(m.tau_user_integral_novis),
        "tau_user_integral_noexo": sig9(m.tau_user_integral_noexo),
        "state_durations": Value::Object(durations),
        "gate_edges": {
            "rising": m.rising_edges.iter().map(|&t| json!(sig9(t))).collect::<Vec<_>>(),
            "falling": m.falling_edges.iter().map(|&t| json!(sig9(t))).collect::<Vec<_>>(),
        },
        "partial": m.partial,
    })
}

/// Event list as a JSON value.
pub fn events_to_json(events: &[SimEvent]) -> Value {
    let rows: Vec<Value> = events
        .iter()
        .map(|e| {
            let mut v = serde_json::to_value(e).expect("event serializes");
            if let Some(obj) = v.as_object_mut() {
                if let Some(t) = obj.get_mut("t") {
                    *t = json!(sig9(t.as_f64().unwrap_or(f64::NAN)));
                }
                if let Some(target) = obj.get_mut("target") {
                    *target = json!(sig9(target.as_f64().unwrap_or(f64::NAN)));
                }
            }
            v
        })
        .collect();
    json!({ "events": rows })
}
