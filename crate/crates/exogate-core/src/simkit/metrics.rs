//! Metric extraction from simulation logs.

use crate::simkit::runner::{EventKind, SimLog};
use crate::simkit::scenario::ResolvedScenario;

/// Scenario-level outcome metrics.
///
/// Latencies measure the delay from the grasp instant to the first tick of
/// trunk support in `stand_with_box`; the same measurement on the shadow
/// trace gives the posture-only figure, and their difference is the gain
/// earned by the gate. Effort integrals are trapezoidal sums of the residual
/// user torque magnitude: as delivered, with the shadow's assistance swapped
/// in, and with assistance removed entirely.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub onset_latency: Option<f64>,
    pub latency_novis: Option<f64>,
    pub latency_gain: Option<f64>,
    pub peak_tau_ass: f64,
    pub tau_user_integral: f64,
    pub tau_user_integral_novis: f64,
    pub tau_user_integral_noexo: f64,
    /// Seconds spent in each task state, indexed 0..=3.
    pub state_durations: [f64; 4],
    pub rising_edges: Vec<f64>,
    pub falling_edges: Vec<f64>,
    /// True when latency metrics could not be computed (no grasp event).
    pub partial: bool,
}

fn trapezoid<F: Fn(usize) -> f64>(n: usize, dt: f64, f: F) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n - 1 {
        acc += 0.5 * (f(i) + f(i + 1)) * dt;
    }
    acc
}

pub fn compute_metrics(log: &SimLog, scenario: &ResolvedScenario) -> Metrics {
    let n = log.rows.len();
    let dt = log.dt;

    let t_grasp = scenario.grasp_events.first().map(|&(start, _)| start);
    let onset_vis = log
        .rows
        .iter()
        .find(|r| r.state == 2 && r.alpha_w)
        .map(|r| r.t);
    let onset_novis = log
        .shadow
        .iter()
        .find(|r| r.state == 2 && r.alpha_w)
        .map(|r| r.t);

    let (onset_latency, latency_novis) = match t_grasp {
        Some(tg) => (onset_vis.map(|t| t - tg), onset_novis.map(|t| t - tg)),
        None => (None, None),
    };
    let latency_gain = match (onset_latency, latency_novis) {
        (Some(vis), Some(novis)) => Some(novis - vis),
        _ => None,
    };

    let peak_tau_ass = log.rows.iter().map(|r| r.tau_ass).fold(0.0, f64::max);

    let tau_user_integral = trapezoid(n, dt, |i| log.rows[i].tau_user.abs());
    let tau_user_integral_novis = trapezoid(n, dt, |i| {
        (log.rows[i].tau_user + log.rows[i].tau_ass - log.shadow[i].tau_ass).abs()
    });
    let tau_user_integral_noexo = trapezoid(n, dt, |i| {
        (log.rows[i].tau_user + log.rows[i].tau_ass).abs()
    });

    let mut state_durations = [0.0; 4];
    for row in &log.rows {
        state_durations[row.state as usize] += dt;
    }

    let mut rising_edges = Vec::new();
    let mut falling_edges = Vec::new();
    for event in &log.events {
        match event.kind {
            EventKind::GateRising => rising_edges.push(event.t),
            EventKind::GateFalling => falling_edges.push(event.t),
            _ => {}
        }
    }

    Metrics {
        onset_latency,
        latency_novis,
        latency_gain,
        peak_tau_ass,
        tau_user_integral,
        tau_user_integral_novis,
        tau_user_integral_noexo,
        state_durations,
        rising_edges,
        falling_edges,
        partial: t_grasp.is_none() || onset_latency.is_none() || latency_novis.is_none(),
    }
}
