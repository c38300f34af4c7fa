//! Fixed-timestep scenario execution.
//!
//! One loop at the control period drives the whole pipeline: trunk motion
//! (scripted or the admittance plant itself), perception frames captured at
//! the camera rate and committed to the gate after the detector latency, the
//! task policy, assist ramps, gain scheduling and the admittance step. A
//! shadow controller with the gate forced low runs on the same inputs and
//! produces the posture-only comparison trace.

use std::collections::VecDeque;

use serde::Serialize;

use crate::admittance::{ControllerState, Mode};
use crate::biomech::{self, TrunkAngle};
use crate::error::{Error, Result};
use crate::fsm::{assist_reference, ContributionFlags, PolicyAnomaly, TaskPolicy};
use crate::simkit::perception::{box_held, synth_frame};
use crate::simkit::scenario::{ResolvedScenario, Scenario, SimMode};
use crate::visiongate::{frame_indicators, Frame, GateEdge, GateState};

/// Slack for comparing frame times against the tick grid.
const TIME_EPS: f64 = 1e-9;

/// Synthetic human torque for coupled mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntentTorque {
    /// External torque the admittance law integrates (everything but the
    /// assist itself).
    pub tau_meas: f64,
    /// Residual muscular torque: gravity compensation minus delivered
    /// assistance, plus the PD tracking effort toward the desired motion.
    pub tau_user: f64,
}

/// Models the wearer in coupled mode: they hold the (held-aware) gravity
/// load, subtract whatever the device delivers, and add PD effort to track
/// the desired trajectory. The returned `tau_meas` excludes gravity, which
/// cancels against the gravity-compensation share of the user torque, so the
/// plant motion is assistance-invariant and the three experimental conditions
/// compare on identical kinematics.
#[allow(clippy::too_many_arguments)]
pub fn human_intent_torque(
    subject: &crate::biomech::SubjectParams<f64>,
    theta: f64,
    theta_dot: f64,
    theta_des: f64,
    theta_dot_des: f64,
    tau_ass: f64,
    intent_kp: f64,
    intent_kd: f64,
    box_held: bool,
) -> Result<IntentTorque> {
    let mut tau_gravity = biomech::trunk_gravity_torque(subject, theta)?;
    if box_held {
        tau_gravity += biomech::box_gravity_torque(subject, theta)?;
    }
    let tracking = intent_kp * (theta_des - theta) + intent_kd * (theta_dot_des - theta_dot);
    let tau_user = tau_gravity - tau_ass + tracking;
    Ok(IntentTorque {
        tau_meas: tau_user - tau_gravity,
        tau_user,
    })
}

/// Per-run switches, mirroring the CLI overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Force the gate low for the whole run (posture-only assistance).
    pub force_no_vision: bool,
    /// Force zero assistive torque (unpowered device).
    pub force_no_exo: bool,
    /// Replay a recorded frame stream instead of synthesizing one.
    pub replay_frames: Option<Vec<Frame<f64>>>,
}

/// One control-tick record. Column order of the CSV log follows field order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRow {
    pub t: f64,
    pub theta_w: f64,
    pub theta_dot_w: f64,
    pub theta_ref: f64,
    pub state: u8,
    pub alpha_w: bool,
    pub alpha_b: bool,
    pub gate: bool,
    pub tau_w: f64,
    pub tau_box: f64,
    pub tau_ass_ref: f64,
    pub tau_ass: f64,
    pub k: f64,
    pub c: f64,
    pub mode: Mode,
    pub tau_meas: f64,
    pub tau_user: f64,
}

/// Shadow-controller record: enough to overlay the posture-only assistance
/// against the vision-gated trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowRow {
    pub t: f64,
    pub state: u8,
    pub alpha_w: bool,
    pub alpha_b: bool,
    pub tau_ass_ref: f64,
    pub tau_ass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    /// Gate rose while standing without a box; Table-style transitions have
    /// no edge for it.
    GateWhileStandNoBox,
    /// Gate dropped while carrying; the state is kept and the drop recorded.
    GateLostWithBox,
    /// Assistance exceeded the gravitational load (negative residual effort).
    Overcompensation,
    /// Measured trunk angle left `[0, pi/2]` and was clamped.
    TrunkAngleClamped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    GateRising,
    GateFalling,
    FsmTransition { from: u8, to: u8 },
    ShadowFsmTransition { from: u8, to: u8 },
    AssistRetarget { target: f64 },
    Anomaly { what: AnomalyKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEvent {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Full record of one run.
#[derive(Debug, Clone)]
pub struct SimLog {
    /// Control period the rows are spaced at.
    pub dt: f64,
    pub rows: Vec<TickRow>,
    pub shadow: Vec<ShadowRow>,
    pub events: Vec<SimEvent>,
    /// Every perception frame captured during the run, replayable as a
    /// stream.
    pub frames: Vec<Frame<f64>>,
}

struct FramePipeline {
    /// Frames waiting for their commit time, oldest first.
    pending: VecDeque<(f64, Frame<f64>)>,
    /// Next synthetic frame index; `None` when replaying a recorded stream.
    next_capture: Option<u64>,
    frame_period: f64,
    latency: f64,
}

impl FramePipeline {
    fn synth(fps: f64, latency_frames: u32) -> Self {
        FramePipeline {
            pending: VecDeque::new(),
            next_capture: Some(0),
            frame_period: 1.0 / fps,
            latency: latency_frames as f64 / fps,
        }
    }

    fn replay(frames: Vec<Frame<f64>>, fps: f64, latency_frames: u32) -> Self {
        let latency = latency_frames as f64 / fps;
        FramePipeline {
            pending: frames.into_iter().map(|f| (f.t + latency, f)).collect(),
            next_capture: None,
            frame_period: 1.0 / fps,
            latency,
        }
    }
}

/// Runs a scenario to completion.
///
/// Aborts with a tick diagnostic if any state variable goes non-finite; a
/// zero-duration scenario yields an empty log.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<SimLog> {
    let rs = scenario.resolved()?;
    run_resolved(&rs, opts)
}

pub fn run_resolved(rs: &ResolvedScenario, opts: &RunOptions) -> Result<SimLog> {
    let cfg = rs.controller;
    let dt = cfg.dt;
    let n_ticks = (rs.duration / dt).round().max(0.0) as usize;

    let theta0 = rs.trajectory.sample(0.0).0;
    let mut main = ControllerState::new(theta0, &cfg);
    let mut shadow = ControllerState::new(theta0, &cfg);
    let mut policy_main = TaskPolicy::<f64>::new();
    let mut policy_shadow = TaskPolicy::<f64>::new();
    let mut gate_state = GateState::new(&rs.gate);

    let mut pipeline = match &opts.replay_frames {
        Some(frames) => FramePipeline::replay(
            frames.clone(),
            rs.perception.fps,
            rs.perception.latency_frames,
        ),
        None => FramePipeline::synth(rs.perception.fps, rs.perception.latency_frames),
    };

    let mut log = SimLog {
        dt,
        rows: Vec::with_capacity(n_ticks),
        shadow: Vec::with_capacity(n_ticks),
        events: Vec::new(),
        frames: match &opts.replay_frames {
            Some(frames) => frames.clone(),
            None => Vec::new(),
        },
    };

    let mut prev_eff_main = ContributionFlags::NONE;
    let mut prev_eff_shadow = ContributionFlags::NONE;
    let mut overcompensating = false;
    let mut clamping = false;

    for tick in 0..n_ticks {
        let t = tick as f64 * dt;

        // Measured trunk motion: the script in scripted mode, the admittance
        // plant itself in coupled mode. Excursions outside [0, pi/2] are
        // clamped for the downstream consumers and flagged once per episode.
        let (raw_theta, raw_theta_dot) = match rs.mode {
            SimMode::Scripted => rs.trajectory.sample(t),
            SimMode::Coupled => (main.theta, main.theta_dot),
        };
        let (angle, clamped) = TrunkAngle::clamped(raw_theta, raw_theta_dot);
        if clamped && !clamping {
            log.events.push(SimEvent {
                t,
                kind: EventKind::Anomaly {
                    what: AnomalyKind::TrunkAngleClamped,
                },
            });
        }
        clamping = clamped;
        let theta_w = angle.theta_w;
        let theta_dot_w = angle.theta_dot_w;

        // Capture synthetic frames that are due, at the camera rate, using
        // the trunk angle the camera would see right now.
        if let Some(next) = pipeline.next_capture {
            let mut k = next;
            while k as f64 * pipeline.frame_period <= t + TIME_EPS {
                let t_frame = k as f64 / rs.perception.fps;
                let held = box_held(&rs.grasp_events, t_frame);
                let frame = synth_frame(
                    &rs.perception,
                    k,
                    t_frame,
                    theta_w,
                    held,
                    rs.policy.theta_bend,
                );
                pipeline
                    .pending
                    .push_back((t_frame + pipeline.latency, frame.clone()));
                log.frames.push(frame);
                k += 1;
            }
            pipeline.next_capture = Some(k);
        }

        // Feed committed frames to the gate; the control loop only ever sees
        // the latest committed value (zero-order hold).
        if !opts.force_no_vision {
            while let Some((commit_t, _)) = pipeline.pending.front() {
                if *commit_t > t + TIME_EPS {
                    break;
                }
                let (commit_t, frame) = pipeline.pending.pop_front().unwrap();
                let (chi_plus, chi_minus) = frame_indicators(&frame, rs.gate.min_confidence)?;
                if let Some(edge) = gate_state.step(chi_plus, chi_minus, &rs.gate) {
                    log.events.push(SimEvent {
                        t: commit_t,
                        kind: match edge {
                            GateEdge::Rising => EventKind::GateRising,
                            GateEdge::Falling => EventKind::GateFalling,
                        },
                    });
                }
            }
        }
        let gate = gate_state.gate() && !opts.force_no_vision;

        // Task policies: the vision-gated one and the posture-only shadow.
        let tick_main = policy_main.step(
            theta_w,
            theta_dot_w,
            gate,
            cfg.vel_threshold,
            dt,
            &rs.policy,
        );
        if let Some((from, to)) = tick_main.transition {
            log.events.push(SimEvent {
                t,
                kind: EventKind::FsmTransition {
                    from: from.index(),
                    to: to.index(),
                },
            });
        }
        if let Some(anomaly) = tick_main.anomaly {
            log.events.push(SimEvent {
                t,
                kind: EventKind::Anomaly {
                    what: match anomaly {
                        PolicyAnomaly::GateWhileStandNoBox => AnomalyKind::GateWhileStandNoBox,
                        PolicyAnomaly::GateLostWithBox => AnomalyKind::GateLostWithBox,
                    },
                },
            });
        }
        let tick_shadow = policy_shadow.step(
            theta_w,
            theta_dot_w,
            false,
            cfg.vel_threshold,
            dt,
            &rs.policy,
        );
        if let Some((from, to)) = tick_shadow.transition {
            log.events.push(SimEvent {
                t,
                kind: EventKind::ShadowFsmTransition {
                    from: from.index(),
                    to: to.index(),
                },
            });
        }

        // The box term is delivered only while the gate authorizes it.
        let eff_main = ContributionFlags {
            trunk: tick_main.flags.trunk,
            load: tick_main.flags.load && gate,
        };
        let eff_shadow = ContributionFlags {
            trunk: tick_shadow.flags.trunk,
            load: false,
        };

        let exo_scale = if opts.force_no_exo { 0.0 } else { 1.0 };
        let tau_ref_main =
            exo_scale * assist_reference(&rs.subject, theta_w, eff_main, rs.policy.assist_scale)?;
        let tau_ref_shadow =
            exo_scale * assist_reference(&rs.subject, theta_w, eff_shadow, rs.policy.assist_scale)?;

        // A change in the selected contributions is a retarget event: the
        // assist ramp re-anchors from the torque currently delivered.
        if eff_main != prev_eff_main {
            main.begin_assist_ramp(t);
            log.events.push(SimEvent {
                t,
                kind: EventKind::AssistRetarget {
                    target: tau_ref_main,
                },
            });
        }
        if eff_shadow != prev_eff_shadow {
            shadow.begin_assist_ramp(t);
        }
        prev_eff_main = eff_main;
        prev_eff_shadow = eff_shadow;

        main.track_assist(tau_ref_main, t, &cfg);
        shadow.track_assist(tau_ref_shadow, t, &cfg);
        main.schedule_gains(theta_dot_w, t, &cfg)?;
        shadow.schedule_gains(theta_dot_w, t, &cfg)?;
        main.update_reference(theta_w, theta_dot_w, &cfg);
        shadow.update_reference(theta_w, theta_dot_w, &cfg);

        let tau_w = biomech::trunk_gravity_torque(&rs.subject, theta_w)?;
        let tau_box = biomech::box_gravity_torque(&rs.subject, theta_w)?;
        let held = box_held(&rs.grasp_events, t);
        let tau_g_held = tau_w + if held { tau_box } else { 0.0 };

        // Residual user effort and the torque the admittance law integrates.
        // Scripted runs synthesize the quasi-static residual; coupled runs
        // use the synthetic human intent model on the plant state.
        let (tau_meas, tau_user) = match rs.mode {
            SimMode::Scripted => {
                let residual = tau_g_held - main.tau_ass_current;
                (residual, residual)
            }
            SimMode::Coupled => {
                let (theta_des, theta_dot_des) = rs.trajectory.sample(t);
                let intent = human_intent_torque(
                    &rs.subject,
                    main.theta,
                    main.theta_dot,
                    theta_des,
                    theta_dot_des,
                    main.tau_ass_current,
                    rs.intent_kp,
                    rs.intent_kd,
                    held,
                )?;
                (intent.tau_meas, intent.tau_user)
            }
        };
        if tau_user < 0.0 && !overcompensating {
            log.events.push(SimEvent {
                t,
                kind: EventKind::Anomaly {
                    what: AnomalyKind::Overcompensation,
                },
            });
        }
        overcompensating = tau_user < 0.0;

        main.step_admittance(tau_meas, dt, &cfg)?;
        if rs.mode == SimMode::Scripted {
            let shadow_meas = tau_g_held - shadow.tau_ass_current;
            shadow.step_admittance(shadow_meas, dt, &cfg)?;
        }

        for (variable, value) in [
            ("theta", main.theta),
            ("theta_dot", main.theta_dot),
            ("theta_ref", main.theta_ref),
            ("tau_ass", main.tau_ass_current),
            ("k", main.k_current),
            ("c", main.c_current),
            ("tau_meas", tau_meas),
        ] {
            if !value.is_finite() {
                return Err(Error::SimAbort { tick, t, variable });
            }
        }

        log.rows.push(TickRow {
            t,
            theta_w,
            theta_dot_w,
            theta_ref: main.theta_ref,
            state: tick_main.state.index(),
            alpha_w: eff_main.trunk,
            alpha_b: eff_main.load,
            gate,
            tau_w,
            tau_box,
            tau_ass_ref: tau_ref_main,
            tau_ass: main.tau_ass_current,
            k: main.k_current,
            c: main.c_current,
            mode: main.mode,
            tau_meas,
            tau_user,
        });
        log.shadow.push(ShadowRow {
            t,
            state: tick_shadow.state.index(),
            alpha_w: eff_shadow.trunk,
            alpha_b: eff_shadow.load,
            tau_ass_ref: tau_ref_shadow,
            tau_ass: shadow.tau_ass_current,
        });
    }

    Ok(log)
}
