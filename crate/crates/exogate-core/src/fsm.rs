//! Four-state task policy for the stoop cycle.
//!
//! The cycle is `stand_no_box -> bend_to_pick -> stand_with_box ->
//! bend_to_place -> stand_no_box`, driven by two posture thresholds and the
//! binary grasp gate. Each state selects which gravity-torque contributions
//! (trunk weight, box) feed the assistance reference; the box contribution is
//! only ever delivered while the gate is high.

use serde::{Deserialize, Serialize};

use crate::biomech::{self, SubjectParams};
use crate::error::{Error, Result};
use crate::real::{real, Real};

/// Task state, cycling `0 -> 1 -> 2 -> 3 -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    StandNoBox,
    BendToPick,
    StandWithBox,
    BendToPlace,
}

impl TaskState {
    pub const ALL: [TaskState; 4] = [
        TaskState::StandNoBox,
        TaskState::BendToPick,
        TaskState::StandWithBox,
        TaskState::BendToPlace,
    ];

    pub fn index(self) -> u8 {
        match self {
            TaskState::StandNoBox => 0,
            TaskState::BendToPick => 1,
            TaskState::StandWithBox => 2,
            TaskState::BendToPlace => 3,
        }
    }
}

/// Which torque contributions the policy currently selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ContributionFlags {
    /// Trunk-weight term active.
    pub trunk: bool,
    /// Box term active (still masked by the gate at delivery time).
    pub load: bool,
}

impl ContributionFlags {
    pub const NONE: ContributionFlags = ContributionFlags {
        trunk: false,
        load: false,
    };

    /// Contributions attached to entering a state: `bend_to_pick` none,
    /// `stand_with_box` both, `bend_to_place` box only, `stand_no_box` trunk
    /// only (the stand-up support after placing the box).
    pub fn on_entry(state: TaskState) -> ContributionFlags {
        match state {
            TaskState::StandNoBox => ContributionFlags {
                trunk: true,
                load: false,
            },
            TaskState::BendToPick => ContributionFlags::NONE,
            TaskState::StandWithBox => ContributionFlags {
                trunk: true,
                load: true,
            },
            TaskState::BendToPlace => ContributionFlags {
                trunk: false,
                load: true,
            },
        }
    }
}

/// Posture thresholds and assistance scaling for the task policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig<T> {
    /// Lumbar angle of the upright standing posture (rad).
    pub theta_stand: T,
    /// Lumbar angle at the end of a forward bend (rad).
    pub theta_bend: T,
    /// Global assistance scaling in `(0, 1]`; keeps the user engaged and the
    /// hardware within its torque limits.
    pub assist_scale: T,
    /// Quiet time at stand (angle below `theta_stand`, velocity below the
    /// controller threshold) after which the stand-up support is released (s).
    pub release_hold: T,
}

impl<T: Real> Default for PolicyConfig<T> {
    fn default() -> Self {
        PolicyConfig {
            theta_stand: real(0.15),
            theta_bend: real(0.7),
            assist_scale: real(0.25),
            release_hold: real(0.5),
        }
    }
}

impl<T: Real> PolicyConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.theta_stand >= self.theta_bend
            || self.theta_stand.is_nan()
            || self.theta_bend.is_nan()
        {
            problems.push("theta_stand < theta_bend required".to_string());
        }
        if self.assist_scale <= T::zero()
            || self.assist_scale > T::one()
            || self.assist_scale.is_nan()
        {
            problems.push("assist_scale must be in (0, 1]".to_string());
        }
        if self.release_hold < T::zero() || self.release_hold.is_nan() {
            problems.push("release_hold must be >= 0".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(problems.join("; ")))
        }
    }
}

/// Outcome of one policy evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FsmStep {
    /// State after the evaluation.
    pub next: TaskState,
    /// Contributions of the state just entered; `None` on a self-loop.
    pub entered: Option<ContributionFlags>,
}

/// Posture part of a state's exit trigger: the bend threshold leaves the two
/// standing states, the stand threshold leaves the two bent states.
/// Comparisons are inclusive.
fn theta_condition<T: Real>(state: TaskState, theta: T, cfg: &PolicyConfig<T>) -> bool {
    match state {
        TaskState::StandNoBox | TaskState::StandWithBox => theta >= cfg.theta_bend,
        TaskState::BendToPick | TaskState::BendToPlace => theta <= cfg.theta_stand,
    }
}

/// Gate part of a state's exit trigger: a high gate completes the pick, a low
/// gate completes the place. The two standing states ignore the gate.
fn gate_condition(state: TaskState, gate: bool) -> bool {
    match state {
        TaskState::BendToPick => gate,
        TaskState::BendToPlace => !gate,
        _ => false,
    }
}

fn next_in_cycle(state: TaskState) -> TaskState {
    match state {
        TaskState::StandNoBox => TaskState::BendToPick,
        TaskState::BendToPick => TaskState::StandWithBox,
        TaskState::StandWithBox => TaskState::BendToPlace,
        TaskState::BendToPlace => TaskState::StandNoBox,
    }
}

/// One transition evaluation over the instantaneous trigger levels. At most
/// one transition fires per call. The gate participates only in the
/// `bend_to_pick -> stand_with_box` (gate high) and `bend_to_place ->
/// stand_no_box` (gate low) edges.
pub fn fsm_step<T: Real>(state: TaskState, theta: T, gate: bool, cfg: &PolicyConfig<T>) -> FsmStep {
    if theta_condition(state, theta, cfg) || gate_condition(state, gate) {
        let next = next_in_cycle(state);
        FsmStep {
            next,
            entered: Some(ContributionFlags::on_entry(next)),
        }
    } else {
        FsmStep {
            next: state,
            entered: None,
        }
    }
}

/// Assistance reference: `assist_scale * (trunk? tau_w : 0 + load? tau_box : 0)`.
pub fn assist_reference<T: Real>(
    p: &SubjectParams<T>,
    theta: T,
    flags: ContributionFlags,
    assist_scale: T,
) -> Result<T> {
    let mut total = T::zero();
    if flags.trunk {
        total += biomech::trunk_gravity_torque(p, theta)?;
    }
    if flags.load {
        total += biomech::box_gravity_torque(p, theta)?;
    }
    Ok(assist_scale * total)
}

/// Unusual situations the policy reports rather than acting on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyAnomaly {
    /// Gate rose while standing without a box; no transition is defined for
    /// that, so it is only reported.
    GateWhileStandNoBox,
    /// Gate dropped mid `stand_with_box` (box lost?); the state is kept.
    GateLostWithBox,
}

/// Result of a stateful policy tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyTick {
    pub state: TaskState,
    /// Latched contribution flags after this tick.
    pub flags: ContributionFlags,
    /// Fired transition, if any.
    pub transition: Option<(TaskState, TaskState)>,
    /// True when the stand-up support was released this tick.
    pub released: bool,
    pub anomaly: Option<PolicyAnomaly>,
}

/// Stateful wrapper latching contribution flags between transitions.
///
/// Flags stick to the value attached to the last entered state. In
/// `stand_no_box` the trunk support earned by the final `bend_to_place ->
/// stand_no_box` edge is held until the wearer has stood quietly (angle and
/// velocity both below threshold) for `release_hold` seconds, then decays to
/// no assistance. A fresh policy starts released.
///
/// The posture part of each exit trigger is re-armed: after entering a state
/// it must be observed false once before it may fire. Grasping while deeply
/// bent therefore no longer chains `stand_with_box` straight into
/// `bend_to_place` — the wearer has to stand up and bend again. Gate triggers
/// are level conditions and fire as soon as they hold.
#[derive(Debug, Clone, Copy)]
pub struct TaskPolicy<T> {
    state: TaskState,
    flags: ContributionFlags,
    quiet_time: T,
    prev_gate: bool,
    theta_armed: bool,
}

impl<T: Real> TaskPolicy<T> {
    pub fn new() -> Self {
        TaskPolicy {
            state: TaskState::StandNoBox,
            flags: ContributionFlags::NONE,
            quiet_time: T::zero(),
            prev_gate: false,
            theta_armed: true,
        }
    }

    pub fn state(&self) -> TaskState {
        self.state
    }

    pub fn flags(&self) -> ContributionFlags {
        self.flags
    }

    /// Advances the policy by one control tick.
    ///
    /// `vel_threshold` is the controller's idle/motion threshold, shared here
    /// so "standing quietly" means the same thing in both places.
    pub fn step(
        &mut self,
        theta: T,
        theta_dot: T,
        gate: bool,
        vel_threshold: T,
        dt: T,
        cfg: &PolicyConfig<T>,
    ) -> PolicyTick {
        let mut anomaly = None;
        if self.state == TaskState::StandNoBox && gate && !self.prev_gate {
            anomaly = Some(PolicyAnomaly::GateWhileStandNoBox);
        }
        if self.state == TaskState::StandWithBox && !gate && self.prev_gate {
            anomaly = Some(PolicyAnomaly::GateLostWithBox);
        }
        self.prev_gate = gate;

        let theta_cond = theta_condition(self.state, theta, cfg);
        if !theta_cond {
            self.theta_armed = true;
        }
        let fire = (theta_cond && self.theta_armed) || gate_condition(self.state, gate);

        let mut transition = None;
        if fire {
            let next = next_in_cycle(self.state);
            transition = Some((self.state, next));
            self.state = next;
            self.flags = ContributionFlags::on_entry(next);
            self.quiet_time = T::zero();
            self.theta_armed = false;
        }

        let mut released = false;
        if self.state == TaskState::StandNoBox && self.flags != ContributionFlags::NONE {
            let quiet = theta <= cfg.theta_stand && theta_dot.abs() <= vel_threshold;
            self.quiet_time = if quiet {
                self.quiet_time + dt
            } else {
                T::zero()
            };
            if self.quiet_time >= cfg.release_hold {
                self.flags = ContributionFlags::NONE;
                released = true;
            }
        }

        PolicyTick {
            state: self.state,
            flags: self.flags,
            transition,
            released,
            anomaly,
        }
    }
}

impl<T: Real> Default for TaskPolicy<T> {
    fn default() -> Self {
        Self::new()
    }
}
