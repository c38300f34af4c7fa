//! Variable admittance controller.
//!
//! Measured torque drives a virtual mass–damper–spring whose motion is the
//! commanded trajectory:
//!
//! ```text
//! inertia * dd(theta) + c * d(theta) + k * (theta - theta_ref) = tau_meas + tau_ass
//! ```
//!
//! The spring stiffness is scheduled between a backdrivable *soft* mode
//! (`k = 0`, constant damping) and a stiff *hard* mode (`k = k_hard`, damping
//! held at a constant damping ratio) on trunk velocity, with smoothstep ramps
//! and a minimum hard-mode dwell. The assistive torque follows its reference
//! through the same smoothstep profile. Parameter units are SI throughout:
//! kg·m² for inertia, N·m/rad, N·m·s/rad, seconds, radians.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{real, Real};

/// Cubic easing `s(u) = u^2 (3 - 2u)`, clamped to `[0, 1]` outside the unit
/// interval. Every gain and torque ramp in the controller uses it.
pub fn smoothstep<T: Real>(u: T) -> T {
    if u <= T::zero() {
        T::zero()
    } else if u >= T::one() {
        T::one()
    } else {
        u * u * (real::<T>(3.0) - real::<T>(2.0) * u)
    }
}

/// Derivative of [`smoothstep`]: `6u(1-u)` inside `[0, 1]`, zero outside.
pub fn smoothstep_deriv<T: Real>(u: T) -> T {
    if u <= T::zero() || u >= T::one() {
        T::zero()
    } else {
        real::<T>(6.0) * u * (T::one() - u)
    }
}

/// Controller tunings. Defaults are the values used on the device, fixed
/// across subjects; `dt` is the 100 Hz control period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig<T> {
    /// Virtual inertia (kg·m²).
    pub inertia: T,
    /// Hard-mode stiffness target (N·m/rad). Must satisfy `k_hard >= k_min`.
    pub k_hard: T,
    /// Minimum admissible hard-mode stiffness (N·m/rad).
    pub k_min: T,
    /// Soft-mode damping (N·m·s/rad).
    pub c_soft: T,
    /// Hard-mode damping ratio; damping follows `2 * zeta * sqrt(inertia * k)`.
    pub damping_ratio: T,
    /// Stiffness ramp duration (s).
    pub stiffness_ramp: T,
    /// Minimum dwell in hard mode before reverting to soft (s).
    pub hold_time: T,
    /// Assistive-torque ramp duration (s).
    pub torque_ramp: T,
    /// Reference lead step applied in the direction of motion (rad).
    pub ref_step: T,
    /// Velocity threshold separating idle from motion (rad/s).
    pub vel_threshold: T,
    /// Control period (s).
    pub dt: T,
    /// Idle re-anchoring rate pulling the reference onto the measured angle
    /// (1/s). Active only below the velocity threshold.
    pub anchor_rate: T,
}

impl<T: Real> Default for ControllerConfig<T> {
    fn default() -> Self {
        ControllerConfig {
            inertia: real(0.5),
            k_hard: real(40.0),
            k_min: real(0.0),
            c_soft: real(5.0),
            damping_ratio: real(0.9),
            stiffness_ramp: real(0.4),
            hold_time: real(0.5),
            torque_ramp: real(0.8),
            ref_step: real(0.07),
            vel_threshold: real(0.2),
            dt: real(0.01),
            anchor_rate: real(2.0),
        }
    }
}

impl<T: Real> ControllerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let zero = T::zero();
        if self.inertia <= zero || self.inertia.is_nan() {
            problems.push("inertia must be > 0".to_string());
        }
        if self.k_min < zero || self.k_min.is_nan() {
            problems.push("k_min must be >= 0".to_string());
        }
        if self.k_hard < self.k_min || self.k_hard.is_nan() {
            problems.push("k_hard >= k_min required".to_string());
        }
        if self.c_soft < zero || self.c_soft.is_nan() {
            problems.push("c_soft must be >= 0".to_string());
        }
        if self.damping_ratio <= zero
            || self.damping_ratio > real(2.0)
            || self.damping_ratio.is_nan()
        {
            problems.push("damping_ratio must be in (0, 2]".to_string());
        }
        for (name, v) in [
            ("stiffness_ramp", self.stiffness_ramp),
            ("hold_time", self.hold_time),
            ("torque_ramp", self.torque_ramp),
            ("dt", self.dt),
            ("ref_step", self.ref_step),
        ] {
            if v <= zero || v.is_nan() {
                problems.push(format!("{name} must be > 0"));
            }
        }
        if self.vel_threshold < zero || self.vel_threshold.is_nan() {
            problems.push("vel_threshold must be >= 0".to_string());
        }
        if self.anchor_rate < zero || self.anchor_rate.is_nan() {
            problems.push("anchor_rate must be >= 0".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(problems.join("; ")))
        }
    }
}

/// Interaction mode of the virtual dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Backdrivable: zero stiffness, light constant damping.
    Soft,
    /// Assistance delivery: stiff spring, damping at constant ratio.
    Hard,
}

/// Mutable controller state advanced once per control tick.
///
/// Owned by a single driver; all updates are deterministic functions of the
/// previous state and the tick inputs, so state may move between threads
/// freely between ticks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState<T> {
    /// Virtual (commanded) angle of the admittance dynamics (rad).
    pub theta: T,
    /// Virtual angular velocity (rad/s).
    pub theta_dot: T,
    /// Reference angle the virtual spring pulls toward (rad).
    pub theta_ref: T,
    /// Current interaction mode.
    pub mode: Mode,
    /// Active stiffness (N·m/rad); always between the ramp endpoints.
    pub k_current: T,
    /// Active damping (N·m·s/rad).
    pub c_current: T,
    /// Stiffness ramp start value.
    pub k_start: T,
    /// Stiffness ramp target (`k_hard` or 0).
    pub k_target: T,
    /// Damping at the last mode switch, for the soft ramp-out blend.
    pub c_start: T,
    /// Stiffness ramp start time (s).
    pub ramp_t0: T,
    /// Earliest time a hard-to-soft reversion may begin (s).
    pub hold_until: T,
    /// Delivered assistive torque (N·m).
    pub tau_ass_current: T,
    /// Assist torque at the start of the active ramp.
    pub tau_ass_start: T,
    /// Assist ramp start time (s).
    pub tau_ramp_t0: T,
    /// Last assist reference seen, for retarget detection.
    pub tau_target: T,
    /// Last time passed to `schedule_gains`, for monotonicity checking.
    last_t: T,
}

/// Targets closer than this (N·m) are not treated as a new ramp, so
/// floating-point noise cannot restart ramps.
const RETARGET_TOL: f64 = 1e-6;

impl<T: Real> ControllerState<T> {
    /// Fresh state at rest: soft mode, reference anchored on the given angle,
    /// no assistance.
    pub fn new(theta: T, cfg: &ControllerConfig<T>) -> Self {
        ControllerState {
            theta,
            theta_dot: T::zero(),
            theta_ref: theta,
            mode: Mode::Soft,
            k_current: T::zero(),
            c_current: cfg.c_soft,
            k_start: T::zero(),
            k_target: T::zero(),
            c_start: cfg.c_soft,
            ramp_t0: T::neg_infinity(),
            hold_until: T::neg_infinity(),
            tau_ass_current: T::zero(),
            tau_ass_start: T::zero(),
            tau_ramp_t0: T::neg_infinity(),
            tau_target: T::zero(),
            last_t: T::neg_infinity(),
        }
    }

    /// Updates the reference angle from the measured motion.
    ///
    /// Above the velocity threshold the reference is stepped by `ref_step` in
    /// the direction of motion, clamped to at most one step beyond the
    /// measured angle so the lead stays bounded at any tick rate. Below the
    /// threshold the reference relaxes onto the measured angle at
    /// `anchor_rate`, keeping `theta_ref ≈ theta` through idle phases.
    pub fn update_reference(&mut self, theta: T, theta_dot: T, cfg: &ControllerConfig<T>) {
        if theta_dot.abs() > cfg.vel_threshold {
            let step = if theta_dot > T::zero() {
                cfg.ref_step
            } else {
                -cfg.ref_step
            };
            let stepped = self.theta_ref + step;
            self.theta_ref = stepped.max(theta - cfg.ref_step).min(theta + cfg.ref_step);
        } else {
            self.theta_ref = self.theta_ref + cfg.anchor_rate * (theta - self.theta_ref) * cfg.dt;
        }
    }

    /// Schedules stiffness and damping from the measured velocity.
    ///
    /// Soft→hard triggers when `|theta_dot|` exceeds the threshold and ramps
    /// the stiffness toward `k_hard` over `stiffness_ramp` seconds; while the
    /// motion persists the hold deadline keeps sliding, so soft reversion can
    /// start only `hold_time` after the last motion. Hard→soft ramps the
    /// stiffness back to zero from wherever it currently is, preserving
    /// continuity, while damping blends linearly to `c_soft` over the same
    /// window. In hard mode damping tracks `2 * zeta * sqrt(inertia * k)`.
    pub fn schedule_gains(&mut self, theta_dot: T, t: T, cfg: &ControllerConfig<T>) -> Result<()> {
        if t < self.last_t {
            return Err(Error::TimeRegression {
                t: t.to_f64().unwrap_or(f64::NAN),
                last: self.last_t.to_f64().unwrap_or(f64::NAN),
            });
        }
        self.last_t = t;

        let moving = theta_dot.abs() > cfg.vel_threshold;
        match self.mode {
            Mode::Soft => {
                if moving {
                    self.mode = Mode::Hard;
                    self.k_start = self.k_current;
                    self.k_target = cfg.k_hard;
                    self.c_start = self.c_current;
                    self.ramp_t0 = t;
                    self.hold_until = t + cfg.hold_time;
                }
            }
            Mode::Hard => {
                if moving {
                    self.hold_until = t + cfg.hold_time;
                } else if t >= self.hold_until {
                    self.mode = Mode::Soft;
                    self.k_start = self.k_current;
                    self.k_target = T::zero();
                    self.c_start = self.c_current;
                    self.ramp_t0 = t;
                }
            }
        }

        let u = (t - self.ramp_t0) / cfg.stiffness_ramp;
        self.k_current = self.k_start + (self.k_target - self.k_start) * smoothstep(u);
        self.c_current = match self.mode {
            Mode::Hard => {
                real::<T>(2.0) * cfg.damping_ratio * (cfg.inertia * self.k_current).sqrt()
            }
            Mode::Soft => {
                // Linear blend from the damping at switch time down to c_soft
                // over the same window as the stiffness ramp-out.
                let w = u.max(T::zero()).min(T::one());
                self.c_start + (cfg.c_soft - self.c_start) * w
            }
        };
        Ok(())
    }

    /// Anchors a new assist ramp at `t`, starting from the torque currently
    /// delivered. Drive this from discrete retarget events (task-state
    /// changes); the reference itself may keep moving during the ramp.
    pub fn begin_assist_ramp(&mut self, t: T) {
        self.tau_ass_start = self.tau_ass_current;
        self.tau_ramp_t0 = t;
    }

    /// Advances the delivered assist torque toward `tau_ref` through the
    /// active smoothstep ramp. Once the ramp window has elapsed the delivered
    /// torque equals the reference exactly, tracking it thereafter.
    pub fn track_assist(&mut self, tau_ref: T, t: T, cfg: &ControllerConfig<T>) {
        self.tau_target = tau_ref;
        let u = (t - self.tau_ramp_t0) / cfg.torque_ramp;
        self.tau_ass_current = self.tau_ass_start + (tau_ref - self.tau_ass_start) * smoothstep(u);
    }

    /// Ramp entry point for piecewise-constant references: a reference that
    /// moved more than a small tolerance since the last call starts a new
    /// ramp from the current torque, then the blend is applied as in
    /// [`Self::track_assist`].
    pub fn ramp_assist_torque(&mut self, tau_ref: T, t: T, cfg: &ControllerConfig<T>) {
        if (tau_ref - self.tau_target).abs() > real(RETARGET_TOL) {
            self.begin_assist_ramp(t);
        }
        self.track_assist(tau_ref, t, cfg);
    }

    /// One semi-implicit Euler step of the virtual dynamics under the given
    /// measured torque. The delivered assist torque enters on the same side.
    pub fn step_admittance(&mut self, tau_meas: T, dt: T, cfg: &ControllerConfig<T>) -> Result<()> {
        if cfg.inertia <= T::zero() || cfg.inertia.is_nan() {
            return Err(Error::invalid("inertia must be > 0"));
        }
        let spring = self.k_current * (self.theta - self.theta_ref);
        let damper = self.c_current * self.theta_dot;
        let accel = (tau_meas + self.tau_ass_current - damper - spring) / cfg.inertia;
        self.theta_dot += accel * dt;
        self.theta += self.theta_dot * dt;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ControllerConfig<f64> {
        ControllerConfig::default()
    }

    #[test]
    fn smoothstep_endpoints_and_midpoint() {
        assert_eq!(smoothstep(0.0f64), 0.0);
        assert_eq!(smoothstep(1.0f64), 1.0);
        assert_eq!(smoothstep(0.5f64), 0.5);
        assert_eq!(smoothstep(-3.0f64), 0.0);
        assert_eq!(smoothstep(7.0f64), 1.0);
        assert!((smoothstep(0.25f64) - 0.15625).abs() < 1e-15);
        // s(u) + s(1-u) = 1
        for u in [0.1f64, 0.3, 0.42, 0.77] {
            assert!((smoothstep(u) + smoothstep(1.0 - u) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothstep_deriv_vanishes_at_ends() {
        assert_eq!(smoothstep_deriv(0.0f64), 0.0);
        assert_eq!(smoothstep_deriv(1.0f64), 0.0);
        assert!((smoothstep_deriv(0.5f64) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn reference_steps_in_motion_direction() {
        let c = cfg();
        let mut st = ControllerState::new(0.10, &c);
        st.update_reference(0.10, 0.3, &c);
        assert!((st.theta_ref - 0.17).abs() < 1e-12, "got {}", st.theta_ref);

        let mut st = ControllerState::new(0.10, &c);
        st.update_reference(0.10, 0.1, &c);
        // Below threshold: anchored, essentially unchanged from 0.10.
        assert!((st.theta_ref - 0.10).abs() < 1e-12);

        let mut st = ControllerState::new(0.10, &c);
        st.update_reference(0.10, -0.3, &c);
        assert!((st.theta_ref - 0.03).abs() < 1e-12, "got {}", st.theta_ref);
    }

    #[test]
    fn reference_lead_stays_bounded() {
        let c = cfg();
        let mut st = ControllerState::new(0.0, &c);
        // Many ticks of sustained motion: lead must not exceed one step.
        let mut theta = 0.0;
        for _ in 0..200 {
            theta += 0.5 * c.dt;
            st.update_reference(theta, 0.5, &c);
            assert!((st.theta_ref - theta).abs() <= c.ref_step + 1e-12);
        }
    }

    #[test]
    fn reference_anchors_when_idle() {
        let c = cfg();
        let mut st = ControllerState::new(0.0, &c);
        st.theta_ref = 0.3;
        for _ in 0..2000 {
            st.update_reference(0.0, 0.0, &c);
        }
        assert!(st.theta_ref.abs() < 1e-3, "got {}", st.theta_ref);
    }

    #[test]
    fn hard_mode_damping_law() {
        let c = cfg();
        let mut st = ControllerState::new(0.0, &c);
        st.schedule_gains(0.5, 0.0, &c).unwrap();
        assert_eq!(st.mode, Mode::Hard);
        // Past the ramp, k = 40 and c = 2 * 0.9 * sqrt(0.5 * 40).
        st.schedule_gains(0.5, 1.0, &c).unwrap();
        assert!((st.k_current - 40.0).abs() < 1e-12);
        assert!(
            (st.c_current - 8.049844718999243).abs() < 1e-9,
            "got {}",
            st.c_current
        );
    }

    #[test]
    fn stiffness_ramp_midpoint() {
        let c = cfg();
        let mut st = ControllerState::new(0.0, &c);
        st.schedule_gains(0.5, 1.0, &c).unwrap();
        st.schedule_gains(0.5, 1.2, &c).unwrap(); // t - t0 = 0.2 = T/2
        assert!((st.k_current - 20.0).abs() < 1e-12, "got {}", st.k_current);
    }

    #[test]
    fn hold_time_blocks_reversion() {
        let c = cfg();
        let mut st = ControllerState::new(0.0, &c);
        st.schedule_gains(0.5, 1.0, &c).unwrap();
        st.schedule_gains(0.0, 1.2, &c).unwrap();
        assert_eq!(st.mode, Mode::Hard, "reversion before hold expiry");
        st.schedule_gains(0.0, 1.51, &c).unwrap();
        assert_eq!(st.mode, Mode::Soft);
    }

    #[test]
    fn motion_extends_hold() {
        let c = cfg();
        let mut st = ControllerState::new(0.0, &c);
        st.schedule_gains(0.5, 0.0, &c).unwrap();
        st.schedule_gains(0.5, 2.0, &c).unwrap(); // still moving at t=2
        st.schedule_gains(0.0, 2.2, &c).unwrap(); // stopped, but hold slid to 2.5
        assert_eq!(st.mode, Mode::Hard);
        st.schedule_gains(0.0, 2.6, &c).unwrap();
        assert_eq!(st.mode, Mode::Soft);
    }

    #[test]
    fn retrigger_mid_rampdown_is_continuous() {
        let c = cfg();
        let mut st = ControllerState::new(0.0, &c);
        st.schedule_gains(0.5, 0.0, &c).unwrap();
        st.schedule_gains(0.5, 1.0, &c).unwrap();
        st.schedule_gains(0.0, 1.6, &c).unwrap(); // rampdown begins
        st.schedule_gains(0.0, 1.8, &c).unwrap(); // halfway down: k = 20
        let k_mid = st.k_current;
        assert!((k_mid - 20.0).abs() < 1e-9);
        st.schedule_gains(0.5, 1.8, &c).unwrap(); // re-trigger from 20
        assert_eq!(st.mode, Mode::Hard);
        assert!((st.k_start - k_mid).abs() < 1e-12);
        assert!((st.k_current - k_mid).abs() < 1e-9, "jump at re-trigger");
    }

    #[test]
    fn time_regression_is_an_error() {
        let c = cfg();
        let mut st = ControllerState::new(0.0, &c);
        st.schedule_gains(0.0, 1.0, &c).unwrap();
        assert!(st.schedule_gains(0.0, 0.5, &c).is_err());
    }

    #[test]
    fn assist_ramp_midpoint_and_completion() {
        let c = cfg();
        let mut st = ControllerState::new(0.0, &c);
        st.ramp_assist_torque(30.11, 0.0, &c);
        st.ramp_assist_torque(30.11, 0.4, &c); // T/2
        assert!(
            (st.tau_ass_current - 15.055).abs() < 1e-12,
            "got {}",
            st.tau_ass_current
        );
        st.ramp_assist_torque(30.11, 0.8, &c);
        assert_eq!(st.tau_ass_current, 30.11);
        st.ramp_assist_torque(30.11, 5.0, &c);
        assert_eq!(st.tau_ass_current, 30.11);
    }

    #[test]
    fn assist_retarget_mid_ramp_is_continuous() {
        let c = cfg();
        let mut st = ControllerState::new(0.0, &c);
        st.ramp_assist_torque(30.0, 0.0, &c);
        st.ramp_assist_torque(30.0, 0.3, &c);
        let before = st.tau_ass_current;
        st.ramp_assist_torque(10.0, 0.3, &c); // retarget
        assert!(
            (st.tau_ass_current - before).abs() < 1e-12,
            "jump at retarget"
        );
        assert_eq!(st.tau_ass_start, before);
        st.ramp_assist_torque(10.0, 1.2, &c);
        assert_eq!(st.tau_ass_current, 10.0);
    }

    #[test]
    fn retarget_tolerance_ignores_noise() {
        let c = cfg();
        let mut st = ControllerState::new(0.0, &c);
        st.ramp_assist_torque(30.0, 0.0, &c);
        st.ramp_assist_torque(30.0, 0.8, &c);
        let t0 = st.tau_ramp_t0;
        st.ramp_assist_torque(30.0 + 1e-9, 0.9, &c);
        assert_eq!(st.tau_ramp_t0, t0, "fp noise restarted the ramp");
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let c = cfg();
        let mut st = ControllerState::new(0.2, &c);
        st.k_current = 40.0;
        st.c_current = 8.05;
        for _ in 0..100 {
            st.step_admittance(0.0, c.dt, &c).unwrap();
        }
        assert_eq!(st.theta, 0.2);
        assert_eq!(st.theta_dot, 0.0);
    }

    #[test]
    fn static_deflection_matches_spring_law() {
        let c = cfg();
        let mut st = ControllerState::new(0.0, &c);
        st.k_current = 40.0;
        st.c_current = 8.0498;
        st.tau_ass_current = 0.0;
        for _ in 0..500_000 {
            st.step_admittance(8.0, 0.001, &c).unwrap();
        }
        // tau / k = 8 / 40 = 0.2 rad
        assert!((st.theta - 0.2).abs() < 1e-6, "got {}", st.theta);
    }

    #[test]
    fn invalid_inertia_rejected() {
        let mut c = cfg();
        c.inertia = 0.0;
        assert!(c.validate().is_err());
        let mut st = ControllerState::new(0.0, &cfg());
        assert!(st.step_admittance(0.0, 0.01, &c).is_err());
    }

    #[test]
    fn config_validation_catches_bad_ranges() {
        let mut c = cfg();
        c.k_min = 50.0; // above k_hard
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.damping_ratio = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.dt = 0.0;
        assert!(c.validate().is_err());
        assert!(cfg().validate().is_ok());
    }

    #[test]
    fn virtual_energy_dissipates_without_input() {
        let c = cfg();
        let mut st = ControllerState::new(0.0, &c);
        st.k_current = 40.0;
        st.c_current = 8.0498;
        st.theta = 0.3; // offset from theta_ref = 0
        let dt = 0.001;
        let energy = |s: &ControllerState<f64>| {
            0.5 * c.inertia * s.theta_dot * s.theta_dot
                + 0.5 * s.k_current * (s.theta - s.theta_ref) * (s.theta - s.theta_ref)
        };
        let e0 = energy(&st);
        let mut prev = e0;
        for _ in 0..5000 {
            st.step_admittance(0.0, dt, &c).unwrap();
            let e = energy(&st);
            assert!(e <= prev + 1e-9 * e0, "energy rose: {prev} -> {e}");
            prev = e;
        }
        assert!(prev < 0.01 * e0, "transient failed to decay");
    }

    #[test]
    fn works_in_f32() {
        let c = ControllerConfig::<f32>::default();
        let mut st = ControllerState::new(0.0f32, &c);
        st.schedule_gains(0.5, 0.0, &c).unwrap();
        st.ramp_assist_torque(10.0, 0.0, &c);
        st.step_admittance(1.0, c.dt, &c).unwrap();
        assert!(st.theta.is_finite());
    }
}
