//! Declarative scenario files.
//!
//! A scenario is a single JSON document with blocks for the subject, the
//! controller, the task policy, the vision gate, the trunk trajectory, grasp
//! events, and the synthetic perception settings. Unknown keys are rejected
//! so typos fail loudly instead of silently falling back to defaults.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::admittance::ControllerConfig;
use crate::biomech::{derive_subject_params, SubjectOverrides, SubjectParams};
use crate::error::{Error, Result};
use crate::fsm::PolicyConfig;
use crate::simkit::perception::PerceptionConfig;
use crate::simkit::trajectory::Trajectory;
use crate::visiongate::GateConfig;

/// How the trunk motion is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// The trajectory is the measured trunk angle; the admittance state is an
    /// open-loop diagnostic.
    Scripted,
    /// The admittance state is the plant, driven by a synthetic human intent
    /// torque tracking the desired trajectory.
    Coupled,
}

/// Unit of the angle-valued scenario fields (policy thresholds and trajectory
/// keyframes). Internally everything runs in radians; degrees are converted
/// once at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleUnit {
    #[default]
    Radians,
    Degrees,
}

/// Subject block: either measured parameters or anthropometric inputs for
/// [`derive_subject_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SubjectSpec {
    Direct(SubjectParams<f64>),
    Derived(DerivedSubject),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivedSubject {
    pub total_mass: f64,
    pub height: f64,
    #[serde(default)]
    pub box_mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_i: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
}

impl SubjectSpec {
    pub fn resolve(&self) -> Result<SubjectParams<f64>> {
        match *self {
            SubjectSpec::Direct(p) => {
                p.validate()?;
                Ok(p)
            }
            SubjectSpec::Derived(d) => derive_subject_params(
                d.total_mass,
                d.height,
                d.box_mass,
                SubjectOverrides {
                    kappa_w: d.kappa_w,
                    kappa_i: d.kappa_i,
                    l_b: d.l_b,
                    g: d.g,
                },
            ),
        }
    }
}

/// Trajectory block. In scripted mode the keyframes are the trunk motion; in
/// coupled mode they are the desired trajectory the synthetic human tracks
/// with the given PD intent gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub keyframes: Vec<(f64, f64)>,
    #[serde(default = "default_intent_kp")]
    pub intent_kp: f64,
    #[serde(default = "default_intent_kd")]
    pub intent_kd: f64,
}

fn default_intent_kp() -> f64 {
    150.0
}

fn default_intent_kd() -> f64 {
    25.0
}

/// Complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub subject: SubjectSpec,
    #[serde(default)]
    pub controller: ControllerConfig<f64>,
    #[serde(default)]
    pub policy: PolicyConfig<f64>,
    #[serde(default)]
    pub gate: GateConfig<f64>,
    pub mode: SimMode,
    pub trajectory: TrajectorySpec,
    /// `[t_grasp, t_release)` intervals during which the box is held.
    #[serde(default)]
    pub grasp_events: Vec<(f64, f64)>,
    pub perception: PerceptionConfig,
    /// Run length in seconds.
    pub duration: f64,
    #[serde(default)]
    pub angles: AngleUnit,
}

/// Scenario with units converted, subject resolved, and the trajectory built.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub subject: SubjectParams<f64>,
    pub controller: ControllerConfig<f64>,
    pub policy: PolicyConfig<f64>,
    pub gate: GateConfig<f64>,
    pub mode: SimMode,
    pub trajectory: Trajectory,
    pub intent_kp: f64,
    pub intent_kd: f64,
    pub grasp_events: Vec<(f64, f64)>,
    pub perception: PerceptionConfig,
    pub duration: f64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Scenario> {
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        Scenario::from_reader(BufReader::new(File::open(path)?))
    }

    fn angle_scale(&self) -> f64 {
        match self.angles {
            AngleUnit::Radians => 1.0,
            AngleUnit::Degrees => std::f64::consts::PI / 180.0,
        }
    }

    /// Collects every invariant violation, with field paths, for reporting.
    /// An empty list means the scenario is valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push_err = |prefix: &str, e: Error| {
            if let Error::InvalidParams(msg) = e {
                for part in msg.split("; ") {
                    out.push(format!("{prefix}{part}"));
                }
            } else {
                out.push(format!("{prefix}{e}"));
            }
        };

        if let Err(e) = self.subject.resolve() {
            push_err("subject.", e);
        }
        if let Err(e) = self.controller.validate() {
            push_err("controller.", e);
        }

        let scale = self.angle_scale();
        let policy = PolicyConfig {
            theta_stand: self.policy.theta_stand * scale,
            theta_bend: self.policy.theta_bend * scale,
            ..self.policy
        };
        if let Err(e) = policy.validate() {
            push_err("policy.", e);
        }
        if let Err(e) = self.gate.validate() {
            push_err("gate.", e);
        }
        if let Err(e) = self.perception.validate() {
            push_err("perception.", e);
        }

        match Trajectory::new(self.trajectory.keyframes.clone()) {
            Err(e) => push_err("trajectory.", e),
            Ok(_) => {
                let hi = std::f64::consts::FRAC_PI_2;
                for &(t, theta) in &self.trajectory.keyframes {
                    let theta = theta * scale;
                    if !(0.0..=hi + 1e-12).contains(&theta) {
                        out.push(format!(
                            "trajectory.keyframes: angle {theta:.4} rad at t={t} outside [0, pi/2]"
                        ));
                        break;
                    }
                }
            }
        }
        let kp = self.trajectory.intent_kp;
        let kd = self.trajectory.intent_kd;
        if kp < 0.0 || kd < 0.0 || kp.is_nan() || kd.is_nan() {
            out.push("trajectory.intent gains must be >= 0".to_string());
        }

        let mut last_end = f64::NEG_INFINITY;
        for &(start, end) in &self.grasp_events {
            if end <= start || end.is_nan() || start.is_nan() {
                out.push(format!(
                    "grasp_events: release {end} must be after grasp {start}"
                ));
            }
            if start < last_end {
                out.push("grasp_events: intervals must be ordered and non-overlapping".to_string());
            }
            if start < 0.0 {
                out.push(format!("grasp_events: grasp time {start} must be >= 0"));
            }
            last_end = end;
        }

        if self.duration < 0.0 || !self.duration.is_finite() {
            out.push("duration must be >= 0".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(violations.join("; ")))
        }
    }

    /// Validates and produces the resolved, radian-valued scenario.
    pub fn resolved(&self) -> Result<ResolvedScenario> {
        self.validate()?;
        let scale = self.angle_scale();
        let keyframes = self
            .trajectory
            .keyframes
            .iter()
            .map(|&(t, theta)| (t, theta * scale))
            .collect();
        Ok(ResolvedScenario {
            subject: self.subject.resolve()?,
            controller: self.controller,
            policy: PolicyConfig {
                theta_stand: self.policy.theta_stand * scale,
                theta_bend: self.policy.theta_bend * scale,
                ..self.policy
            },
            gate: self.gate,
            mode: self.mode,
            trajectory: Trajectory::new(keyframes)?,
            intent_kp: self.trajectory.intent_kp,
            intent_kd: self.trajectory.intent_kd,
            grasp_events: self.grasp_events.clone(),
            perception: self.perception,
            duration: self.duration,
        })
    }
}
