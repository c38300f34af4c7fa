//! Vision-gated variable admittance control for a lumbar back-support
//! exoskeleton, plus the deterministic simulation harness used to exercise it.
//!
//! The crate is organised around the signal path of the real device:
//!
//! * [`biomech`] — quasi-static gravity-torque model of the trunk + held box
//!   and subject-parameter derivation from anthropometrics.
//! * [`admittance`] — the virtual mass–damper–spring that turns measured
//!   torque into motion, with soft/hard stiffness scheduling and smoothstep
//!   ramps for both gains and assistive torque.
//! * [`fsm`] — the four-state stoop-cycle task policy deciding which torque
//!   contributions are active.
//! * [`visiongate`] — gaze-on-detected-box indicators filtered through
//!   asymmetric dwell windows into the binary grasp gate.
//! * [`simkit`] — scenario files, synthetic perception streams, the
//!   fixed-timestep simulation loop (with a no-vision shadow controller),
//!   logging and metric extraction.
//!
//! Controller math is generic over the scalar type so the same code can run
//! in `f64` for simulation and `f32` on embedded targets; the aliases at the
//! crate root fix `f64` for harness use.

pub mod admittance;
pub mod biomech;
pub mod error;
pub mod fsm;
pub mod real;
pub mod simkit;
pub mod visiongate;

pub use error::Error;
pub use real::Real;

/// `f64` instantiations used by the simulation harness and CLI.
pub type SubjectParams = biomech::SubjectParams<f64>;
pub type TrunkAngle = biomech::TrunkAngle<f64>;
pub type ControllerConfig = admittance::ControllerConfig<f64>;
pub type ControllerState = admittance::ControllerState<f64>;
pub type PolicyConfig = fsm::PolicyConfig<f64>;
pub type GateConfig = visiongate::GateConfig<f64>;
pub type Frame = visiongate::Frame<f64>;
