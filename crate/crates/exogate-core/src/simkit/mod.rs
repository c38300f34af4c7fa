//! Scenario synthesis and closed-tick simulation.
//!
//! A scenario file describes the subject, controller tunings, task policy,
//! gate settings, trunk trajectory, grasp events, and perception noise.
//! [`run_scenario`] executes it tick by tick and returns a complete log;
//! [`compute_metrics`] reduces a log to the headline numbers (assistance
//! onset latency with and without vision, peak assistance, residual-effort
//! integrals, state durations).

pub mod logio;
pub mod metrics;
pub mod perception;
pub mod runner;
pub mod scenario;
pub mod trajectory;

pub use metrics::{compute_metrics, Metrics};
pub use perception::{box_held, synth_frame, FrameRng, PerceptionConfig};
pub use runner::{
    run_resolved, run_scenario, AnomalyKind, EventKind, RunOptions, ShadowRow, SimEvent, SimLog,
    TickRow,
};
pub use scenario::{
    AngleUnit, DerivedSubject, ResolvedScenario, Scenario, SimMode, SubjectSpec, TrajectorySpec,
};
pub use trajectory::Trajectory;
