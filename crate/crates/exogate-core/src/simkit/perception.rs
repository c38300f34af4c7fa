//! Synthetic perception streams.
//!
//! Stands in for the gaze-tracking glasses + detector stack: frames carry a
//! gaze point and one labelled bounding box whenever the box is plausibly in
//! view, with label flips and dropouts injected at configured rates. Every
//! random draw is keyed by `(seed, frame index)` through a counter-based
//! generator, so streams are bit-reproducible and independent of consumption
//! order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::visiongate::{Detection, Frame, GraspLabel};

/// Synthetic perception settings. `seed` is mandatory: every run must be
/// reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerceptionConfig {
    /// Frame rate (frames per second).
    #[serde(default = "default_fps")]
    pub fps: f64,
    /// Probability that a grasped box is mislabelled `NotGrasped`.
    #[serde(default = "default_fn_rate")]
    pub false_negative_rate: f64,
    /// Probability that a free box is mislabelled `Grasped`.
    #[serde(default = "default_fp_rate")]
    pub false_positive_rate: f64,
    /// Probability that the gaze point is missing from a frame.
    #[serde(default)]
    pub gaze_dropout_rate: f64,
    /// Probability that the detector misses the box entirely.
    #[serde(default)]
    pub detection_dropout_rate: f64,
    /// Noise seed.
    pub seed: u64,
    /// Frames of detector latency between capture and availability of the
    /// gate decision to the control loop.
    #[serde(default = "default_latency")]
    pub latency_frames: u32,
}

fn default_fps() -> f64 {
    50.0
}

// Default flip rates are rough estimates in line with the detector's
// per-class recall/precision; override per scenario as needed.
fn default_fn_rate() -> f64 {
    0.06
}

fn default_fp_rate() -> f64 {
    0.04
}

fn default_latency() -> u32 {
    1
}

impl PerceptionConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.fps <= 0.0 || !self.fps.is_finite() {
            problems.push("fps must be > 0".to_string());
        }
        for (name, r) in [
            ("false_negative_rate", self.false_negative_rate),
            ("false_positive_rate", self.false_positive_rate),
            ("gaze_dropout_rate", self.gaze_dropout_rate),
            ("detection_dropout_rate", self.detection_dropout_rate),
        ] {
            if !(0.0..=1.0).contains(&r) || !r.is_finite() {
                problems.push(format!("{name} must be in [0, 1]"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(problems.join("; ")))
        }
    }
}

/// Counter-based deterministic generator: a small splitmix64 stream keyed by
/// `(seed, counter)`. Draw order within a frame is fixed.
#[derive(Debug, Clone)]
pub struct FrameRng {
    state: u64,
}

impl FrameRng {
    pub fn for_frame(seed: u64, frame_index: u64) -> Self {
        let mut rng = FrameRng {
            state: seed ^ frame_index.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        };
        // A couple of warm-up rounds decorrelate neighbouring frame indices.
        rng.next_u64();
        rng.next_u64();
        rng
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

/// Generates the frame captured at `t` with index `frame_index`.
///
/// While a grasp interval is active the synthetic box is labelled `Grasped`
/// and contains the gaze point (the wearer fixates what they carry). When no
/// box is held but the trunk is bent at least halfway to the bend threshold,
/// the bin and box are in view and a `NotGrasped` box is emitted, still under
/// the gaze. Upright without a box nothing is detected.
pub fn synth_frame(
    cfg: &PerceptionConfig,
    frame_index: u64,
    t: f64,
    theta: f64,
    held: bool,
    theta_bend: f64,
) -> Frame<f64> {
    let mut rng = FrameRng::for_frame(cfg.seed, frame_index);
    // All draws happen unconditionally, in a fixed order, so the stream for a
    // given (seed, index) never depends on scenario state.
    let drop_gaze = rng.chance(cfg.gaze_dropout_rate);
    let drop_detection = rng.chance(cfg.detection_dropout_rate);
    let flip = rng.next_f64();
    let jx = (rng.next_f64() - 0.5) * 0.06;
    let jy = (rng.next_f64() - 0.5) * 0.06;
    let conf = 0.85 + 0.14 * rng.next_f64();

    let gx = (0.52 + jx).clamp(0.0, 1.0);
    let gy = (0.57 + jy).clamp(0.0, 1.0);

    let in_view = held || theta >= 0.5 * theta_bend;
    let mut detections = Vec::new();
    if in_view && !drop_detection {
        let label = if held {
            if flip < cfg.false_negative_rate {
                GraspLabel::NotGrasped
            } else {
                GraspLabel::Grasped
            }
        } else if flip < cfg.false_positive_rate {
            GraspLabel::Grasped
        } else {
            GraspLabel::NotGrasped
        };
        detections.push(Detection {
            bbox: [
                (gx - 0.18).max(0.0),
                (gy - 0.14).max(0.0),
                (gx + 0.18).min(1.0),
                (gy + 0.14).min(1.0),
            ],
            label,
            conf,
        });
    }

    Frame {
        t,
        gaze: if drop_gaze { None } else { Some([gx, gy]) },
        detections,
    }
}

/// True when `t` falls inside any `[t_grasp, t_release)` interval.
pub fn box_held(grasp_events: &[(f64, f64)], t: f64) -> bool {
    grasp_events
        .iter()
        .any(|&(start, end)| t >= start && t < end)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64) -> PerceptionConfig {
        PerceptionConfig {
            fps: 50.0,
            false_negative_rate: 0.0,
            false_positive_rate: 0.0,
            gaze_dropout_rate: 0.0,
            detection_dropout_rate: 0.0,
            seed,
            latency_frames: 1,
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let c = PerceptionConfig {
            false_negative_rate: 0.1,
            gaze_dropout_rate: 0.2,
            ..cfg(99)
        };
        for k in 0..200u64 {
            let a = synth_frame(&c, k, k as f64 / 50.0, 0.5, k % 3 == 0, 0.7);
            let b = synth_frame(&c, k, k as f64 / 50.0, 0.5, k % 3 == 0, 0.7);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn noise_free_grasp_labels_immediately() {
        let c = cfg(1);
        let f = synth_frame(&c, 150, 3.0, 0.9, true, 0.7);
        assert_eq!(f.detections.len(), 1);
        assert_eq!(f.detections[0].label, GraspLabel::Grasped);
        // Gaze sits inside the synthetic box.
        let [gx, gy] = f.gaze.unwrap();
        let [x0, y0, x1, y1] = f.detections[0].bbox;
        assert!(gx >= x0 && gx <= x1 && gy >= y0 && gy <= y1);
    }

    #[test]
    fn upright_without_box_sees_nothing() {
        let c = cfg(1);
        let f = synth_frame(&c, 10, 0.2, 0.05, false, 0.7);
        assert!(f.detections.is_empty());
        // Bent over the bin: the free box is in view.
        let f = synth_frame(&c, 11, 0.22, 0.5, false, 0.7);
        assert_eq!(f.detections[0].label, GraspLabel::NotGrasped);
    }

    #[test]
    fn full_gaze_dropout_blinds_the_gate() {
        let c = PerceptionConfig {
            gaze_dropout_rate: 1.0,
            ..cfg(5)
        };
        for k in 0..100u64 {
            let f = synth_frame(&c, k, k as f64 / 50.0, 0.9, true, 0.7);
            assert!(f.gaze.is_none());
        }
    }

    #[test]
    fn held_intervals() {
        let events = [(3.0, 8.2), (10.0, 11.0)];
        assert!(!box_held(&events, 2.99));
        assert!(box_held(&events, 3.0));
        assert!(box_held(&events, 8.19));
        assert!(!box_held(&events, 8.2));
        assert!(box_held(&events, 10.5));
    }

    #[test]
    fn rate_validation() {
        let mut c = cfg(1);
        c.false_negative_rate = 1.5;
        assert!(c.validate().is_err());
        c.false_negative_rate = -0.1;
        assert!(c.validate().is_err());
        c.false_negative_rate = 1.0;
        assert!(c.validate().is_ok());
        c.fps = 0.0;
        assert!(c.validate().is_err());
    }
}
