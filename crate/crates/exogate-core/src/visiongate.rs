//! Gaze-gated grasp detection.
//!
//! Each perception frame pairs a gaze fixation with labelled bounding boxes.
//! A frame scores `chi_plus = 1` when the gaze sits inside a box labelled
//! `Grasped` (and `chi_minus = 1` for `NotGrasped`); sliding dwell windows
//! over those indicators drive the binary gate. Turning on and turning off
//! use separate window lengths and dwell ratios, which gives the gate a
//! natural hysteresis against gaze flicker and intermittent detections.
//!
//! Streams are line-delimited JSON records:
//! `{"t": .., "gaze": [x, y] | null, "detections": [{"bbox": [x0, y0, x1, y1],
//! "label": "Grasped" | "NotGrasped", "conf": ..}]}`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{real, Real};

/// Detector class label for a box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraspLabel {
    Grasped,
    NotGrasped,
}

/// One detection: a normalized bounding box `[x_min, y_min, x_max, y_max]`
/// with label and confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection<T> {
    pub bbox: [T; 4],
    pub label: GraspLabel,
    pub conf: T,
}

impl<T: Real> Detection<T> {
    fn validate(&self) -> Result<()> {
        let [x0, y0, x1, y1] = self.bbox;
        if !(x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite()) {
            return Err(Error::MalformedFrame("non-finite bbox coordinate".into()));
        }
        if x0 > x1 || y0 > y1 {
            return Err(Error::MalformedFrame(
                "bbox min exceeds max (expected [x_min, y_min, x_max, y_max])".into(),
            ));
        }
        Ok(())
    }

    /// Closed-boundary point-in-box test: edges count as inside.
    fn contains(&self, gx: T, gy: T) -> bool {
        let [x0, y0, x1, y1] = self.bbox;
        gx >= x0 && gx <= x1 && gy >= y0 && gy <= y1
    }
}

/// One perception frame: timestamp, optional gaze point (dropouts are
/// `None`), and the detections in view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame<T> {
    pub t: T,
    #[serde(default = "none_gaze")]
    pub gaze: Option<[T; 2]>,
    #[serde(default)]
    pub detections: Vec<Detection<T>>,
}

fn none_gaze<T>() -> Option<[T; 2]> {
    None
}

impl<T: Real> Frame<T> {
    pub fn validate(&self) -> Result<()> {
        if !self.t.is_finite() {
            return Err(Error::MalformedFrame("non-finite timestamp".into()));
        }
        for d in &self.detections {
            d.validate()?;
        }
        Ok(())
    }
}

/// Per-frame indicators: gaze-on-`Grasped` and gaze-on-`NotGrasped`.
///
/// Both can be 1 at once (overlapping boxes); a gaze dropout yields `(0, 0)`.
/// Detections below `min_confidence` are ignored. A malformed bounding box
/// rejects the whole frame.
pub fn frame_indicators<T: Real>(frame: &Frame<T>, min_confidence: T) -> Result<(bool, bool)> {
    frame.validate()?;
    let Some([gx, gy]) = frame.gaze else {
        return Ok((false, false));
    };
    let mut plus = false;
    let mut minus = false;
    for d in &frame.detections {
        if d.conf < min_confidence || !d.contains(gx, gy) {
            continue;
        }
        match d.label {
            GraspLabel::Grasped => plus = true,
            GraspLabel::NotGrasped => minus = true,
        }
    }
    Ok((plus, minus))
}

/// Dwell-window configuration. Window lengths are in frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateConfig<T> {
    /// Frames in the turn-on window.
    pub on_window: usize,
    /// Minimum fraction of gaze-on-grasped frames to turn on, in `(0, 1]`.
    pub on_ratio: T,
    /// Frames in the turn-off window.
    pub off_window: usize,
    /// Minimum fraction of gaze-on-not-grasped frames to turn off.
    pub off_ratio: T,
    /// Detections below this confidence are ignored.
    pub min_confidence: T,
}

impl<T: Real> Default for GateConfig<T> {
    fn default() -> Self {
        GateConfig {
            on_window: 5,
            on_ratio: real(0.8),
            off_window: 8,
            off_ratio: real(0.6),
            min_confidence: real(0.5),
        }
    }
}

impl<T: Real> GateConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.on_window < 1 {
            problems.push("on_window must be >= 1");
        }
        if self.off_window < 1 {
            problems.push("off_window must be >= 1");
        }
        if self.on_ratio <= T::zero() || self.on_ratio > T::one() || self.on_ratio.is_nan() {
            problems.push("on_ratio must be in (0, 1]");
        }
        if self.off_ratio <= T::zero() || self.off_ratio > T::one() || self.off_ratio.is_nan() {
            problems.push("off_ratio must be in (0, 1]");
        }
        if self.min_confidence < T::zero()
            || self.min_confidence > T::one()
            || self.min_confidence.is_nan()
        {
            problems.push("min_confidence must be in [0, 1]");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(problems.join("; ")))
        }
    }
}

/// Fixed-capacity ring of recent indicator bits with a running count.
#[derive(Debug, Clone)]
struct DwellWindow {
    buf: Vec<bool>,
    head: usize,
    len: usize,
    ones: usize,
}

impl DwellWindow {
    fn new(capacity: usize) -> Self {
        DwellWindow {
            buf: vec![false; capacity.max(1)],
            head: 0,
            len: 0,
            ones: 0,
        }
    }

    fn push(&mut self, v: bool) {
        if self.len == self.buf.len() {
            if self.buf[self.head] {
                self.ones -= 1;
            }
        } else {
            self.len += 1;
        }
        self.buf[self.head] = v;
        if v {
            self.ones += 1;
        }
        self.head = (self.head + 1) % self.buf.len();
    }

    fn full(&self) -> bool {
        self.len == self.buf.len()
    }

    fn mean<T: Real>(&self) -> T {
        if self.len == 0 {
            T::zero()
        } else {
            T::from_usize(self.ones).unwrap() / T::from_usize(self.len).unwrap()
        }
    }

    fn clear(&mut self) {
        self.len = 0;
        self.ones = 0;
        self.head = 0;
        self.buf.fill(false);
    }

    /// Contents in arrival order, oldest first.
    fn snapshot(&self) -> Vec<bool> {
        let cap = self.buf.len();
        (0..self.len)
            .map(|j| self.buf[(self.head + cap - self.len + j) % cap])
            .collect()
    }
}

/// Gate edge produced by a dwell decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GateEdge {
    Rising,
    Falling,
}

/// Incremental gate state. Only [`GateState::step`] mutates the gate value.
#[derive(Debug, Clone)]
pub struct GateState {
    gate: bool,
    on_window: DwellWindow,
    off_window: DwellWindow,
    frames_seen: u64,
}

impl GateState {
    pub fn new<T: Real>(cfg: &GateConfig<T>) -> Self {
        GateState {
            gate: false,
            on_window: DwellWindow::new(cfg.on_window),
            off_window: DwellWindow::new(cfg.off_window),
            frames_seen: 0,
        }
    }

    pub fn gate(&self) -> bool {
        self.gate
    }

    pub fn frames_seen(&self) -> u64 {
        self.frames_seen
    }

    /// Current window contents (on, off), oldest frame first.
    pub fn windows(&self) -> (Vec<bool>, Vec<bool>) {
        (self.on_window.snapshot(), self.off_window.snapshot())
    }

    /// Re-arms the gate for a fresh stream without reallocating.
    pub fn reset(&mut self) {
        self.gate = false;
        self.on_window.clear();
        self.off_window.clear();
        self.frames_seen = 0;
    }

    /// Feeds one frame's indicators, in stream order.
    ///
    /// Only the window matching the current gate value is evaluated, and only
    /// once it holds a full window of frames. When an edge fires, the window
    /// of the opposite direction is cleared so stale evidence from the
    /// previous phase cannot flip the gate straight back.
    pub fn step<T: Real>(
        &mut self,
        chi_plus: bool,
        chi_minus: bool,
        cfg: &GateConfig<T>,
    ) -> Option<GateEdge> {
        self.on_window.push(chi_plus);
        self.off_window.push(chi_minus);
        self.frames_seen += 1;

        if !self.gate {
            if self.on_window.full() && self.on_window.mean::<T>() >= cfg.on_ratio {
                self.gate = true;
                self.off_window.clear();
                return Some(GateEdge::Rising);
            }
        } else if self.off_window.full() && self.off_window.mean::<T>() >= cfg.off_ratio {
            self.gate = false;
            self.on_window.clear();
            return Some(GateEdge::Falling);
        }
        None
    }
}

/// Edge between two consecutive gate snapshots.
pub fn edge_events(prev: &GateState, next: &GateState) -> Option<GateEdge> {
    match (prev.gate, next.gate) {
        (false, true) => Some(GateEdge::Rising),
        (true, false) => Some(GateEdge::Falling),
        _ => None,
    }
}

/// Reads a line-delimited frame stream, validating every frame and the
/// strict timestamp ordering.
pub fn read_frames<R: BufRead>(reader: R) -> Result<Vec<Frame<f64>>> {
    let mut frames = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: Frame<f64> = serde_json::from_str(&line)
            .map_err(|e| Error::MalformedFrame(format!("line {}: {e}", i + 1)))?;
        frame
            .validate()
            .map_err(|e| Error::MalformedFrame(format!("line {}: {e}", i + 1)))?;
        if frame.t <= last_t {
            return Err(Error::MalformedFrame(format!(
                "line {}: timestamps must be strictly increasing",
                i + 1
            )));
        }
        last_t = frame.t;
        frames.push(frame);
    }
    Ok(frames)
}

/// Writes frames in the line-delimited stream format.
pub fn write_frames<W: Write>(mut writer: W, frames: &[Frame<f64>]) -> Result<()> {
    for frame in frames {
        serde_json::to_writer(&mut writer, frame)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
