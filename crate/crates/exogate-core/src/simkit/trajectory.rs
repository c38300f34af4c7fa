//! Keyframe trunk trajectories.

use crate::admittance::{smoothstep, smoothstep_deriv};
use crate::error::{Error, Result};

/// Piecewise-smoothstep interpolation through `(t, theta)` keyframes.
///
/// Within each segment the angle eases with the same cubic used by the
/// controller ramps, so the velocity is continuous and vanishes at every
/// keyframe. Outside the keyframe span the trajectory holds the end values.
#[derive(Debug, Clone)]
pub struct Trajectory {
    keyframes: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn new(keyframes: Vec<(f64, f64)>) -> Result<Self> {
        if keyframes.len() < 2 {
            return Err(Error::invalid("trajectory needs at least 2 keyframes"));
        }
        for pair in keyframes.windows(2) {
            if pair[1].0 <= pair[0].0 || pair[1].0.is_nan() || pair[0].0.is_nan() {
                return Err(Error::invalid(
                    "trajectory keyframe times must be strictly increasing",
                ));
            }
        }
        for &(t, theta) in &keyframes {
            if !t.is_finite() || !theta.is_finite() {
                return Err(Error::invalid("trajectory keyframes must be finite"));
            }
        }
        Ok(Trajectory { keyframes })
    }

    pub fn keyframes(&self) -> &[(f64, f64)] {
        &self.keyframes
    }

    /// Angle and angular velocity at time `t`.
    pub fn sample(&self, t: f64) -> (f64, f64) {
        let first = self.keyframes[0];
        let last = *self.keyframes.last().unwrap();
        if t <= first.0 {
            return (first.1, 0.0);
        }
        if t >= last.0 {
            return (last.1, 0.0);
        }
        // Segment index: the last keyframe at or before t.
        let idx = match self
            .keyframes
            .binary_search_by(|kf| kf.0.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let (t0, th0) = self.keyframes[idx];
        let (t1, th1) = self.keyframes[idx + 1];
        let span = t1 - t0;
        let u = (t - t0) / span;
        let theta = th0 + (th1 - th0) * smoothstep(u);
        let theta_dot = (th1 - th0) * smoothstep_deriv(u) / span;
        (theta, theta_dot)
    }

    /// Samples the trajectory on a fixed grid: `(t, theta, theta_dot)` rows
    /// for `t = 0, dt, ..., < duration`.
    pub fn series(&self, dt: f64, duration: f64) -> Result<Vec<(f64, f64, f64)>> {
        if dt <= 0.0 || dt.is_nan() {
            return Err(Error::invalid("dt must be > 0"));
        }
        let n = (duration / dt).round().max(0.0) as usize;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let t = i as f64 * dt;
            let (theta, theta_dot) = self.sample(t);
            out.push((t, theta, theta_dot));
        }
        Ok(out)
    }
}
