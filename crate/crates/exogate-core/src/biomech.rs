//! Quasi-static gravity-torque model of the human–box system.
//!
//! The trunk is modelled as a rigid segment pivoting about the hip. With the
//! trunk inclined by `theta` from the vertical, the upper-body weight and the
//! held box each produce a moment about the hip; the controller offloads a
//! scaled share of that moment. All angles are radians, all outputs SI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{real, Real};

/// Anthropometric and geometric constants feeding the torque model.
///
/// * `m_w` — upper-body mass (kg)
/// * `m_b` — box mass (kg); zero means no payload
/// * `g` — gravitational acceleration (m/s²)
/// * `l_w` — hip to upper-body centre of mass (m)
/// * `l_int` — hip to the torso–exoskeleton interaction point (m)
/// * `l_b` — horizontal box-COM offset forward of the interaction point (m),
///   treated as constant over the working range of trunk angles
///
/// `l_int >= l_w` is not required; the two are independent measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectParams<T> {
    pub m_w: T,
    pub m_b: T,
    pub g: T,
    pub l_w: T,
    pub l_int: T,
    pub l_b: T,
}

impl<T: Real> SubjectParams<T> {
    /// Checks the documented ranges. Masses may be zero (no box, test rigs);
    /// lengths and gravity must be strictly positive except `l_b >= 0`.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let zero = T::zero();
        // NaN fails every comparison, so each check lists NaN explicitly.
        if self.m_w <= zero || self.m_w.is_nan() {
            problems.push("m_w must be > 0");
        }
        if self.m_b < zero || self.m_b.is_nan() {
            problems.push("m_b must be >= 0");
        }
        if self.g <= zero || self.g.is_nan() {
            problems.push("g must be > 0");
        }
        if self.l_w <= zero || self.l_w.is_nan() {
            problems.push("l_w must be > 0");
        }
        if self.l_int <= zero || self.l_int.is_nan() {
            problems.push("l_int must be > 0");
        }
        if self.l_b < zero || self.l_b.is_nan() {
            problems.push("l_b must be >= 0");
        }
        for f in [self.m_w, self.m_b, self.g, self.l_w, self.l_int, self.l_b] {
            if !f.is_finite() {
                problems.push("all fields must be finite");
                break;
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(problems.join("; ")))
        }
    }
}

/// Trunk inclination sample: `theta_w = 0` is upright, positive is forward
/// flexion. Valid scenarios keep `theta_w` within `[0, pi/2]`; the simulator
/// clamps excursions and flags them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrunkAngle<T> {
    pub theta_w: T,
    pub theta_dot_w: T,
}

impl<T: Real> TrunkAngle<T> {
    /// Clamps the angle into `[0, pi/2]`. Returns the clamped sample and
    /// whether a clamp was applied.
    pub fn clamped(theta_w: T, theta_dot_w: T) -> (Self, bool) {
        let hi = real::<T>(std::f64::consts::FRAC_PI_2);
        let clamped = theta_w.max(T::zero()).min(hi);
        (
            TrunkAngle {
                theta_w: clamped,
                theta_dot_w,
            },
            clamped != theta_w,
        )
    }
}

fn check_finite<T: Real>(theta: T) -> Result<()> {
    if theta.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("theta"))
    }
}

/// Hip moment of the upper-body weight: `m_w * g * l_w * sin(theta)`.
pub fn trunk_gravity_torque<T: Real>(p: &SubjectParams<T>, theta: T) -> Result<T> {
    check_finite(theta)?;
    Ok(p.m_w * p.g * p.l_w * theta.sin())
}

/// Hip moment of the held box: `m_b * g * (l_int * sin(theta) + l_b)`.
///
/// `l_int * sin(theta)` is the horizontal projection of the interaction
/// point; the constant `l_b` keeps the moment nonzero even upright, because
/// the box is carried forward of the torso.
pub fn box_gravity_torque<T: Real>(p: &SubjectParams<T>, theta: T) -> Result<T> {
    check_finite(theta)?;
    let x_i = p.l_int * theta.sin();
    Ok(p.m_b * p.g * (x_i + p.l_b))
}

/// Total gravitational hip moment: trunk plus box.
pub fn total_gravity_torque<T: Real>(p: &SubjectParams<T>, theta: T) -> Result<T> {
    Ok(trunk_gravity_torque(p, theta)? + box_gravity_torque(p, theta)?)
}

/// Interaction force that would balance the full gravity moment through the
/// pad at `l_int`: `tau_g(theta) / l_int`. The matching interaction torque
/// `l_int * F` equals `tau_g` by construction.
pub fn equilibrium_interaction_force<T: Real>(p: &SubjectParams<T>, theta: T) -> Result<T> {
    if p.l_int <= T::zero() || p.l_int.is_nan() {
        return Err(Error::invalid("l_int must be > 0"));
    }
    Ok(total_gravity_torque(p, theta)? / p.l_int)
}

/// Optional overrides for [`derive_subject_params`]. Unset fields fall back
/// to documented defaults.
#[derive(Debug, Clone, Copy, Default)]
pub struct SubjectOverrides<T> {
    /// Fraction of height giving `l_w` (default 0.33; a population estimate,
    /// not a measured value).
    pub kappa_w: Option<T>,
    /// Fraction of height giving `l_int` (default 0.40; estimate as above).
    pub kappa_i: Option<T>,
    /// Horizontal box offset (default 0.30 m).
    pub l_b: Option<T>,
    /// Gravity (default 9.81 m/s²).
    pub g: Option<T>,
}

/// Derives subject parameters from total body mass and height.
///
/// The upper body is taken as 55% of total mass. Segment lengths default to
/// fixed fractions of height, which are rough estimates meant for quick
/// setup; measured values should be supplied directly when available.
pub fn derive_subject_params<T: Real>(
    total_mass: T,
    height: T,
    box_mass: T,
    overrides: SubjectOverrides<T>,
) -> Result<SubjectParams<T>> {
    if !(total_mass > T::zero() && total_mass.is_finite()) {
        return Err(Error::invalid("total_mass must be > 0"));
    }
    if !(height > T::zero() && height.is_finite()) {
        return Err(Error::invalid("height must be > 0"));
    }
    if !(box_mass >= T::zero() && box_mass.is_finite()) {
        return Err(Error::invalid("box_mass must be >= 0"));
    }
    let kappa_w = overrides.kappa_w.unwrap_or_else(|| real(0.33));
    let kappa_i = overrides.kappa_i.unwrap_or_else(|| real(0.40));
    let params = SubjectParams {
        m_w: real::<T>(0.55) * total_mass,
        m_b: box_mass,
        g: overrides.g.unwrap_or_else(|| real(9.81)),
        l_w: kappa_w * height,
        l_int: kappa_i * height,
        l_b: overrides.l_b.unwrap_or_else(|| real(0.30)),
    };
    params.validate()?;
    Ok(params)
}
