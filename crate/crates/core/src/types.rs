//! Shared domain types for the gripper, contact and object models.

use serde::{Deserialize, Serialize};

/// Per-contact tangential forces and spin torque in the contact plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarWrench {
    /// Tangential force x (N).
    pub fx: f64,
    /// Tangential force y (N).
    pub fy: f64,
    /// Spin torque about the contact normal (N·m).
    pub tau: f64,
}

impl PlanarWrench {
    pub const ZERO: PlanarWrench = PlanarWrench {
        fx: 0.0,
        fy: 0.0,
        tau: 0.0,
    };

    pub fn new(fx: f64, fy: f64, tau: f64) -> Self {
        Self { fx, fy, tau }
    }

    /// Euclidean norm of the tangential force component.
    pub fn tangential_norm(&self) -> f64 {
        self.fx.hypot(self.fy)
    }

    pub fn is_finite(&self) -> bool {
        self.fx.is_finite() && self.fy.is_finite() && self.tau.is_finite()
    }
}

impl std::ops::Add for PlanarWrench {
    type Output = PlanarWrench;
    fn add(self, rhs: PlanarWrench) -> PlanarWrench {
        PlanarWrench::new(self.fx + rhs.fx, self.fy + rhs.fy, self.tau + rhs.tau)
    }
}

impl std::ops::Mul<f64> for PlanarWrench {
    type Output = PlanarWrench;
    fn mul(self, k: f64) -> PlanarWrench {
        PlanarWrench::new(self.fx * k, self.fy * k, self.tau * k)
    }
}

/// Per-contact linear (m/s) and angular (rad/s) relative velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarVelocity {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl PlanarVelocity {
    pub const ZERO: PlanarVelocity = PlanarVelocity {
        vx: 0.0,
        vy: 0.0,
        omega: 0.0,
    };

    pub fn new(vx: f64, vy: f64, omega: f64) -> Self {
        Self { vx, vy, omega }
    }

    /// Euclidean norm of the linear component.
    pub fn tangential_norm(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.omega.is_finite()
    }
}

/// Stribeck friction coefficients and the rim radius of the equivalent
/// ring contact whose ellipsoid limit surface the model uses.
///
/// `mu_v` may be negative: identification on real materials reports
/// negative viscous slopes for some surfaces (e.g. plywood).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactParams {
    /// Static friction coefficient.
    pub mu_s: f64,
    /// Coulomb friction coefficient, `0 < mu_c <= mu_s`.
    pub mu_c: f64,
    /// Viscous friction coefficient (s/m).
    pub mu_v: f64,
    /// Stribeck velocity (m/s).
    pub v_s: f64,
    /// Rim contact radius (m).
    pub r: f64,
}

impl ContactParams {
    pub fn new(mu_s: f64, mu_c: f64, mu_v: f64, v_s: f64, r: f64) -> Self {
        Self {
            mu_s,
            mu_c,
            mu_v,
            v_s,
            r,
        }
    }

    pub fn validate(&self) -> Result<(), crate::SimError> {
        if !(self.mu_c > 0.0 && self.mu_s >= self.mu_c) {
            return Err(crate::SimError::InvalidParameter("require 0 < mu_c <= mu_s"));
        }
        if !(self.r > 0.0) {
            return Err(crate::SimError::InvalidParameter("require r > 0"));
        }
        if !(self.v_s > 0.0) {
            return Err(crate::SimError::InvalidParameter("require v_s > 0"));
        }
        Ok(())
    }
}

impl Default for ContactParams {
    fn default() -> Self {
        // Stribeck velocity default matches the scale of the estimator's
        // low-speed validity bound.
        ContactParams::new(0.55, 0.5, 1.0, 2e-3, 6e-3)
    }
}

/// Lumped two-mass model of the gripper drivetrain plus the contact
/// spring-damper pair; `m1` is the mass equivalent of the motor inertia.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripperParams {
    /// Motor-equivalent mass (kg).
    pub m1: f64,
    /// Finger-equivalent mass (kg).
    pub m2: f64,
    /// Transmission stiffness (N/m).
    pub k1: f64,
    /// Transmission damping (N·s/m).
    pub d1: f64,
    /// Contact stiffness (N/m); depends on the grasped object.
    pub k2: f64,
    /// Contact damping (N·s/m).
    pub d2: f64,
    /// Back-EMF damping coefficient (N·s/m).
    pub c_v: f64,
    /// Motor Coulomb friction magnitude (N); always opposes `v1`.
    pub f_f_motor: f64,
    /// Force-to-voltage gain (N/V).
    pub k_f: f64,
}

impl GripperParams {
    pub fn validate(&self) -> Result<(), crate::SimError> {
        let positive = [
            self.m1, self.m2, self.k1, self.d1, self.k2, self.d2, self.k_f,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(crate::SimError::InvalidParameter(
                "masses, stiffnesses, dampings and k_f must be > 0",
            ));
        }
        if self.c_v < 0.0 || self.f_f_motor < 0.0 {
            return Err(crate::SimError::InvalidParameter(
                "c_v and f_f_motor must be >= 0",
            ));
        }
        Ok(())
    }
}

impl Default for GripperParams {
    fn default() -> Self {
        // Desk-scale defaults chosen so a 5 -> 25 N step settles in tens of
        // milliseconds. These are config defaults, not measured truths.
        GripperParams {
            m1: 0.05,
            m2: 0.02,
            k1: 2e4,
            d1: 50.0,
            k2: 1e4,
            d2: 20.0,
            c_v: 5.0,
            f_f_motor: 0.3,
            k_f: 3.9166,
        }
    }
}

/// State of the two-mass gripper model. `x2` is the displacement of the
/// finger after it has made contact, so `x2 >= 0` always holds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GripperState {
    /// Motor-equivalent displacement (m).
    pub x1: f64,
    /// Motor-equivalent velocity (m/s).
    pub v1: f64,
    /// Finger compression past contact (m), clamped non-negative.
    pub x2: f64,
    /// Finger compression rate (m/s).
    pub v2: f64,
}

impl GripperState {
    /// Static equilibrium of the two-mass model for a constant commanded
    /// force: `x1 = (k1+k2)/(k1 k2) f_c`, `x2 = f_c/k2`, both velocities zero.
    pub fn equilibrium(params: &GripperParams, f_c: f64) -> Self {
        GripperState {
            x1: (params.k1 + params.k2) / (params.k1 * params.k2) * f_c,
            v1: 0.0,
            x2: f_c / params.k2,
            v2: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.v1.is_finite() && self.x2.is_finite() && self.v2.is_finite()
    }
}

/// Inertial properties of the grasped object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectParams {
    /// Mass (kg).
    pub mass: f64,
    /// Moment of inertia about the grasp axis (kg·m²).
    pub inertia_grasp: f64,
    /// Distance from the grasp point to the centre of gravity (m).
    pub cog_offset: f64,
    /// Grasp dimension (m).
    pub width: f64,
}

impl ObjectParams {
    pub fn validate(&self) -> Result<(), crate::SimError> {
        if !(self.mass > 0.0 && self.inertia_grasp > 0.0 && self.cog_offset >= 0.0) {
            return Err(crate::SimError::InvalidParameter(
                "mass and inertia must be > 0, cog_offset >= 0",
            ));
        }
        Ok(())
    }
}

impl Default for ObjectParams {
    fn default() -> Self {
        ObjectParams {
            mass: 0.15,
            inertia_grasp: 8e-4,
            cog_offset: 0.05,
            width: 0.07,
        }
    }
}

/// Slip state of the grasped object.
///
/// `p` is the linear slip displacement along the gravity axis and `theta`
/// the hang angle of the CoG axis measured from straight-down (zero when
/// the CoG is directly below the grasp point). The stick flags are true
/// only in full stick, which guarantees the corresponding relative
/// velocity is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectState {
    /// Linear slip displacement along gravity (m).
    pub p: f64,
    /// Linear slip velocity (m/s).
    pub v: f64,
    /// Hang angle of the CoG axis from vertical (rad).
    pub theta: f64,
    /// Rotational slip rate (rad/s).
    pub omega: f64,
    pub stuck_linear: bool,
    pub stuck_rot: bool,
}

impl ObjectState {
    /// Object at rest in full stick at the given hang angle.
    pub fn stuck_at(theta: f64) -> Self {
        ObjectState {
            p: 0.0,
            v: 0.0,
            theta,
            omega: 0.0,
            stuck_linear: true,
            stuck_rot: true,
        }
    }
}
