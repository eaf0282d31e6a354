//! Rigid-rod dynamics for the two-robot transport system.
//!
//! The joint system is a rod of mass `m_r` with a point robot rigidly attached
//! at each end. States are expressed relative to the *leader* end: the state
//! vector is `[X_l, dX_l, Y_l, dY_l, theta, dtheta]` where `(X_l, Y_l)` is the
//! leader position and `theta` the world angle of the follower-to-leader
//! direction. Both robots apply a wrench expressed in the rod frame: an axial
//! force along the follower-to-leader direction, a perpendicular force 90 deg
//! counterclockwise from it, and a torque.
//!
//! `theta` is kept unwrapped while integrating; only [`swap_view`] (and
//! display code) reduces it to `(-pi, pi]`.

use serde::{Deserialize, Serialize};

use crate::scalar::wrap_angle;
use crate::{Scalar, SimError};

/// Masses and rod half-lengths of the joint system.
///
/// `l_l` and `l_f` are the distances from the system's reference point (the
/// rotation center used by the model) to the leader and follower ends. The
/// shipped parameters are symmetric but nothing here assumes `l_l == l_f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RodParams<F> {
    /// Leader robot mass (kg).
    pub m_l: F,
    /// Follower robot mass (kg).
    pub m_f: F,
    /// Rod mass (kg).
    pub m_r: F,
    /// Distance from the rotation center to the leader end (m).
    pub l_l: F,
    /// Distance from the rotation center to the follower end (m).
    pub l_f: F,
}

impl<F: Scalar> RodParams<F> {
    /// Validates that masses and half-lengths are finite and positive.
    pub fn validate(&self) -> Result<(), SimError> {
        let fields = [
            ("m_l", self.m_l),
            ("m_f", self.m_f),
            ("m_r", self.m_r),
            ("l_l", self.l_l),
            ("l_f", self.l_f),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= F::zero() {
                return Err(SimError::InvalidParameter {
                    what: "rod parameters",
                    why: format!("{name} must be finite and positive, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// Total mass of the joint system (kg).
    pub fn total_mass(&self) -> F {
        self.m_r + self.m_l + self.m_f
    }

    /// Moment of inertia of the joint system about its rotation center
    /// (kg m^2): uniform-rod term, the rod-center offset term, and the two
    /// point robots.
    pub fn inertia(&self) -> F {
        let len = self.l_l + self.l_f;
        let rod_center_offset = (self.l_l - self.l_f) / F::two();
        let twelve = F::c(12.0);
        self.m_r * len * len / twelve
            + self.m_r * rod_center_offset * rod_center_offset
            + self.m_l * self.l_l * self.l_l
            + self.m_f * self.l_f * self.l_f
    }

    /// Full rod length between the two robots (m).
    pub fn length(&self) -> F {
        self.l_l + self.l_f
    }

    /// The same rod with the leader and follower ends relabeled.
    pub fn swapped(&self) -> Self {
        Self {
            m_l: self.m_f,
            m_f: self.m_l,
            m_r: self.m_r,
            l_l: self.l_f,
            l_f: self.l_l,
        }
    }
}

/// State of the joint system, referenced to the leader end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointState<F> {
    /// Leader x position (m).
    pub x: F,
    /// Leader x velocity (m/s).
    pub vx: F,
    /// Leader y position (m).
    pub y: F,
    /// Leader y velocity (m/s).
    pub vy: F,
    /// World angle of the follower-to-leader direction (rad), unwrapped.
    pub theta: F,
    /// Angular rate (rad/s).
    pub omega: F,
}

impl<F: Scalar> JointState<F> {
    pub fn new(x: F, vx: F, y: F, vy: F, theta: F, omega: F) -> Self {
        Self { x, vx, y, vy, theta, omega }
    }

    pub fn from_array(s: [F; 6]) -> Self {
        Self::new(s[0], s[1], s[2], s[3], s[4], s[5])
    }

    pub fn to_array(self) -> [F; 6] {
        [self.x, self.vx, self.y, self.vy, self.theta, self.omega]
    }

    /// Leader position.
    pub fn position(&self) -> [F; 2] {
        [self.x, self.y]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// A robot input in the rod frame: axial force, perpendicular force, torque.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wrench<F> {
    /// Force along the follower-to-leader direction (N).
    pub f_a: F,
    /// Force 90 deg counterclockwise from the axial direction (N).
    pub f_p: F,
    /// Torque about the rotation center (N m).
    pub tau: F,
}

impl<F: Scalar> Wrench<F> {
    pub fn new(f_a: F, f_p: F, tau: F) -> Self {
        Self { f_a, f_p, tau }
    }

    pub fn zero() -> Self {
        Self::new(F::zero(), F::zero(), F::zero())
    }

    pub fn scale(&self, k: F) -> Self {
        Self::new(self.f_a * k, self.f_p * k, self.tau * k)
    }

    pub fn to_array(self) -> [F; 3] {
        [self.f_a, self.f_p, self.tau]
    }

    /// The same physical wrench re-expressed after the rod frame is relabeled
    /// to the opposite end: the axial and perpendicular directions both flip,
    /// the torque does not.
    pub fn flipped_frame(&self) -> Self {
        Self::new(-self.f_a, -self.f_p, self.tau)
    }

    pub fn is_finite(&self) -> bool {
        self.f_a.is_finite() && self.f_p.is_finite() && self.tau.is_finite()
    }
}

/// Symmetric box bounds on a wrench.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputBounds<F> {
    /// Axial force bound (N).
    pub f_a: F,
    /// Perpendicular force bound (N).
    pub f_p: F,
    /// Torque bound (N m).
    pub tau: F,
}

impl<F: Scalar> InputBounds<F> {
    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [("f_a", self.f_a), ("f_p", self.f_p), ("tau", self.tau)] {
            if !v.is_finite() || v <= F::zero() {
                return Err(SimError::InvalidParameter {
                    what: "input bounds",
                    why: format!("{name} must be finite and positive, got {v}"),
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, w: &Wrench<F>, tol: F) -> bool {
        w.f_a.abs() <= self.f_a + tol && w.f_p.abs() <= self.f_p + tol && w.tau.abs() <= self.tau + tol
    }

    /// Componentwise clamp of a wrench into the box.
    pub fn clamp(&self, w: Wrench<F>) -> Wrench<F> {
        Wrench::new(
            w.f_a.min(self.f_a).max(-self.f_a),
            w.f_p.min(self.f_p).max(-self.f_p),
            w.tau.min(self.tau).max(-self.tau),
        )
    }
}

/// Time derivative of the joint state under the given leader and follower
/// wrenches.
///
/// The angular acceleration collects both torques and the moments of the two
/// perpendicular forces; the leader accelerations are the center acceleration
/// plus the rigid-body terms for a point offset `l_l` along the rod.
pub fn eval_dynamics<F: Scalar>(
    params: &RodParams<F>,
    state: &JointState<F>,
    u: &Wrench<F>,
    v: &Wrench<F>,
) -> JointState<F> {
    let m = params.total_mass();
    let j = params.inertia();
    let (sin_t, cos_t) = state.theta.sin_cos();
    let w2 = state.omega * state.omega;

    let ang_acc = (-v.f_p * params.l_f + u.f_p * params.l_l + u.tau + v.tau) / j;
    let f_a = u.f_a + v.f_a;
    let f_p = u.f_p + v.f_p;
    let ax = -(params.l_l * sin_t * ang_acc + params.l_l * cos_t * w2) + (cos_t * f_a - sin_t * f_p) / m;
    let ay = (params.l_l * cos_t * ang_acc - params.l_l * sin_t * w2) + (sin_t * f_a + cos_t * f_p) / m;

    JointState::new(state.vx, ax, state.vy, ay, state.omega, ang_acc)
}

/// One explicit-Euler step of length `h` under constant wrenches.
///
/// Positions advance with the pre-step velocities. The estimators in
/// [`crate::follower`] and [`crate::inference`] invert exactly this update, so
/// any replacement integrator has to change both sides together.
pub fn euler_substep<F: Scalar>(
    params: &RodParams<F>,
    state: &JointState<F>,
    u: &Wrench<F>,
    v: &Wrench<F>,
    h: F,
) -> JointState<F> {
    let d = eval_dynamics(params, state, u, v);
    JointState::new(
        state.x + h * d.x,
        state.vx + h * d.vx,
        state.y + h * d.y,
        state.vy + h * d.vy,
        state.theta + h * d.theta,
        state.omega + h * d.omega,
    )
}

/// Reconstructs the leader-referenced state from the follower's own
/// measurements plus the rod angle and rate.
pub fn follower_view<F: Scalar>(
    params: &RodParams<F>,
    follower_pos: [F; 2],
    follower_vel: [F; 2],
    theta: F,
    omega: F,
) -> JointState<F> {
    let len = params.length();
    let (sin_t, cos_t) = theta.sin_cos();
    JointState::new(
        follower_pos[0] + len * cos_t,
        follower_vel[0] - len * sin_t * omega,
        follower_pos[1] + len * sin_t,
        follower_vel[1] + len * cos_t * omega,
        theta,
        omega,
    )
}

/// Follower position implied by a leader-referenced state.
pub fn follower_position<F: Scalar>(params: &RodParams<F>, state: &JointState<F>) -> [F; 2] {
    let len = params.length();
    let (sin_t, cos_t) = state.theta.sin_cos();
    [state.x - len * cos_t, state.y - len * sin_t]
}

/// Follower velocity implied by a leader-referenced state.
pub fn follower_velocity<F: Scalar>(params: &RodParams<F>, state: &JointState<F>) -> [F; 2] {
    let len = params.length();
    let (sin_t, cos_t) = state.theta.sin_cos();
    [state.vx + len * sin_t * state.omega, state.vy - len * cos_t * state.omega]
}

/// Re-references a state to the opposite rod end: the reference position moves
/// to the other robot and `theta` turns by pi (wrapped to `(-pi, pi]`).
/// Applying it twice returns the original state up to roundoff, with `theta`
/// equal modulo 2 pi.
pub fn swap_view<F: Scalar>(params: &RodParams<F>, state: &JointState<F>) -> JointState<F> {
    let pos = follower_position(params, state);
    let vel = follower_velocity(params, state);
    JointState::new(pos[0], vel[0], pos[1], vel[1], wrap_angle(state.theta + F::PI()), state.omega)
}
