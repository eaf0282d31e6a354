//! Follower-side control: pick the critical obstacle point, reconstruct the
//! leader's wrench from one integrator step, and produce the reactive input.
//!
//! The reactive input is `K2` times the reconstructed leader wrench plus, when
//! a cloud point sits within the reaction radius, a term whose gains are sized
//! so the sum never leaves the input box: the assist share `K2` and the
//! reaction share `1 - K2` split each force budget exactly.

use serde::{Deserialize, Serialize};

use crate::dynamics::{InputBounds, JointState, RodParams, Wrench};
use crate::environment::PointCloud;
use crate::geometry::{self, Point};
use crate::scalar::wrap_angle;
use crate::{Scalar, SimError};

/// Distance ties below this are broken by the velocity-alignment rule (m).
pub const TOL_TIE: f64 = 1e-9;

/// Reactive policy parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FollowerConfig<F> {
    /// Share of the reconstructed leader input the follower mirrors, in (0, 1).
    pub k2: F,
    /// Reaction radius: obstacle points farther than this are ignored (m).
    pub d_cr: F,
    /// Input box both robots share.
    pub bounds: InputBounds<F>,
}

impl<F: Scalar> FollowerConfig<F> {
    pub fn validate(&self) -> Result<(), SimError> {
        self.bounds.validate()?;
        if !self.k2.is_finite() || self.k2 <= F::zero() || self.k2 >= F::one() {
            return Err(SimError::InvalidParameter {
                what: "follower config",
                why: format!("k2 must lie strictly inside (0, 1), got {}", self.k2),
            });
        }
        if !self.d_cr.is_finite() || self.d_cr <= F::zero() {
            return Err(SimError::InvalidParameter {
                what: "follower config",
                why: format!("d_cr must be finite and positive, got {}", self.d_cr),
            });
        }
        Ok(())
    }

    /// Axial reaction gain: saturates the axial budget exactly at contact.
    pub fn k1_axial(&self) -> F {
        self.bounds.f_a * (F::one() - self.k2) / self.d_cr
    }

    /// Perpendicular reaction gain.
    pub fn k1_perp(&self) -> F {
        self.bounds.f_p * (F::one() - self.k2) / self.d_cr
    }
}

/// The obstacle point the follower is currently reacting to.
///
/// `phi` is the signed angle from the follower-to-obstacle direction to the
/// follower-to-leader direction, so the obstacle sits at world angle
/// `theta - phi` as seen from the follower. The leader's decoder relies on
/// exactly this convention.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalObstacle<F> {
    pub point: Point<F>,
    /// Distance from the follower to the point (m), within `[0, d_cr]`.
    pub d: F,
    /// Signed offset angle described above (rad), in `(-pi, pi]`.
    pub phi: F,
}

/// Selects the nearest cloud point within the reaction radius. Distance ties
/// within [`TOL_TIE`] go to the point the follower is moving toward most
/// directly; exact cosine ties (and a zero follower velocity) fall back to the
/// lexicographically smallest point.
pub fn select_critical<F: Scalar>(
    cloud: &PointCloud<F>,
    follower_pos: Point<F>,
    follower_vel: Point<F>,
    leader_pos: Point<F>,
    cfg: &FollowerConfig<F>,
) -> Option<CriticalObstacle<F>> {
    let candidates = cloud.indices_within(follower_pos, cfg.d_cr);
    if candidates.is_empty() {
        return None;
    }
    let d_min = candidates.iter().map(|(_, d)| *d).fold(F::infinity(), F::min);
    let tol = F::c(TOL_TIE);
    let speed = geometry::norm(follower_vel);

    let alignment = |p: Point<F>, d: F| -> F {
        if speed == F::zero() || d == F::zero() {
            return F::one();
        }
        geometry::dot(follower_vel, geometry::sub(p, follower_pos)) / (speed * d)
    };

    let mut best: Option<(Point<F>, F, F)> = None;
    for (idx, d) in candidates {
        if d > d_min + tol {
            continue;
        }
        let p = cloud.points()[idx as usize].pos;
        let a = if speed == F::zero() { F::one() } else { alignment(p, d) };
        let better = match &best {
            None => true,
            Some((bp, _, ba)) => a > *ba || (a == *ba && (p[0], p[1]) < (bp[0], bp[1])),
        };
        if better {
            best = Some((p, d, a));
        }
    }

    let (point, d, _) = best?;
    let to_leader = wrap_angle(
        (leader_pos[1] - follower_pos[1]).atan2(leader_pos[0] - follower_pos[0]),
    );
    let to_obstacle = (point[1] - follower_pos[1]).atan2(point[0] - follower_pos[0]);
    let phi = wrap_angle(to_leader - to_obstacle);
    Some(CriticalObstacle { point, d, phi })
}

/// Reactive follower input for the already-reconstructed leader wrench and the
/// current critical obstacle, clamped into the input box as a final guard. The
/// gain construction keeps the result inside the box already; the clamp only
/// absorbs roundoff.
pub fn reactive_input<F: Scalar>(
    u_hat: &Wrench<F>,
    critical: Option<&CriticalObstacle<F>>,
    cfg: &FollowerConfig<F>,
) -> Result<Wrench<F>, SimError> {
    let mut v = u_hat.scale(cfg.k2);
    if let Some(cr) = critical {
        if cr.d < F::zero() || cr.d > cfg.d_cr {
            return Err(SimError::Contract(format!(
                "critical obstacle distance {} outside [0, {}]",
                cr.d, cfg.d_cr
            )));
        }
        let gap = cfg.d_cr - cr.d;
        v.f_a += cfg.k1_axial() * gap * cr.phi.cos();
        v.f_p -= cfg.k1_perp() * gap * cr.phi.sin();
    }
    if !v.is_finite() {
        return Err(SimError::NonFinite("reactive input"));
    }
    Ok(cfg.bounds.clamp(v))
}

/// Reconstructs the leader's wrench from two consecutive state estimates one
/// integrator sub-step apart and the follower's own applied wrench.
///
/// The plant advances by explicit Euler, so the velocity and rate increments
/// over `[t, t + delta)` are `delta` times the accelerations at `t`; those are
/// three equations linear in the three unknown leader components. The angular
/// equation isolates the net moment, the translational pair is a rotation of
/// the leader force, so the system inverts in closed form for any heading.
pub fn infer_leader_input<F: Scalar>(
    params: &RodParams<F>,
    s_t: &JointState<F>,
    s_t_delta: &JointState<F>,
    v_prev: &Wrench<F>,
    delta: F,
) -> Result<Wrench<F>, SimError> {
    invert_substep(params, s_t, s_t_delta, delta, v_prev, End::Leader)
}

pub(crate) enum End {
    Leader,
    Follower,
}

/// Shared closed-form inversion of one Euler sub-step for the wrench applied
/// at either rod end, given the wrench at the other end.
pub(crate) fn invert_substep<F: Scalar>(
    params: &RodParams<F>,
    s_start: &JointState<F>,
    s_end: &JointState<F>,
    h: F,
    known: &Wrench<F>,
    solve_for: End,
) -> Result<Wrench<F>, SimError> {
    params.validate()?;
    if !h.is_finite() || h <= F::zero() {
        return Err(SimError::Estimation(format!("sub-step length must be positive, got {h}")));
    }
    if !s_start.is_finite() || !s_end.is_finite() || !known.is_finite() {
        return Err(SimError::NonFinite("inference inputs"));
    }

    let m = params.total_mass();
    let j = params.inertia();
    let q1 = (s_end.vx - s_start.vx) / h;
    let q2 = (s_end.vy - s_start.vy) / h;
    let ang_acc = (s_end.omega - s_start.omega) / h;
    let (sin_t, cos_t) = s_start.theta.sin_cos();
    let w2 = s_start.omega * s_start.omega;

    // Net force components in the rod frame, from the translational equations.
    let axial_total = m * (q1 + params.l_l * sin_t * ang_acc + params.l_l * cos_t * w2) * cos_t
        + m * (q2 - params.l_l * cos_t * ang_acc + params.l_l * sin_t * w2) * sin_t;
    let perp_total = -m * (q1 + params.l_l * sin_t * ang_acc + params.l_l * cos_t * w2) * sin_t
        + m * (q2 - params.l_l * cos_t * ang_acc + params.l_l * sin_t * w2) * cos_t;

    let f_a = axial_total - known.f_a;
    let f_p = perp_total - known.f_p;
    let tau = match solve_for {
        // j * ang_acc = -v.f_p * l_f + u.f_p * l_l + u.tau + v.tau
        End::Leader => j * ang_acc + known.f_p * params.l_f - f_p * params.l_l - known.tau,
        End::Follower => j * ang_acc + f_p * params.l_f - known.f_p * params.l_l - known.tau,
    };

    let out = Wrench::new(f_a, f_p, tau);
    if !out.is_finite() {
        return Err(SimError::NonFinite("inferred wrench"));
    }
    Ok(out)
}
