//! Leader-side estimation: reconstructing the follower's wrench from the
//! plant's response and decoding the obstacle that shaped it.
//!
//! The follower never transmits anything. Its wrench is recovered by inverting
//! one Euler sub-step, exactly as the follower recovers the leader's. The part
//! of the recovered wrench that deviates from the plain assist share is the
//! follower's reactive term, whose magnitude encodes the clearance to the
//! critical obstacle and whose direction encodes the bearing, so the leader
//! can place that obstacle in its own map without ever seeing it.

use serde::{Deserialize, Serialize};

use crate::dynamics::{follower_position, JointState, RodParams, Wrench};
use crate::follower::{invert_substep, CriticalObstacle, End, FollowerConfig};
use crate::{Scalar, SimError};

/// Residual force norm (N) below which the follower is taken to be assisting
/// only, with no reactive term to decode.
pub const TOL_REACT: f64 = 1e-6;

/// Outcome of one estimation pass over the second sub-step of a period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult<F> {
    /// Follower wrench reconstructed from the state increments.
    pub v_hat: Wrench<F>,
    /// Axial and perpendicular deviation of `v_hat` from the assist share of
    /// the leader input.
    pub residual: [F; 2],
    /// Obstacle decoded from the residual, when one was encoded.
    pub obstacle: Option<CriticalObstacle<F>>,
}

/// Reconstructs the follower's wrench from two consecutive states one
/// integrator sub-step apart and the leader's own applied wrench.
pub fn infer_follower_input<F: Scalar>(
    params: &RodParams<F>,
    s_start: &JointState<F>,
    s_end: &JointState<F>,
    u_applied: &Wrench<F>,
    h: F,
) -> Result<Wrench<F>, SimError> {
    invert_substep(params, s_start, s_end, h, u_applied, End::Follower)
}

/// Force-component deviation of the recovered follower wrench from a pure
/// assist: zero when the follower saw no critical obstacle.
pub fn reactive_residual<F: Scalar>(
    cfg: &FollowerConfig<F>,
    u_applied: &Wrench<F>,
    v_hat: &Wrench<F>,
) -> [F; 2] {
    [v_hat.f_a - cfg.k2 * u_applied.f_a, v_hat.f_p - cfg.k2 * u_applied.f_p]
}

/// Decodes the critical obstacle from a reactive residual.
///
/// Inverts the reactive law: dividing out the gains yields the vector
/// `(d_cr - d) [cos phi, sin phi]`, whose norm gives the clearance and whose
/// angle gives the bearing relative to the rod direction. The world position
/// follows from the follower position and heading in `s_decode`, which must be
/// the state at which the follower evaluated its policy. Returns `Ok(None)`
/// when the residual norm is within [`TOL_REACT`]; clearances negative beyond
/// the same tolerance are rejected as inconsistent, smaller excursions clamp
/// to contact.
pub fn recover_obstacle<F: Scalar>(
    params: &RodParams<F>,
    cfg: &FollowerConfig<F>,
    s_decode: &JointState<F>,
    residual: [F; 2],
) -> Result<Option<CriticalObstacle<F>>, SimError> {
    cfg.validate()?;
    if !residual[0].is_finite() || !residual[1].is_finite() {
        return Err(SimError::NonFinite("reactive residual"));
    }
    let tol = F::c(TOL_REACT);
    if residual[0].hypot(residual[1]) <= tol {
        return Ok(None);
    }
    let along = residual[0] / cfg.k1_axial();
    let across = -residual[1] / cfg.k1_perp();
    let gap = along.hypot(across);
    let mut d = cfg.d_cr - gap;
    if d < -tol {
        return Err(SimError::InconsistentResidual { decoded: d.to_f64().unwrap_or(f64::NAN) });
    }
    if d < F::zero() {
        d = F::zero();
    }
    let phi = across.atan2(along);
    let bearing = s_decode.theta - phi;
    let fp = follower_position(params, s_decode);
    let point = [fp[0] + d * bearing.cos(), fp[1] + d * bearing.sin()];
    Ok(Some(CriticalObstacle { point, d, phi }))
}

/// Runs the full estimation pass for one period: reconstructs the follower
/// wrench over the sub-step from `s_start` to `s_end`, forms the residual
/// against the applied leader input, and decodes the obstacle at `s_start`,
/// the state the follower acted on.
pub fn estimate<F: Scalar>(
    params: &RodParams<F>,
    cfg: &FollowerConfig<F>,
    s_start: &JointState<F>,
    s_end: &JointState<F>,
    u_applied: &Wrench<F>,
    h: F,
) -> Result<InferenceResult<F>, SimError> {
    let v_hat = infer_follower_input(params, s_start, s_end, u_applied, h)?;
    let residual = reactive_residual(cfg, u_applied, &v_hat);
    let obstacle = recover_obstacle(params, cfg, s_start, residual)?;
    Ok(InferenceResult { v_hat, residual, obstacle })
}
