//! Leader-side planner: a short-horizon MPC over the leader's accumulated
//! obstacle points.
//!
//! The prediction model assumes the follower mirrors the leader input scaled
//! by `k2` and rolls the rod dynamics forward with the same explicit-Euler
//! step the plant uses. The cost is a quadratic tracking term toward the
//! target state, a quadratic input cost, and hinge-squared clearance penalties
//! evaluated at sampled points along the rod, against both the point cloud and
//! the four workspace walls. The solver is projected gradient descent with
//! central finite differences and a backtracking line search; the input box is
//! enforced by projection, so every iterate is feasible.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    euler_substep, follower_position, swap_view, InputBounds, JointState, RodParams, Wrench,
};
use crate::environment::{PointCloud, Rect};
use crate::{Scalar, SimError};

/// Planner parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig<F> {
    /// Prediction horizon in control periods.
    pub horizon: usize,
    /// Prediction step length (s); matches the control period.
    pub t_s: F,
    /// Assist share assumed for the follower in the prediction model.
    pub k2: F,
    /// Diagonal state tracking weights for `[x, vx, y, vy, theta, omega]`.
    pub q_s: [F; 6],
    /// Diagonal input weights for `[f_a, f_p, tau]`.
    pub q_i: [F; 3],
    /// Target state the initial leader should reach.
    pub s_tar: JointState<F>,
    /// Input box applied to every stage.
    pub bounds: InputBounds<F>,
    /// Interpolation samples along the rod used for clearance penalties; must
    /// include both endpoints.
    pub alpha_samples: Vec<F>,
    /// Clearance distance below which the hinge penalty engages (m).
    pub d_safe: F,
    /// Hinge penalty weight.
    pub w_obs: F,
    /// Workspace rectangle penalized through the same hinge.
    pub walls: Rect<F>,
    /// Iteration cap for the descent loop.
    pub max_iters: u32,
    /// Finite-difference step for the gradient.
    pub grad_step: F,
    /// Stop once an accepted step reduces the cost by less than this.
    pub tol: F,
    /// Evaluate the tracking term in the opposite rod frame. Set after a role
    /// switch so the cost keeps penalizing the initial leader's state.
    pub swap_cost_frame: bool,
}

impl<F: Scalar> MpcConfig<F> {
    pub fn validate(&self) -> Result<(), SimError> {
        self.bounds.validate()?;
        self.walls.validate()?;
        let bad = |what: &'static str, why: String| Err(SimError::InvalidParameter { what, why });
        if self.horizon == 0 {
            return bad("mpc config", "horizon must be at least 1".into());
        }
        if !self.t_s.is_finite() || self.t_s <= F::zero() {
            return bad("mpc config", format!("t_s must be positive, got {}", self.t_s));
        }
        if !self.k2.is_finite() || self.k2 <= F::zero() || self.k2 >= F::one() {
            return bad("mpc config", format!("k2 must lie in (0, 1), got {}", self.k2));
        }
        for w in self.q_s.iter().chain(self.q_i.iter()) {
            if !w.is_finite() || *w < F::zero() {
                return bad("mpc config", format!("weights must be finite and nonnegative, got {w}"));
            }
        }
        if self.alpha_samples.is_empty()
            || self.alpha_samples.iter().any(|a| !a.is_finite() || *a < F::zero() || *a > F::one())
        {
            return bad("mpc config", "alpha samples must lie in [0, 1]".into());
        }
        let has = |v: F| self.alpha_samples.iter().any(|a| (*a - v).abs() < F::c(1e-12));
        if !has(F::zero()) || !has(F::one()) {
            return bad("mpc config", "alpha samples must include both rod endpoints".into());
        }
        for (name, v) in [("d_safe", self.d_safe), ("w_obs", self.w_obs), ("grad_step", self.grad_step), ("tol", self.tol)] {
            if !v.is_finite() || v <= F::zero() {
                return bad("mpc config", format!("{name} must be finite and positive, got {v}"));
            }
        }
        if self.max_iters == 0 {
            return bad("mpc config", "max_iters must be at least 1".into());
        }
        Ok(())
    }
}

/// Result of one planner solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpcSolution<F> {
    /// Box-feasible input sequence, one wrench per stage.
    pub inputs: Vec<Wrench<F>>,
    /// Rollout of the prediction model under `inputs`, `horizon + 1` states
    /// starting from the solve state.
    pub predicted: Vec<JointState<F>>,
    /// Cost of `inputs`.
    pub cost: F,
    /// Descent iterations spent.
    pub iterations: u32,
    /// Whether the loop stopped by tolerance rather than the iteration cap.
    pub converged: bool,
}

impl<F: Scalar> MpcSolution<F> {
    /// The input to apply this period.
    pub fn first_input(&self) -> Wrench<F> {
        self.inputs[0]
    }
}

/// Rolls the prediction model forward: each stage applies the stage input for
/// the leader and `k2` times it for the follower, for one Euler step.
pub fn predict<F: Scalar>(
    params: &RodParams<F>,
    cfg: &MpcConfig<F>,
    s0: &JointState<F>,
    inputs: &[Wrench<F>],
) -> Vec<JointState<F>> {
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(*s0);
    let mut s = *s0;
    for u in inputs {
        let v = u.scale(cfg.k2);
        s = euler_substep(params, &s, u, &v, cfg.t_s);
        states.push(s);
    }
    states
}

fn hinge<F: Scalar>(cfg: &MpcConfig<F>, d: F) -> F {
    let gap = cfg.d_safe - d;
    if gap > F::zero() {
        cfg.w_obs * gap * gap
    } else {
        F::zero()
    }
}

/// Hinge-squared clearance penalty between the rod (sampled at the configured
/// interpolation points between the two robots) and the obstacle cloud.
pub fn obstacle_penalty<F: Scalar>(
    cfg: &MpcConfig<F>,
    leader_pos: [F; 2],
    follower_pos: [F; 2],
    cloud: &PointCloud<F>,
) -> F {
    let mut total = F::zero();
    for &alpha in &cfg.alpha_samples {
        let p = [
            alpha * leader_pos[0] + (F::one() - alpha) * follower_pos[0],
            alpha * leader_pos[1] + (F::one() - alpha) * follower_pos[1],
        ];
        if let Some(d) = cloud.min_dist_within(p, cfg.d_safe) {
            total += hinge(cfg, d);
        }
    }
    total
}

/// The same hinge applied to the four workspace walls, keeping every sampled
/// rod point `d_safe` clear of the boundary.
pub fn boundary_penalty<F: Scalar>(cfg: &MpcConfig<F>, leader_pos: [F; 2], follower_pos: [F; 2]) -> F {
    let mut total = F::zero();
    for &alpha in &cfg.alpha_samples {
        let p = [
            alpha * leader_pos[0] + (F::one() - alpha) * follower_pos[0],
            alpha * leader_pos[1] + (F::one() - alpha) * follower_pos[1],
        ];
        total += hinge(cfg, p[0] - cfg.walls.min[0]);
        total += hinge(cfg, cfg.walls.max[0] - p[0]);
        total += hinge(cfg, p[1] - cfg.walls.min[1]);
        total += hinge(cfg, cfg.walls.max[1] - p[1]);
    }
    total
}

struct CostContext<'a, F: Scalar> {
    params: &'a RodParams<F>,
    cfg: &'a MpcConfig<F>,
    cloud: &'a PointCloud<F>,
    s0: JointState<F>,
}

impl<F: Scalar> CostContext<'_, F> {
    /// Total cost of a stacked input vector, rolling the prediction model
    /// inline.
    fn cost(&self, flat: &[F]) -> F {
        let cfg = self.cfg;
        let mut total = F::zero();
        let mut s = self.s0;
        for stage in flat.chunks_exact(3) {
            let u = Wrench::new(stage[0], stage[1], stage[2]);
            let v = u.scale(cfg.k2);
            s = euler_substep(self.params, &s, &u, &v, cfg.t_s);

            let tracked = if cfg.swap_cost_frame { swap_view(self.params, &s) } else { s };
            let ds = tracked.to_array();
            let dt = cfg.s_tar.to_array();
            for i in 0..6 {
                let e = ds[i] - dt[i];
                total += cfg.q_s[i] * e * e;
            }

            let lp = s.position();
            let fp = follower_position(self.params, &s);
            total += obstacle_penalty(cfg, lp, fp, self.cloud);
            total += boundary_penalty(cfg, lp, fp);

            total += cfg.q_i[0] * u.f_a * u.f_a + cfg.q_i[1] * u.f_p * u.f_p + cfg.q_i[2] * u.tau * u.tau;
        }
        total
    }

    /// Central-difference gradient of [`Self::cost`].
    fn gradient(&self, flat: &mut Vec<F>, grad: &mut Vec<F>) {
        let h = self.cfg.grad_step;
        grad.clear();
        for i in 0..flat.len() {
            let orig = flat[i];
            flat[i] = orig + h;
            let fp = self.cost(flat);
            flat[i] = orig - h;
            let fm = self.cost(flat);
            flat[i] = orig;
            grad.push((fp - fm) / (F::two() * h));
        }
    }

    fn project(&self, flat: &mut [F]) {
        let b = self.cfg.bounds;
        for stage in flat.chunks_exact_mut(3) {
            stage[0] = stage[0].min(b.f_a).max(-b.f_a);
            stage[1] = stage[1].min(b.f_p).max(-b.f_p);
            stage[2] = stage[2].min(b.tau).max(-b.tau);
        }
    }
}

/// Plans an input sequence from `s0` against `cloud`.
///
/// Starts from the better of the warm start and the zero sequence, so the
/// returned cost never exceeds either. Stops when an accepted step improves
/// the cost by less than `tol`, when no acceptable step remains, or at
/// `max_iters` (reported through `converged`).
pub fn solve<F: Scalar>(
    params: &RodParams<F>,
    cfg: &MpcConfig<F>,
    s0: &JointState<F>,
    cloud: &PointCloud<F>,
    warm_start: Option<&[Wrench<F>]>,
) -> Result<MpcSolution<F>, SimError> {
    cfg.validate()?;
    params.validate()?;
    if !s0.is_finite() {
        return Err(SimError::NonFinite("mpc initial state"));
    }
    let n = cfg.horizon;
    let ctx = CostContext { params, cfg, cloud, s0: *s0 };

    let mut x: Vec<F> = vec![F::zero(); 3 * n];
    if let Some(w) = warm_start {
        for (k, u) in w.iter().take(n).enumerate() {
            x[3 * k] = u.f_a;
            x[3 * k + 1] = u.f_p;
            x[3 * k + 2] = u.tau;
        }
        ctx.project(&mut x);
    }
    let zero = vec![F::zero(); 3 * n];
    let f_zero = ctx.cost(&zero);
    let mut fx = ctx.cost(&x);
    if f_zero < fx {
        x = zero;
        fx = f_zero;
    }
    if !fx.is_finite() {
        return Err(SimError::Solver(format!("non-finite cost at start: {fx}")));
    }

    let armijo = F::c(1e-4);
    let min_step = F::c(1e-16);
    let mut step = F::one();
    let mut grad: Vec<F> = Vec::with_capacity(3 * n);
    let mut trial: Vec<F> = vec![F::zero(); 3 * n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        iterations += 1;
        ctx.gradient(&mut x, &mut grad);

        let mut accepted = false;
        while step >= min_step {
            trial.clone_from(&x);
            for i in 0..trial.len() {
                trial[i] -= step * grad[i];
            }
            ctx.project(&mut trial);
            let moved: F = trial
                .iter()
                .zip(&x)
                .map(|(a, b)| (*a - *b) * (*a - *b))
                .fold(F::zero(), |acc, v| acc + v);
            if moved == F::zero() {
                break;
            }
            let f_trial = ctx.cost(&trial);
            if !f_trial.is_finite() {
                return Err(SimError::Solver("non-finite cost during line search".into()));
            }
            if f_trial <= fx - armijo / step * moved {
                let gain = fx - f_trial;
                std::mem::swap(&mut x, &mut trial);
                fx = f_trial;
                accepted = true;
                step *= F::two();
                if gain < cfg.tol {
                    converged = true;
                }
                break;
            }
            step /= F::two();
        }
        if !accepted {
            // No feasible descent direction at line-search resolution: the
            // iterate is stationary for our purposes.
            converged = true;
            break;
        }
        if converged {
            break;
        }
        log::trace!("mpc iteration {iterations}: cost {fx}");
    }

    let inputs: Vec<Wrench<F>> = x.chunks_exact(3).map(|c| Wrench::new(c[0], c[1], c[2])).collect();
    let predicted = predict(params, cfg, s0, &inputs);
    Ok(MpcSolution { inputs, predicted, cost: fx, iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::PointSource;
    use approx::assert_abs_diff_eq;

    fn params() -> RodParams<f64> {
        RodParams { m_l: 0.04, m_f: 0.04, m_r: 0.01, l_l: 0.8, l_f: 0.8 }
    }

    fn cfg() -> MpcConfig<f64> {
        MpcConfig {
            horizon: 3,
            t_s: 0.03,
            k2: 0.5,
            q_s: [120.0, 4.0, 120.0, 4.0, 0.0, 0.01],
            q_i: [0.05, 0.05, 0.01],
            s_tar: JointState::new(3.0, 0.0, 3.95, 0.0, 0.0, 0.0),
            bounds: InputBounds { f_a: 5.0, f_p: 5.0, tau: 0.5 },
            alpha_samples: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            d_safe: 0.5,
            w_obs: 500.0,
            walls: Rect { min: [0.0, 0.0], max: [9.0, 9.0] },
            max_iters: 200,
            grad_step: 1e-6,
            tol: 1e-6,
            swap_cost_frame: false,
        }
    }

    fn cloud_of(points: &[[f64; 2]]) -> PointCloud<f64> {
        let mut c = PointCloud::new();
        c.accumulate(points, PointSource::Sensed, 0);
        c
    }

    #[test]
    fn prediction_from_equilibrium_with_zero_inputs_is_constant() {
        let s0 = JointState::new(3.0, 0.0, 3.95, 0.0, 0.2, 0.0);
        let states = predict(&params(), &cfg(), &s0, &[Wrench::zero(); 3]);
        assert_eq!(states.len(), 4);
        for s in &states {
            assert_eq!(*s, s0);
        }
    }

    #[test]
    fn prediction_applies_the_assist_share() {
        let s0 = JointState::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let states = predict(&params(), &cfg(), &s0, &[Wrench::new(1.0, 0.0, 0.0)]);
        // Net axial force 1.5 over mass 0.09 for one 0.03 s step.
        assert_abs_diff_eq!(states[1].vx, 0.5, epsilon = 1e-12);
        assert_eq!(states[1].x, 0.0);
    }

    #[test]
    fn prediction_with_vanishing_assist_matches_lone_leader() {
        let mut c = cfg();
        c.k2 = 1e-300;
        let s0 = JointState::new(1.0, -0.5, 2.0, 0.25, 0.7, -0.3);
        let u = Wrench::new(2.0, -1.0, 0.2);
        let got = predict(&params(), &c, &s0, &[u]);
        let want = euler_substep(&params(), &s0, &u, &Wrench::zero(), 0.03);
        for (a, b) in got[1].to_array().iter().zip(want.to_array()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn empty_cloud_has_zero_penalty() {
        assert_eq!(obstacle_penalty(&cfg(), [0.0, 0.0], [1.6, 0.0], &cloud_of(&[])), 0.0);
    }

    #[test]
    fn distant_points_have_zero_penalty() {
        let cloud = cloud_of(&[[5.0, 5.0], [0.0, 0.51]]);
        assert_eq!(obstacle_penalty(&cfg(), [0.0, 0.0], [1.6, 0.0], &cloud), 0.0);
    }

    #[test]
    fn single_violation_matches_hand_value() {
        // Only the leader endpoint sample sits within d_safe of the point.
        let cloud = cloud_of(&[[-0.25, 0.0]]);
        let pen = obstacle_penalty(&cfg(), [0.0, 0.0], [1.6, 0.0], &cloud);
        assert_abs_diff_eq!(pen, 500.0 * 0.25 * 0.25, epsilon = 1e-9);
    }

    #[test]
    fn penalty_is_monotone_in_clearance() {
        let mut last = f64::INFINITY;
        for i in 0..30 {
            let d = 0.02 + 0.58 * i as f64 / 29.0;
            let cloud = cloud_of(&[[-d, 0.0]]);
            let pen = obstacle_penalty(&cfg(), [0.0, 0.0], [1.6, 0.0], &cloud);
            assert!(pen <= last, "penalty rose from {last} to {pen} at distance {d}");
            last = pen;
        }
        assert_eq!(last, 0.0);
    }

    #[test]
    fn wall_hinge_engages_near_the_boundary() {
        let c = cfg();
        assert_eq!(boundary_penalty(&c, [4.0, 4.0], [5.6, 4.0]), 0.0);
        let pen = boundary_penalty(&c, [0.25, 4.0], [1.85, 4.0]);
        assert_abs_diff_eq!(pen, 500.0 * 0.25 * 0.25, epsilon = 1e-9);
        // A point outside the wall is penalized harder than one on it.
        assert!(boundary_penalty(&c, [-0.1, 4.0], [1.5, 4.0]) > 500.0 * 0.25);
    }

    #[test]
    fn solving_at_the_target_returns_near_zero_inputs() {
        let s0 = cfg().s_tar;
        let sol = solve(&params(), &cfg(), &s0, &cloud_of(&[]), None).unwrap();
        for u in &sol.inputs {
            assert!(u.f_a.abs() <= 1e-4 && u.f_p.abs() <= 1e-4 && u.tau.abs() <= 1e-4, "{u:?}");
        }
        assert!(sol.cost <= 1e-9);
        assert!(sol.converged);
    }

    #[test]
    fn solving_off_target_pulls_toward_it() {
        let s0 = JointState::new(3.5, 0.0, 3.95, 0.0, 0.0, 0.0);
        let sol = solve(&params(), &cfg(), &s0, &cloud_of(&[]), None).unwrap();
        let zero_cost = {
            let ctx = CostContext { params: &params(), cfg: &cfg(), cloud: &cloud_of(&[]), s0 };
            ctx.cost(&vec![0.0; 9])
        };
        assert!(sol.cost < zero_cost);
        assert!(sol.first_input().f_a < 0.0, "expected a pull toward -x, got {:?}", sol.first_input());
    }

    #[test]
    fn solution_respects_the_box_from_any_warm_start() {
        let s0 = JointState::new(7.0, 1.0, 7.0, -2.0, 0.3, 0.5);
        let warm = vec![
            Wrench::new(50.0, -50.0, 9.0),
            Wrench::new(-50.0, 50.0, -9.0),
            Wrench::new(0.0, 0.0, 0.0),
        ];
        let sol = solve(&params(), &cfg(), &s0, &cloud_of(&[[6.5, 6.8]]), Some(&warm)).unwrap();
        let b = cfg().bounds;
        for u in &sol.inputs {
            assert!(b.contains(u, 0.0), "{u:?}");
        }
    }

    #[test]
    fn solution_cost_beats_zero_and_warm_start() {
        let s0 = JointState::new(6.0, 0.5, 5.0, -0.25, 0.1, 0.0);
        let cloud = cloud_of(&[[5.5, 4.8], [5.0, 4.9]]);
        let warm = vec![Wrench::new(1.0, 1.0, 0.1); 3];
        let ctx = CostContext { params: &params(), cfg: &cfg(), cloud: &cloud, s0 };
        let warm_flat: Vec<f64> = warm.iter().flat_map(|u| u.to_array()).collect();
        let sol = solve(&params(), &cfg(), &s0, &cloud, Some(&warm)).unwrap();
        assert!(sol.cost <= ctx.cost(&vec![0.0; 9]) + 1e-12);
        assert!(sol.cost <= ctx.cost(&warm_flat) + 1e-12);
    }

    #[test]
    fn more_iterations_never_raise_the_cost() {
        let s0 = JointState::new(6.0, 0.0, 6.0, 0.0, 0.4, 0.0);
        let cloud = cloud_of(&[[5.2, 5.6]]);
        let mut last = f64::INFINITY;
        for iters in [1, 3, 10, 60, 200] {
            let mut c = cfg();
            c.max_iters = iters;
            c.tol = 1e-14;
            let sol = solve(&params(), &c, &s0, &cloud, None).unwrap();
            assert!(sol.cost <= last + 1e-12, "cost rose at {iters} iterations");
            last = sol.cost;
        }
    }

    #[test]
    fn gradient_matches_an_independent_central_difference() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let cloud = cloud_of(&[[5.6, 5.1], [5.3, 5.4], [6.2, 5.9]]);
        let c = cfg();
        let p = params();
        for _ in 0..20 {
            let s0 = JointState::new(
                rng.random_range(4.0..7.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(4.0..7.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-1.0..1.0),
            );
            let ctx = CostContext { params: &p, cfg: &c, cloud: &cloud, s0 };
            let mut x: Vec<f64> = (0..9).map(|i| match i % 3 {
                0 | 1 => rng.random_range(-4.0..4.0),
                _ => rng.random_range(-0.4..0.4),
            }).collect();
            let mut grad = Vec::new();
            ctx.gradient(&mut x, &mut grad);
            // Oracle with a different step size.
            let h = 1e-5;
            for i in 0..x.len() {
                let orig = x[i];
                x[i] = orig + h;
                let fp = ctx.cost(&x);
                x[i] = orig - h;
                let fm = ctx.cost(&x);
                x[i] = orig;
                let oracle = (fp - fm) / (2.0 * h);
                let scale = oracle.abs().max(grad[i].abs()).max(1e-3);
                assert!(
                    (grad[i] - oracle).abs() / scale <= 1e-4,
                    "component {i}: {} vs oracle {oracle}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn swapped_frame_cost_matches_for_a_static_configuration() {
        let p = params();
        let mut c = cfg();
        let cloud = cloud_of(&[[5.0, 5.3], [5.8, 4.9]]);
        let s = JointState::new(5.5, 0.0, 5.0, 0.0, 0.6, 0.0);
        let ctx_a = CostContext { params: &p, cfg: &c, cloud: &cloud, s0: s };
        let cost_a = ctx_a.cost(&vec![0.0; 9]);
        let swapped = swap_view(&p, &s);
        let p_b = p.swapped();
        c.swap_cost_frame = true;
        let ctx_b = CostContext { params: &p_b, cfg: &c, cloud: &cloud, s0: swapped };
        let cost_b = ctx_b.cost(&vec![0.0; 9]);
        assert_abs_diff_eq!(cost_a, cost_b, epsilon = 1e-9);
    }

    #[test]
    fn config_validation_rejects_missing_endpoints() {
        let mut c = cfg();
        c.alpha_samples = vec![0.0, 0.5];
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.horizon = 0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.q_s[0] = -1.0;
        assert!(c.validate().is_err());
        assert!(cfg().validate().is_ok());
    }
}
