//! The closed loop: one rigid rod, two robots, alternating sub-steps of
//! planning, reaction, estimation, and optional role handoff.
//!
//! Each control period runs a fixed script. The leader plans against its own
//! point cloud and holds the first planned wrench for the whole period. The
//! plant steps once to the follower's reaction instant; the follower
//! reconstructs the leader's wrench from that motion, re-evaluates its
//! reactive policy against its own cloud, and the plant finishes the period.
//! A learning leader then reconstructs the follower's wrench from the second
//! sub-step, decodes the critical obstacle behind its reactive term, and adds
//! it to its own map. Under the handoff strategy both sides check whether the
//! follower's critical clearance dropped below the switch threshold, and swap
//! roles at the next period boundary when it did.
//!
//! All agent knowledge is segregated: each robot owns a cloud fed only by its
//! own sensor and its own decoding. The plant state is shared, standing in for
//! each robot's proprioception plus the rigid-body constraint.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    euler_substep, follower_position, follower_velocity, swap_view, JointState, RodParams, Wrench,
};
use crate::environment::{sense, CloudPoint, PointCloud, PointSource, SensorConfig, Workspace};
use crate::follower::{infer_leader_input, reactive_input, select_critical, FollowerConfig};
use crate::inference::{estimate, InferenceResult};
use crate::mpc::{solve, MpcConfig};
use crate::{Scalar, SimError};

/// Identity of one robot, fixed for the whole trial; roles may move between
/// them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentId {
    /// The robot that leads at the start.
    A,
    /// The robot that follows at the start.
    B,
}

impl AgentId {
    pub fn other(self) -> Self {
        match self {
            AgentId::A => AgentId::B,
            AgentId::B => AgentId::A,
        }
    }

    pub fn index(self) -> usize {
        match self {
            AgentId::A => 0,
            AgentId::B => 1,
        }
    }
}

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AgentId::A => "A",
            AgentId::B => "B",
        })
    }
}

/// How much of the loop is enabled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// The leader plans on sensed points only; the follower still assists and
    /// reacts, but nothing is decoded from it.
    NoLearning,
    /// The leader decodes obstacles from the follower's reaction and plans on
    /// the union; roles stay fixed.
    Learning,
    /// Learning plus role handoff when the follower gets too close to its
    /// critical obstacle.
    LearningWithSwitching,
}

impl StrategyKind {
    pub fn learning_enabled(self) -> bool {
        !matches!(self, StrategyKind::NoLearning)
    }

    pub fn switching_enabled(self) -> bool {
        matches!(self, StrategyKind::LearningWithSwitching)
    }

    /// Stable label used in exports.
    pub fn label(self) -> &'static str {
        match self {
            StrategyKind::NoLearning => "no_learning",
            StrategyKind::Learning => "learning",
            StrategyKind::LearningWithSwitching => "learning_switching",
        }
    }

    pub fn all() -> [StrategyKind; 3] {
        [StrategyKind::NoLearning, StrategyKind::Learning, StrategyKind::LearningWithSwitching]
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Timing of the control loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule<F> {
    /// Control period (s); one plan is held for this long.
    pub t_s: F,
    /// Offset of the follower's reaction instant into the period (s).
    pub delta: F,
    /// Total simulated time (s); must be a whole number of periods.
    pub duration: F,
}

impl<F: Scalar> Schedule<F> {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |why: String| Err(SimError::InvalidParameter { what: "schedule", why });
        if !self.t_s.is_finite() || self.t_s <= F::zero() {
            return bad(format!("control period must be positive, got {}", self.t_s));
        }
        if !self.delta.is_finite() || self.delta <= F::zero() || self.delta >= self.t_s {
            return bad(format!(
                "reaction offset must lie strictly inside the period, got {}",
                self.delta
            ));
        }
        if !self.duration.is_finite() || self.duration <= F::zero() {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        let ratio = (self.duration / self.t_s).to_f64().unwrap_or(f64::NAN);
        if (ratio - ratio.round()).abs() > 1e-6 * ratio.round().max(1.0) {
            return bad(format!(
                "duration {} is not a whole number of {} s periods",
                self.duration, self.t_s
            ));
        }
        Ok(())
    }

    /// Number of control periods in the trial.
    pub fn n_periods(&self) -> u32 {
        (self.duration / self.t_s).to_f64().map_or(0.0, f64::round) as u32
    }

    /// Remainder of the period after the reaction instant (s).
    pub fn mu(&self) -> F {
        self.t_s - self.delta
    }
}

/// Everything a trial needs besides the workspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<F> {
    pub params: RodParams<F>,
    pub schedule: Schedule<F>,
    pub follower: FollowerConfig<F>,
    pub mpc: MpcConfig<F>,
    pub sensor: SensorConfig<F>,
    pub strategy: StrategyKind,
    /// Critical clearance at or below which roles swap (m).
    pub d_switch: F,
    /// Distance from the initial leader's position to the target position
    /// that counts as arrival (m).
    pub success_radius: F,
    /// Initial state, referenced to the initial leader.
    pub s0: JointState<F>,
}

impl<F: Scalar> SimConfig<F> {
    pub fn validate(&self) -> Result<(), SimError> {
        self.params.validate()?;
        self.schedule.validate()?;
        self.follower.validate()?;
        self.mpc.validate()?;
        self.sensor.ray_count()?;
        let bad = |why: String| Err(SimError::InvalidParameter { what: "sim config", why });
        if !self.d_switch.is_finite() || self.d_switch <= F::zero() {
            return bad(format!("switch threshold must be positive, got {}", self.d_switch));
        }
        if !self.success_radius.is_finite() || self.success_radius <= F::zero() {
            return bad(format!("success radius must be positive, got {}", self.success_radius));
        }
        if !self.s0.is_finite() {
            return Err(SimError::NonFinite("initial state"));
        }
        // The planner's internal model must agree with the loop it runs in;
        // a skew here would silently degrade both planning and decoding.
        if self.mpc.t_s != self.schedule.t_s {
            return bad(format!(
                "planner step {} differs from the control period {}",
                self.mpc.t_s, self.schedule.t_s
            ));
        }
        if self.mpc.k2 != self.follower.k2 {
            return bad(format!(
                "planner assist share {} differs from the follower's {}",
                self.mpc.k2, self.follower.k2
            ));
        }
        if self.mpc.bounds != self.follower.bounds {
            return bad("planner and follower input boxes differ".into());
        }
        Ok(())
    }
}

/// How a trial ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    /// The initial leader reached the target position.
    Success,
    /// The rod touched an obstacle or left the workspace.
    Collision,
    /// Time ran out.
    Timeout,
}

impl std::fmt::Display for TrialOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrialOutcome::Success => "success",
            TrialOutcome::Collision => "collision",
            TrialOutcome::Timeout => "timeout",
        })
    }
}

/// Planner diagnostics kept per period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveDiag<F> {
    pub cost: F,
    pub iterations: u32,
    pub converged: bool,
}

/// One integrator sub-step as recorded for export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubStepRecord<F> {
    /// Time at the end of the sub-step (s).
    pub t: F,
    /// Who led during the sub-step.
    pub leader: AgentId,
    /// State after the sub-step, always referenced to the initial leader.
    pub state: JointState<F>,
    /// Leader wrench applied during the sub-step, in the acting leader's frame.
    pub u: Wrench<F>,
    /// Follower wrench applied during the sub-step, same frame.
    pub v: Wrench<F>,
    /// Leader-side estimation output, on second sub-steps when learning.
    pub inferred: Option<InferenceResult<F>>,
    /// True on the first sub-step after a role handoff took effect.
    pub switched: bool,
    /// Planner diagnostics, on first sub-steps.
    pub solve: Option<SolveDiag<F>>,
}

/// Everything one finished trial produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord<F> {
    pub outcome: TrialOutcome,
    /// Completed control periods when the trial ended.
    pub periods: u32,
    /// Role handoffs that took effect.
    pub switches: u32,
    pub initial_state: JointState<F>,
    pub records: Vec<SubStepRecord<F>>,
    /// Final per-robot maps, indexed by [`AgentId::index`].
    pub clouds: [Vec<CloudPoint<F>>; 2],
}

/// One trial's mutable state.
pub struct Simulation<F: Scalar> {
    cfg: SimConfig<F>,
    workspace: Workspace<F>,
    mpc_cfg: MpcConfig<F>,
    state: JointState<F>,
    params: RodParams<F>,
    leader: AgentId,
    clouds: [PointCloud<F>; 2],
    /// Follower wrench in effect from the last sub-step, current frame.
    v_applied: Wrench<F>,
    /// Leader wrench held over the current period, current frame.
    u_applied: Wrench<F>,
    warm: Option<Vec<Wrench<F>>>,
    pending_switch: bool,
    switches: u32,
    period: u32,
    records: Vec<SubStepRecord<F>>,
    outcome: Option<TrialOutcome>,
}

impl<F: Scalar> Simulation<F> {
    /// Initial leader identity; `cfg.s0` is referenced to this robot.
    pub const INITIAL_LEADER: AgentId = AgentId::A;

    pub fn new(cfg: SimConfig<F>, workspace: Workspace<F>) -> Result<Self, SimError> {
        cfg.validate()?;
        workspace.validate()?;
        let mut mpc_cfg = cfg.mpc.clone();
        mpc_cfg.swap_cost_frame = false;
        let mut sim = Self {
            state: cfg.s0,
            params: cfg.params,
            leader: Self::INITIAL_LEADER,
            clouds: [PointCloud::new(), PointCloud::new()],
            v_applied: Wrench::zero(),
            u_applied: Wrench::zero(),
            warm: None,
            pending_switch: false,
            switches: 0,
            period: 0,
            records: Vec::new(),
            outcome: None,
            mpc_cfg,
            cfg,
            workspace,
        };
        if sim.collided() {
            sim.outcome = Some(TrialOutcome::Collision);
        }
        Ok(sim)
    }

    pub fn leader(&self) -> AgentId {
        self.leader
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    pub fn outcome(&self) -> Option<TrialOutcome> {
        self.outcome
    }

    pub fn state(&self) -> &JointState<F> {
        &self.state
    }

    pub fn cloud(&self, agent: AgentId) -> &PointCloud<F> {
        &self.clouds[agent.index()]
    }

    pub fn records(&self) -> &[SubStepRecord<F>] {
        &self.records
    }

    /// Current state re-referenced to the initial leader, whatever the roles.
    pub fn canonical_state(&self) -> JointState<F> {
        if self.leader == Self::INITIAL_LEADER {
            self.state
        } else {
            swap_view(&self.params, &self.state)
        }
    }

    fn collided(&self) -> bool {
        let a = self.state.position();
        let b = follower_position(&self.params, &self.state);
        self.workspace.rod_collides(a, b)
    }

    fn succeeded(&self) -> bool {
        let s = self.canonical_state();
        let dx = s.x - self.cfg.mpc.s_tar.x;
        let dy = s.y - self.cfg.mpc.s_tar.y;
        dx.hypot(dy) <= self.cfg.success_radius
    }

    /// Both robots sweep their sensors into their own clouds. Returns true if
    /// either robot sits inside an obstacle.
    fn sense_both(&mut self) -> Result<bool, SimError> {
        let lp = self.state.position();
        let fp = follower_position(&self.params, &self.state);
        let scan_l = sense(&self.workspace, lp, &self.cfg.sensor)?;
        let scan_f = sense(&self.workspace, fp, &self.cfg.sensor)?;
        if scan_l.origin_inside || scan_f.origin_inside {
            return Ok(true);
        }
        self.clouds[self.leader.index()].accumulate(&scan_l.hits, PointSource::Sensed, self.period);
        self.clouds[self.leader.other().index()].accumulate(
            &scan_f.hits,
            PointSource::Sensed,
            self.period,
        );
        Ok(false)
    }

    fn push_record(
        &mut self,
        t: F,
        u: Wrench<F>,
        v: Wrench<F>,
        inferred: Option<InferenceResult<F>>,
        switched: bool,
        solve: Option<SolveDiag<F>>,
    ) {
        let record = SubStepRecord {
            t,
            leader: self.leader,
            state: self.canonical_state(),
            u,
            v,
            inferred,
            switched,
            solve,
        };
        self.records.push(record);
    }

    /// Runs one control period; sets the outcome if the trial ended inside it.
    pub fn step_period(&mut self) -> Result<(), SimError> {
        if self.outcome.is_some() {
            return Err(SimError::Contract("stepping a finished trial".into()));
        }
        let sched = self.cfg.schedule;
        let t0 = F::c(self.period as f64) * sched.t_s;

        // A handoff latched last period takes effect at this boundary: the
        // state is re-referenced to the new leader, the rod parameters swap
        // ends, and the new follower's held wrench is its own previous leader
        // wrench expressed in the turned frame. The planner restarts cold and
        // keeps scoring the initial leader against the target.
        let switched = self.pending_switch;
        if self.pending_switch {
            self.pending_switch = false;
            self.state = swap_view(&self.params, &self.state);
            self.params = self.params.swapped();
            self.leader = self.leader.other();
            self.v_applied = self.u_applied.flipped_frame();
            self.warm = None;
            self.switches += 1;
            self.mpc_cfg.swap_cost_frame = self.leader != Self::INITIAL_LEADER;
        }

        if self.sense_both()? {
            self.outcome = Some(TrialOutcome::Collision);
            return Ok(());
        }

        // Leader plans on its own cloud and commits to the first stage.
        let sol = solve(
            &self.params,
            &self.mpc_cfg,
            &self.state,
            &self.clouds[self.leader.index()],
            self.warm.as_deref(),
        )?;
        let u = sol.first_input();
        self.u_applied = u;
        let mut next_warm = sol.inputs[1..].to_vec();
        next_warm.push(*sol.inputs.last().expect("horizon is at least 1"));
        self.warm = Some(next_warm);
        let diag = SolveDiag { cost: sol.cost, iterations: sol.iterations, converged: sol.converged };

        // First sub-step: follower still applies last period's wrench.
        let s_t = self.state;
        let v_prev = self.v_applied;
        let s_mid = euler_substep(&self.params, &s_t, &u, &v_prev, sched.delta);
        self.state = s_mid;
        self.push_record(t0 + sched.delta, u, v_prev, None, switched, Some(diag));
        if self.collided() {
            self.outcome = Some(TrialOutcome::Collision);
            return Ok(());
        }

        // Reaction instant: the follower reconstructs the leader's wrench from
        // the motion it just felt and re-evaluates its policy on its own map.
        let u_hat = infer_leader_input(&self.params, &s_t, &s_mid, &v_prev, sched.delta)?;
        let critical = select_critical(
            &self.clouds[self.leader.other().index()],
            follower_position(&self.params, &s_mid),
            follower_velocity(&self.params, &s_mid),
            s_mid.position(),
            &self.cfg.follower,
        );
        let v = reactive_input(&u_hat, critical.as_ref(), &self.cfg.follower)?;
        self.v_applied = v;

        // Second sub-step finishes the period.
        let s_end = euler_substep(&self.params, &s_mid, &u, &v, sched.mu());
        self.state = s_end;

        // A learning leader reads the follower's reaction back out of the
        // plant and maps the obstacle behind it.
        let mut inferred = None;
        if self.cfg.strategy.learning_enabled() {
            let est = estimate(&self.params, &self.cfg.follower, &s_mid, &s_end, &u, sched.mu())?;
            if let Some(ob) = est.obstacle {
                self.clouds[self.leader.index()].insert(
                    ob.point,
                    PointSource::Inferred,
                    self.period,
                );
            }
            inferred = Some(est);
        }
        self.push_record(t0 + sched.t_s, u, v, inferred, false, None);
        self.period += 1;
        if self.collided() {
            self.outcome = Some(TrialOutcome::Collision);
            return Ok(());
        }

        // Handoff check: the follower knows its critical clearance, the
        // leader knows the decoded one. They are the same quantity up to
        // roundoff, so the two independent decisions must agree.
        if self.cfg.strategy.switching_enabled() {
            let follower_wants = critical.as_ref().map_or(false, |c| c.d <= self.cfg.d_switch);
            let leader_wants = inferred
                .as_ref()
                .and_then(|e| e.obstacle.as_ref())
                .map_or(false, |o| o.d <= self.cfg.d_switch);
            if follower_wants != leader_wants {
                return Err(SimError::SwitchConsistency { period: self.period - 1 });
            }
            if follower_wants {
                self.pending_switch = true;
            }
        }

        if self.succeeded() {
            self.outcome = Some(TrialOutcome::Success);
        }
        Ok(())
    }

    /// Runs the trial to its end and returns everything it produced.
    pub fn run(mut self) -> Result<TrialRecord<F>, SimError> {
        let n = self.cfg.schedule.n_periods();
        while self.outcome.is_none() && self.period < n {
            self.step_period()?;
        }
        let [ca, cb] = self.clouds;
        Ok(TrialRecord {
            outcome: self.outcome.unwrap_or(TrialOutcome::Timeout),
            periods: self.period,
            switches: self.switches,
            initial_state: self.cfg.s0,
            records: self.records,
            clouds: [ca.into_points(), cb.into_points()],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::InputBounds;
    use crate::environment::{Obstacle, Rect};
    use approx::assert_abs_diff_eq;

    fn schedule() -> Schedule<f64> {
        Schedule { t_s: 0.03, delta: 0.02, duration: 2.7 }
    }

    fn config(strategy: StrategyKind, s0: JointState<f64>, s_tar: JointState<f64>) -> SimConfig<f64> {
        let bounds = InputBounds { f_a: 5.0, f_p: 5.0, tau: 0.5 };
        SimConfig {
            params: RodParams { m_l: 0.04, m_f: 0.04, m_r: 0.01, l_l: 0.8, l_f: 0.8 },
            schedule: schedule(),
            follower: FollowerConfig { k2: 0.5, d_cr: 1.1, bounds },
            mpc: MpcConfig {
                horizon: 3,
                t_s: 0.03,
                k2: 0.5,
                q_s: [120.0, 4.0, 120.0, 4.0, 0.0, 0.01],
                q_i: [0.05, 0.05, 0.01],
                s_tar,
                bounds,
                alpha_samples: vec![0.0, 0.25, 0.5, 0.75, 1.0],
                d_safe: 0.5,
                w_obs: 500.0,
                walls: Rect { min: [0.0, 0.0], max: [9.0, 9.0] },
                max_iters: 200,
                grad_step: 1e-6,
                tol: 1e-6,
                swap_cost_frame: false,
            },
            sensor: SensorConfig { range: 1.2, angular_resolution: std::f64::consts::TAU / 100.0 },
            strategy,
            d_switch: 0.8,
            success_radius: 0.5,
            s0,
        }
    }

    fn empty_workspace() -> Workspace<f64> {
        Workspace { bounds: Rect { min: [0.0, 0.0], max: [9.0, 9.0] }, obstacles: Vec::new() }
    }

    fn square(cx: f64, cy: f64, half: f64) -> Obstacle<f64> {
        Obstacle::new(vec![
            [cx - half, cy - half],
            [cx + half, cy - half],
            [cx + half, cy + half],
            [cx - half, cy + half],
        ])
        .unwrap()
    }

    #[test]
    fn schedule_counts_periods_and_splits_substeps() {
        let s = schedule();
        s.validate().unwrap();
        assert_eq!(s.n_periods(), 90);
        assert_abs_diff_eq!(s.mu(), 0.01, epsilon = 1e-15);

        assert!(Schedule { t_s: 0.03, delta: 0.03, duration: 2.7 }.validate().is_err());
        assert!(Schedule { t_s: 0.03, delta: 0.0, duration: 2.7 }.validate().is_err());
        assert!(Schedule { t_s: 0.03, delta: 0.02, duration: 2.71 }.validate().is_err());
        assert!(Schedule { t_s: -0.03, delta: 0.02, duration: 2.7 }.validate().is_err());
    }

    #[test]
    fn config_rejects_a_planner_out_of_step_with_the_loop() {
        let s0 = JointState::new(5.0, 0.0, 5.0, 0.0, 0.0, 0.0);
        let tar = JointState::new(4.0, 0.0, 5.0, 0.0, 0.0, 0.0);
        let mut c = config(StrategyKind::NoLearning, s0, tar);
        c.mpc.t_s = 0.02;
        assert!(c.validate().is_err());
        let mut c = config(StrategyKind::NoLearning, s0, tar);
        c.mpc.k2 = 0.4;
        assert!(c.validate().is_err());
        let mut c = config(StrategyKind::NoLearning, s0, tar);
        c.follower.bounds.tau = 0.4;
        assert!(c.validate().is_err());
        assert!(config(StrategyKind::NoLearning, s0, tar).validate().is_ok());
    }

    #[test]
    fn a_trial_starting_at_the_target_succeeds_in_one_period() {
        let s0 = JointState::new(5.0, 0.0, 5.0, 0.0, 0.0, 0.0);
        let sim = Simulation::new(config(StrategyKind::NoLearning, s0, s0), empty_workspace()).unwrap();
        let rec = sim.run().unwrap();
        assert_eq!(rec.outcome, TrialOutcome::Success);
        assert_eq!(rec.periods, 1);
        assert_eq!(rec.records.len(), 2);
        // Planner had nothing to correct, so the rod barely moved.
        let end = rec.records.last().unwrap().state;
        assert_abs_diff_eq!(end.x, s0.x, epsilon = 1e-6);
        assert_abs_diff_eq!(end.y, s0.y, epsilon = 1e-6);
    }

    #[test]
    fn an_out_of_reach_target_times_out() {
        let s0 = JointState::new(5.0, 0.0, 5.0, 0.0, 0.0, 0.0);
        let tar = JointState::new(1.0, 0.0, 1.0, 0.0, 0.0, 0.0);
        let mut cfg = config(StrategyKind::NoLearning, s0, tar);
        cfg.schedule.duration = 0.06;
        let sim = Simulation::new(cfg, empty_workspace()).unwrap();
        let rec = sim.run().unwrap();
        assert_eq!(rec.outcome, TrialOutcome::Timeout);
        assert_eq!(rec.periods, 2);
        assert_eq!(rec.records.len(), 4);
    }

    #[test]
    fn an_initial_overlap_is_a_collision_before_any_step() {
        let s0 = JointState::new(5.0, 0.0, 5.0, 0.0, 0.0, 0.0);
        let tar = JointState::new(4.0, 0.0, 5.0, 0.0, 0.0, 0.0);
        let mut ws = empty_workspace();
        ws.obstacles.push(square(4.2, 5.0, 0.3));
        let sim = Simulation::new(config(StrategyKind::NoLearning, s0, tar), ws).unwrap();
        assert_eq!(sim.outcome(), Some(TrialOutcome::Collision));
        let rec = sim.run().unwrap();
        assert_eq!(rec.outcome, TrialOutcome::Collision);
        assert_eq!(rec.periods, 0);
        assert!(rec.records.is_empty());
    }

    #[test]
    fn a_learning_leader_maps_what_only_the_follower_sees() {
        // Obstacle close to the follower, outside the leader's sensor range.
        let s0 = JointState::new(5.0, 0.0, 5.0, 0.0, 0.0, 0.0);
        let tar = JointState::new(8.0, 0.0, 5.0, 0.0, 0.0, 0.0);
        let mut ws = empty_workspace();
        ws.obstacles.push(square(3.4, 5.9, 0.1));

        for strategy in [StrategyKind::NoLearning, StrategyKind::Learning] {
            let mut sim = Simulation::new(config(strategy, s0, tar), ws.clone()).unwrap();
            sim.step_period().unwrap();
            let inferred: Vec<_> = sim
                .cloud(AgentId::A)
                .points()
                .iter()
                .filter(|p| p.source == PointSource::Inferred)
                .cloned()
                .collect();
            match strategy {
                StrategyKind::NoLearning => assert!(inferred.is_empty()),
                _ => {
                    assert_eq!(inferred.len(), 1);
                    // The decoded point is one the follower actually sensed.
                    let p = inferred[0].pos;
                    let close = sim.cloud(AgentId::B).points().iter().any(|sp| {
                        (sp.pos[0] - p[0]).hypot(sp.pos[1] - p[1]) < 1e-6
                    });
                    assert!(close, "decoded point {p:?} matches no sensed point");
                    // And the leader could not have sensed anything itself.
                    assert!(sim
                        .cloud(AgentId::A)
                        .points()
                        .iter()
                        .all(|cp| cp.source == PointSource::Inferred));
                }
            }
        }
    }

    #[test]
    fn strategies_coincide_while_the_follower_is_unobstructed() {
        let s0 = JointState::new(5.0, 0.0, 5.0, 0.0, 0.0, 0.0);
        let tar = JointState::new(4.0, 0.0, 5.0, 0.0, 0.0, 0.0);
        let mut runs = Vec::new();
        for strategy in StrategyKind::all() {
            let mut cfg = config(strategy, s0, tar);
            cfg.schedule.duration = 0.15;
            cfg.success_radius = 0.05;
            let rec = Simulation::new(cfg, empty_workspace()).unwrap().run().unwrap();
            runs.push(rec);
        }
        let base = &runs[0];
        for other in &runs[1..] {
            assert_eq!(base.records.len(), other.records.len());
            for (a, b) in base.records.iter().zip(&other.records) {
                assert_eq!(a.state.to_array(), b.state.to_array());
                assert_eq!(a.u.to_array(), b.u.to_array());
                assert_eq!(a.v.to_array(), b.v.to_array());
            }
            assert_eq!(base.outcome, other.outcome);
        }
    }

    #[test]
    fn a_close_critical_obstacle_hands_the_lead_over() {
        let s0 = JointState::new(5.0, 0.0, 5.0, 0.0, 0.0, 0.0);
        let tar = JointState::new(8.0, 0.0, 5.0, 0.0, 0.0, 0.0);
        let mut ws = empty_workspace();
        ws.obstacles.push(square(3.4, 5.5, 0.1));

        let mut cfg = config(StrategyKind::LearningWithSwitching, s0, tar);
        cfg.schedule.duration = 0.06;
        let mut sim = Simulation::new(cfg, ws).unwrap();
        sim.step_period().unwrap();
        assert_eq!(sim.leader(), AgentId::A);
        sim.step_period().unwrap();
        assert_eq!(sim.leader(), AgentId::B);
        let recs = sim.records();
        assert_eq!(recs.len(), 4);
        assert!(!recs[0].switched && !recs[1].switched);
        assert!(recs[2].switched);
        assert_eq!(recs[2].leader, AgentId::B);
        // The canonical state stays continuous across the handoff.
        let before = recs[1].state;
        let after = recs[2].state;
        assert!((after.x - before.x).abs() < 0.05, "{} vs {}", after.x, before.x);
        assert!((after.y - before.y).abs() < 0.05, "{} vs {}", after.y, before.y);
    }

    #[test]
    fn identical_configs_replay_identically() {
        let s0 = JointState::new(5.0, 0.0, 5.0, 0.0, 0.1, 0.0);
        let tar = JointState::new(7.0, 0.0, 6.0, 0.0, 0.0, 0.0);
        let mut ws = empty_workspace();
        ws.obstacles.push(square(3.5, 5.6, 0.15));
        let run = |ws: &Workspace<f64>| {
            let mut cfg = config(StrategyKind::LearningWithSwitching, s0, tar);
            cfg.schedule.duration = 0.12;
            Simulation::new(cfg, ws.clone()).unwrap().run().unwrap()
        };
        let a = run(&ws);
        let b = run(&ws);
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.state.to_array(), rb.state.to_array());
            assert_eq!(ra.u.to_array(), rb.u.to_array());
            assert_eq!(ra.v.to_array(), rb.v.to_array());
            assert_eq!(ra.leader, rb.leader);
        }
        assert_eq!(a.clouds[0].len(), b.clouds[0].len());
        assert_eq!(a.clouds[1].len(), b.clouds[1].len());
        for (pa, pb) in a.clouds[0].iter().zip(&a.clouds[0]) {
            assert_eq!(pa.pos, pb.pos);
        }
    }

    #[test]
    fn clouds_only_grow_as_periods_pass() {
        let s0 = JointState::new(5.0, 0.0, 5.0, 0.0, 0.0, 0.0);
        let tar = JointState::new(7.5, 0.0, 5.0, 0.0, 0.0, 0.0);
        let mut ws = empty_workspace();
        ws.obstacles.push(square(3.4, 5.8, 0.1));
        let mut cfg = config(StrategyKind::Learning, s0, tar);
        cfg.schedule.duration = 0.15;
        let mut sim = Simulation::new(cfg, ws).unwrap();
        let mut last = (0, 0);
        for _ in 0..5 {
            sim.step_period().unwrap();
            let now = (sim.cloud(AgentId::A).len(), sim.cloud(AgentId::B).len());
            assert!(now.0 >= last.0 && now.1 >= last.1);
            last = now;
        }
        assert!(last.1 > 0, "the follower never sensed the obstacle");
    }

    #[test]
    fn stepping_a_finished_trial_is_an_error() {
        let s0 = JointState::new(5.0, 0.0, 5.0, 0.0, 0.0, 0.0);
        let mut sim =
            Simulation::new(config(StrategyKind::NoLearning, s0, s0), empty_workspace()).unwrap();
        sim.step_period().unwrap();
        assert_eq!(sim.outcome(), Some(TrialOutcome::Success));
        assert!(matches!(sim.step_period(), Err(SimError::Contract(_))));
    }
}
