//! Scenario files: a versioned JSON schema describing one experiment setup.
//!
//! Every field is optional; missing fields (or whole missing sections) fall
//! back to the built-in defaults, which describe the bundled benchmark: a
//! 9 m x 9 m workspace with three rectangular obstacles between the start and
//! the target, two placement zones that randomize the left and center
//! obstacles per trial, and the standard rod, timing, gain, and planner
//! parameters. An empty document is therefore a complete, runnable scenario.
//! Unknown keys are rejected so typos fail loudly instead of silently running
//! the defaults.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use rodsim_core::coordination::StrategyKind;
use rodsim_core::dynamics::JointState;
use rodsim_core::environment::{Obstacle, PlacementZone, Rect};
use rodsim_core::{
    FollowerConfig64, InputBounds64, MpcConfig64, Obstacle64, RodParams64, Schedule64,
    SensorConfig64, SimConfig64, SimError, Workspace64,
};

/// Schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Rod and robot masses and the reference-point offsets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RodSpec {
    pub m_l: f64,
    pub m_f: f64,
    pub m_r: f64,
    pub l_l: f64,
    pub l_f: f64,
}

impl Default for RodSpec {
    fn default() -> Self {
        Self { m_l: 0.04, m_f: 0.04, m_r: 0.01, l_l: 0.8, l_f: 0.8 }
    }
}

impl RodSpec {
    fn to_core(self) -> RodParams64 {
        RodParams64 { m_l: self.m_l, m_f: self.m_f, m_r: self.m_r, l_l: self.l_l, l_f: self.l_f }
    }
}

/// Control-loop timing (seconds).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSpec {
    pub t_s: f64,
    pub delta: f64,
    pub duration: f64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self { t_s: 0.03, delta: 0.02, duration: 2.7 }
    }
}

impl ScheduleSpec {
    fn to_core(self) -> Schedule64 {
        Schedule64 { t_s: self.t_s, delta: self.delta, duration: self.duration }
    }
}

/// Follower policy gains and the shared input box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FollowerSpec {
    /// Assist share of the reconstructed leader input.
    pub k2: f64,
    /// Critical obstacle radius (m).
    pub d_cr: f64,
    /// Input box, shared by both robots and the planner.
    pub bounds: InputBounds64,
}

impl Default for FollowerSpec {
    fn default() -> Self {
        Self { k2: 0.5, d_cr: 1.1, bounds: InputBounds64 { f_a: 5.0, f_p: 5.0, tau: 0.5 } }
    }
}

impl FollowerSpec {
    fn to_core(self) -> FollowerConfig64 {
        FollowerConfig64 { k2: self.k2, d_cr: self.d_cr, bounds: self.bounds }
    }
}

/// Leader planner weights and solver knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSpec {
    pub horizon: usize,
    pub q_s: [f64; 6],
    pub q_i: [f64; 3],
    pub alpha_samples: Vec<f64>,
    pub d_safe: f64,
    pub w_obs: f64,
    pub max_iters: u32,
    pub grad_step: f64,
    pub tol: f64,
}

impl Default for PlannerSpec {
    fn default() -> Self {
        Self {
            horizon: 3,
            q_s: [120.0, 4.0, 120.0, 4.0, 0.0, 0.01],
            q_i: [0.05, 0.05, 0.01],
            alpha_samples: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            d_safe: 0.5,
            w_obs: 500.0,
            max_iters: 200,
            grad_step: 1e-6,
            tol: 1e-6,
        }
    }
}

/// Range sensor model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorSpec {
    /// Detection range (m).
    pub range: f64,
    /// Ray spacing (rad); the default is a full sweep of 100 rays.
    pub angular_resolution: f64,
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self { range: 1.2, angular_resolution: TAU / 100.0 }
    }
}

impl SensorSpec {
    fn to_core(self) -> SensorConfig64 {
        SensorConfig64 { range: self.range, angular_resolution: self.angular_resolution }
    }
}

/// Workspace rectangle and obstacle polygons as raw vertex lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkspaceSpec {
    pub bounds: Rect<f64>,
    /// Simple polygons, one vertex list each, in workspace coordinates.
    pub obstacles: Vec<Vec<[f64; 2]>>,
}

fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<[f64; 2]> {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

impl Default for WorkspaceSpec {
    fn default() -> Self {
        Self {
            bounds: Rect { min: [0.0, 0.0], max: [9.0, 9.0] },
            obstacles: vec![
                rectangle(3.3, 5.3, 4.3, 6.3),
                rectangle(5.0, 4.3, 6.0, 5.3),
                rectangle(6.2, 4.6, 7.2, 5.4),
            ],
        }
    }
}

impl WorkspaceSpec {
    fn to_core(&self) -> Result<Workspace64, SimError> {
        let obstacles = self
            .obstacles
            .iter()
            .map(|verts| Obstacle::new(verts.clone()))
            .collect::<Result<Vec<Obstacle64>, _>>()?;
        let ws = Workspace64 { bounds: self.bounds, obstacles };
        ws.validate()?;
        Ok(ws)
    }
}

/// One experiment setup; see the module docs for the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    /// Base seed; trial i of a batch uses `seed + i`.
    pub seed: u64,
    pub rod: RodSpec,
    pub schedule: ScheduleSpec,
    pub follower: FollowerSpec,
    pub planner: PlannerSpec,
    pub sensor: SensorSpec,
    pub workspace: WorkspaceSpec,
    /// Per-trial obstacle randomization; empty means a fixed workspace.
    pub zones: Vec<PlacementZone<f64>>,
    /// Initial state `[x, vx, y, vy, theta, omega]`, leader-referenced.
    pub s0: [f64; 6],
    /// Target state in the same layout, for the initial leader.
    pub s_tar: [f64; 6],
    /// Critical clearance at or below which roles swap (m).
    pub d_switch: f64,
    /// Arrival tolerance around the target position (m).
    pub success_radius: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            rod: RodSpec::default(),
            schedule: ScheduleSpec::default(),
            follower: FollowerSpec::default(),
            planner: PlannerSpec::default(),
            sensor: SensorSpec::default(),
            workspace: WorkspaceSpec::default(),
            zones: vec![
                PlacementZone {
                    obstacle: 0,
                    vertex: 0,
                    rect: Rect { min: [3.0, 5.0], max: [3.7, 5.7] },
                },
                PlacementZone {
                    obstacle: 1,
                    vertex: 0,
                    rect: Rect { min: [4.7, 4.0], max: [5.4, 4.7] },
                },
            ],
            s0: [7.5, 0.0, 7.2, 0.0, 0.1, 0.0],
            s_tar: [3.0, 0.0, 3.95, 0.0, 0.0, 0.0],
            d_switch: 0.8,
            success_radius: 0.5,
        }
    }
}

impl Scenario {
    /// Builds the workspace before any per-trial randomization.
    pub fn base_workspace(&self) -> Result<Workspace64, SimError> {
        self.workspace.to_core()
    }

    /// Assembles the full simulation config for one strategy. The planner
    /// inherits the control period, assist share, input box, target, and
    /// walls from the sections that own them, so those can never disagree.
    pub fn to_sim_config(&self, strategy: StrategyKind) -> Result<SimConfig64, SimError> {
        let follower = self.follower.to_core();
        let cfg = SimConfig64 {
            params: self.rod.to_core(),
            schedule: self.schedule.to_core(),
            follower,
            mpc: MpcConfig64 {
                horizon: self.planner.horizon,
                t_s: self.schedule.t_s,
                k2: self.follower.k2,
                q_s: self.planner.q_s,
                q_i: self.planner.q_i,
                s_tar: JointState::from_array(self.s_tar),
                bounds: self.follower.bounds,
                alpha_samples: self.planner.alpha_samples.clone(),
                d_safe: self.planner.d_safe,
                w_obs: self.planner.w_obs,
                walls: self.workspace.bounds,
                max_iters: self.planner.max_iters,
                grad_step: self.planner.grad_step,
                tol: self.planner.tol,
                swap_cost_frame: false,
            },
            sensor: self.sensor.to_core(),
            strategy,
            d_switch: self.d_switch,
            success_radius: self.success_radius,
            s0: JointState::from_array(self.s0),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Full validation: schema version, every sub-config, the workspace, and
    /// the placement zones.
    pub fn validate(&self) -> Result<(), SimError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(SimError::InvalidParameter {
                what: "scenario",
                why: format!(
                    "schema_version {} is not supported (this build reads {SCHEMA_VERSION})",
                    self.schema_version
                ),
            });
        }
        let ws = self.base_workspace()?;
        self.to_sim_config(StrategyKind::Learning)?;
        for (i, zone) in self.zones.iter().enumerate() {
            zone.rect.validate()?;
            let Some(obstacle) = ws.obstacles.get(zone.obstacle) else {
                return Err(SimError::InvalidParameter {
                    what: "scenario",
                    why: format!(
                        "zone {i} references obstacle {} but the workspace has {}",
                        zone.obstacle,
                        ws.obstacles.len()
                    ),
                });
            };
            if zone.vertex >= obstacle.vertices().len() {
                return Err(SimError::InvalidParameter {
                    what: "scenario",
                    why: format!(
                        "zone {i} anchors vertex {} but obstacle {} has {} vertices",
                        zone.vertex,
                        zone.obstacle,
                        obstacle.vertices().len()
                    ),
                });
            }
        }
        Ok(())
    }

    /// Parses a scenario from JSON text; an empty document means defaults.
    pub fn from_json(text: &str) -> anyhow::Result<Scenario> {
        let trimmed = text.trim();
        let scenario: Scenario = if trimmed.is_empty() {
            Scenario::default()
        } else {
            serde_json::from_str(trimmed).context("scenario does not match the schema")?
        };
        scenario.validate().context("scenario failed validation")?;
        Ok(scenario)
    }
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: &Path) -> anyhow::Result<Scenario> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))?;
    Scenario::from_json(&text).with_context(|| format!("in scenario file {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn empty_and_bare_documents_yield_the_defaults() {
        assert_eq!(Scenario::from_json("").unwrap(), Scenario::default());
        assert_eq!(Scenario::from_json("  \n").unwrap(), Scenario::default());
        assert_eq!(Scenario::from_json("{}").unwrap(), Scenario::default());
    }

    #[test]
    fn defaults_match_the_standard_parameter_set() {
        let s = Scenario::default();
        s.validate().unwrap();
        let cfg = s.to_sim_config(StrategyKind::Learning).unwrap();
        assert_eq!(cfg.params.total_mass(), 0.09);
        assert_abs_diff_eq!(cfg.params.inertia(), 4.0 / 75.0, epsilon = 1e-15);
        assert_eq!(cfg.schedule.n_periods(), 90);
        assert_eq!(cfg.mpc.horizon, 3);
        assert_eq!(cfg.mpc.t_s, 0.03);
        assert_eq!(cfg.mpc.k2, 0.5);
        assert_eq!(cfg.mpc.s_tar.to_array(), [3.0, 0.0, 3.95, 0.0, 0.0, 0.0]);
        assert_eq!(cfg.mpc.walls, s.workspace.bounds);
        assert_eq!(cfg.follower.d_cr, 1.1);
        assert_eq!(cfg.sensor.ray_count().unwrap(), 100);
        assert_eq!(cfg.d_switch, 0.8);
        assert_eq!(cfg.success_radius, 0.5);
        assert_eq!(cfg.s0.to_array(), [7.5, 0.0, 7.2, 0.0, 0.1, 0.0]);
    }

    #[test]
    fn partial_sections_override_only_their_fields() {
        let s = Scenario::from_json(r#"{"follower": {"d_cr": 1.4}}"#).unwrap();
        assert_eq!(s.follower.d_cr, 1.4);
        assert_eq!(s.follower.k2, 0.5);
        assert_eq!(s.follower.bounds.tau, 0.5);
        assert_eq!(s.schedule, ScheduleSpec::default());

        let s = Scenario::from_json(r#"{"schedule": {"duration": 0.6}}"#).unwrap();
        assert_eq!(s.schedule.duration, 0.6);
        assert_eq!(s.schedule.t_s, 0.03);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Scenario::from_json(r#"{"folower": {"d_cr": 1.4}}"#).is_err());
        assert!(Scenario::from_json(r#"{"follower": {"dcr": 1.4}}"#).is_err());
    }

    #[test]
    fn malformed_polygons_fail_validation() {
        let err = Scenario::from_json(r#"{"workspace": {"obstacles": [[[1.0, 1.0], [2.0, 1.0]]]}}"#)
            .unwrap_err();
        assert!(format!("{err:#}").contains("3 vertices"), "{err:#}");
    }

    #[test]
    fn zone_references_are_checked() {
        let bad_obstacle = r#"{"zones": [{"obstacle": 9, "rect": {"min": [1.0, 1.0], "max": [2.0, 2.0]}}]}"#;
        assert!(Scenario::from_json(bad_obstacle).is_err());
        let bad_vertex = r#"{"zones": [{"obstacle": 0, "vertex": 7, "rect": {"min": [1.0, 1.0], "max": [2.0, 2.0]}}]}"#;
        assert!(Scenario::from_json(bad_vertex).is_err());
    }

    #[test]
    fn future_schema_versions_are_refused() {
        assert!(Scenario::from_json(r#"{"schema_version": 2}"#).is_err());
    }

    #[test]
    fn scenarios_round_trip_through_json() {
        let s = Scenario::default();
        let text = serde_json::to_string_pretty(&s).unwrap();
        assert_eq!(Scenario::from_json(&text).unwrap(), s);
    }

    #[test]
    fn bundled_scenario_file_matches_the_built_in_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/default.json");
        let text = fs::read_to_string(&path)
            .expect("scenarios/default.json is bundled at the repository root");
        assert_eq!(
            Scenario::from_json(&text).unwrap(),
            Scenario::default(),
            "scenarios/default.json drifted from the built-in defaults; \
             regenerate it with the dump_default_scenario test"
        );
    }

    /// Regenerates the bundled scenario file from the built-in defaults.
    /// Run explicitly after changing them:
    /// `cargo test -p rodsim dump_default_scenario -- --ignored`
    #[test]
    #[ignore]
    fn dump_default_scenario() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/default.json");
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        let mut text = serde_json::to_string_pretty(&Scenario::default()).unwrap();
        text.push('\n');
        fs::write(&path, text).unwrap();
    }
}
