//! Simulation core for a pair of point robots carrying a rigid rod through a
//! partially known obstacle field.
//!
//! The leader robot plans with a short-horizon MPC over the obstacle points it
//! knows about; the follower runs a reactive policy around the leader input it
//! reconstructs from the rod motion. Neither robot communicates: each one
//! infers the other's wrench by inverting one explicit-Euler step of the rod
//! dynamics, and the leader additionally decodes the follower's reactive term
//! into an obstacle point estimate. All of it is deterministic: a scenario and
//! a seed fully fix every trajectory byte.
//!
//! Modules follow the pipeline order: [`dynamics`] (rigid-rod model and views),
//! [`environment`] (polygons, sensing, point clouds), [`follower`] (reactive
//! policy and leader-input inference), [`mpc`] (leader planner),
//! [`inference`] (follower-input inference and obstacle decoding), and
//! [`coordination`] (the per-period event loop, role switching, trial
//! classification).

pub mod coordination;
pub mod dynamics;
pub mod environment;
mod error;
pub mod follower;
pub mod geometry;
pub mod inference;
pub mod mpc;
mod scalar;

pub use error::SimError;
pub use scalar::Scalar;

/// `f64` aliases for the main value and config types; the harness and the
/// shipped binaries work in `f64` throughout.
pub type JointState64 = dynamics::JointState<f64>;
pub type Wrench64 = dynamics::Wrench<f64>;
pub type RodParams64 = dynamics::RodParams<f64>;
pub type InputBounds64 = dynamics::InputBounds<f64>;
pub type Obstacle64 = environment::Obstacle<f64>;
pub type Workspace64 = environment::Workspace<f64>;
pub type PointCloud64 = environment::PointCloud<f64>;
pub type SensorConfig64 = environment::SensorConfig<f64>;
pub type FollowerConfig64 = follower::FollowerConfig<f64>;
pub type CriticalObstacle64 = follower::CriticalObstacle<f64>;
pub type MpcConfig64 = mpc::MpcConfig<f64>;
pub type MpcSolution64 = mpc::MpcSolution<f64>;
pub type InferenceResult64 = inference::InferenceResult<f64>;
pub type Schedule64 = coordination::Schedule<f64>;
pub type SimConfig64 = coordination::SimConfig<f64>;
pub type Simulation64 = coordination::Simulation<f64>;
pub type SubStepRecord64 = coordination::SubStepRecord<f64>;
pub type TrialRecord64 = coordination::TrialRecord<f64>;

/// `f32` aliases for the value types, for callers that trade precision for
/// footprint. The shipped tolerances assume `f64`.
pub type JointState32 = dynamics::JointState<f32>;
pub type Wrench32 = dynamics::Wrench<f32>;
pub type RodParams32 = dynamics::RodParams<f32>;
