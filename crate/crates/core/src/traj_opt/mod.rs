//! Local trajectory optimization against the conservative distance field.
//!
//! The cost is `w_d J_d + w_c J_c + w_g J_g`: a derivative smoothness term,
//! a collision line integral over the map and a soft end-point goal term,
//! all minimized over the free junction derivatives of a polynomial spline.

mod goal;
mod optimizer;
mod potential;
mod problem;
mod yaw;

pub use goal::{adjust_goal_gradient, adjust_goal_straight_line, project_goal, GoalAdjustment};
pub use optimizer::{optimize, OptimizationOutcome, OptimizerParams};
pub use potential::CollisionPotential;
pub use problem::{CostBreakdown, TrajectoryProblem};
pub use yaw::velocity_tracking_yaw;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly_spline::SplineError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajOptError {
    #[error("start position has clearance {clearance:.3} m, below the robot radius")]
    StartInCollision { clearance: f64 },
    #[error("no free goal point found")]
    GoalAdjustment,
    #[error(transparent)]
    Spline(#[from] SplineError),
}

/// Position, velocity and acceleration at the start of a plan.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StartState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
}

impl StartState {
    pub fn at_rest(position: Vector3<f64>) -> Self {
        Self {
            position,
            ..Default::default()
        }
    }
}

/// Everything about the optimizer that does not change between cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    /// Planning horizon `r_p`.
    pub horizon: f64,
    /// Clearance the optimizer keeps from obstacles in the distance field.
    pub robot_radius: f64,
    pub w_d: f64,
    pub w_c: f64,
    pub w_g: f64,
    /// Sample step of the collision integral and the feasibility check.
    pub dt: f64,
    /// Collision potential margin `ε`.
    pub margin: f64,
    pub v_max: f64,
    pub a_max: f64,
    /// End position is an optimization variable pulled toward the goal.
    pub soft_goal: bool,
    pub order: usize,
    pub segments: usize,
    pub cost_derivative: usize,
    pub optimizer: OptimizerParams,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            horizon: 3.0,
            robot_radius: 0.5,
            w_d: 0.1,
            w_c: 10.0,
            w_g: 2.5,
            dt: 0.1,
            margin: 0.5,
            v_max: 1.0,
            a_max: 2.0,
            soft_goal: true,
            order: crate::poly_spline::DEFAULT_ORDER,
            segments: crate::poly_spline::DEFAULT_SEGMENTS,
            cost_derivative: crate::poly_spline::DEFAULT_COST_DERIVATIVE,
            optimizer: OptimizerParams::default(),
        }
    }
}

/// One planning query: start state `x_s`, global goal `g_g` and parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanningContext {
    pub start: StartState,
    pub goal: Vector3<f64>,
    pub params: PlannerParams,
}
