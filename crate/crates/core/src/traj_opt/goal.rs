use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{PlanningContext, TrajOptError};
use crate::voxel_map::{QueryLayer, VoxelMap};

/// How a projected goal inside an obstacle is moved to free space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalAdjustment {
    StraightLine,
    Gradient,
}

/// The global goal if it lies within the planning horizon, else its
/// projection onto the horizon sphere around the start.
pub fn project_goal(context: &PlanningContext) -> Vector3<f64> {
    let start = context.start.position;
    let offset = context.goal - start;
    let dist = offset.norm();
    if dist <= context.params.horizon {
        context.goal
    } else {
        start + offset * (context.params.horizon / dist)
    }
}

/// Walks from `goal` toward `start` in voxel-size steps and returns the
/// first point with at least `radius` of conservative clearance.
pub fn adjust_goal_straight_line(
    goal: Vector3<f64>,
    start: Vector3<f64>,
    map: &VoxelMap,
    radius: f64,
) -> Result<Vector3<f64>, TrajOptError> {
    let step = map.voxel_size();
    let offset = start - goal;
    let length = offset.norm();
    if map.distance(&goal) >= radius {
        return Ok(goal);
    }
    if length <= step {
        return Err(TrajOptError::GoalAdjustment);
    }
    let dir = offset / length;
    let mut travelled = step;
    while travelled <= length - step {
        let p = goal + dir * travelled;
        if map.distance(&p) >= radius {
            return Ok(p);
        }
        travelled += step;
    }
    Err(TrajOptError::GoalAdjustment)
}

const GRADIENT_ITERATIONS: usize = 100;

/// Ascends the conservative distance field from `goal` in voxel-size steps
/// until the clearance reaches `radius`. When a step stalls (vanishing
/// gradient or no improvement) one straight-line step toward `start` is
/// taken instead.
pub fn adjust_goal_gradient(
    goal: Vector3<f64>,
    start: Vector3<f64>,
    map: &VoxelMap,
    radius: f64,
) -> Result<Vector3<f64>, TrajOptError> {
    let step = map.voxel_size();
    let mut p = goal;
    for _ in 0..GRADIENT_ITERATIONS {
        let q = map.query(&p, QueryLayer::Esdf);
        if q.distance >= radius {
            return Ok(p);
        }
        let g = q.gradient;
        let norm = g.norm();
        let ascended = (norm >= 1e-6)
            .then(|| p + g * (step / norm))
            .filter(|next| map.distance(next) > q.distance);
        p = match ascended {
            Some(next) => next,
            None => {
                let to_start = start - p;
                let d = to_start.norm();
                if d <= step {
                    return Err(TrajOptError::GoalAdjustment);
                }
                p + to_start * (step / d)
            }
        };
    }
    if map.distance(&p) >= radius {
        Ok(p)
    } else {
        Err(TrajOptError::GoalAdjustment)
    }
}
