use nalgebra::Vector3;
use rand::Rng;

use super::{sample_in_ball, GoalSelectionError};
use crate::voxel_map::{VoxelMap, VoxelState};

const MAX_ATTEMPTS: usize = 1000;

/// Uniform point in the ball of `radius` around `start` whose TSDF voxel is
/// not occupied (unknown counts as unoccupied).
pub fn select_random_goal(
    start: &Vector3<f64>,
    radius: f64,
    map: &VoxelMap,
    rng: &mut impl Rng,
) -> Result<Vector3<f64>, GoalSelectionError> {
    assert!(radius > 0.0, "radius must be positive");
    for _ in 0..MAX_ATTEMPTS {
        let p = sample_in_ball(rng, start, radius);
        if map.voxel_state(&p) != VoxelState::Occupied {
            return Ok(p);
        }
    }
    Err(GoalSelectionError::SamplingExhausted(MAX_ATTEMPTS))
}
