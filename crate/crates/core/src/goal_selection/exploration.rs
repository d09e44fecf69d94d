use nalgebra::Vector3;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_in_ball, GoalSelectionError};
use crate::camera::CameraModel;
use crate::voxel_map::{VoxelMap, VoxelState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorationParams {
    /// Probability of returning the global goal instead of sampling.
    pub goal_probability: f64,
    pub samples: usize,
    /// Candidate sampling radius around the trajectory start.
    pub radius: f64,
    /// Fraction of frustum voxels checked by the gain estimate.
    pub subsample: f64,
    pub w_e: f64,
    pub w_gr: f64,
    /// When set, a candidate is kept only if the straight segment from
    /// `x_s` keeps at least this ESDF clearance.
    pub line_of_sight: Option<f64>,
}

impl Default for ExplorationParams {
    fn default() -> Self {
        Self {
            goal_probability: 0.3,
            samples: 50,
            radius: 3.0,
            subsample: 0.05,
            w_e: 1.0,
            w_gr: 2.0,
            line_of_sight: Some(0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub yaw: f64,
    /// Estimated unknown voxel count in the frustum.
    pub gain_raw: usize,
    pub gain_normalized: f64,
    /// `d_g = |g - x_s| + r`.
    pub goal_scale: f64,
    pub goal_term: f64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub point: Vector3<f64>,
    #[serde(flatten)]
    pub reward: RewardBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationSelection {
    pub point: Vector3<f64>,
    /// The global goal was drawn directly.
    pub drew_goal: bool,
    pub candidates: Vec<CandidateRecord>,
    pub chosen: Option<usize>,
}

/// Reward of candidate `x_n` for a trajectory starting at `x_s` with global
/// goal `g`: a weighted sum of the unknown share of the frustum facing away
/// from `x_s` and the normalized progress towards `g`.
pub fn exploration_reward(
    x_n: &Vector3<f64>,
    x_s: &Vector3<f64>,
    g: &Vector3<f64>,
    map: &VoxelMap,
    camera: &CameraModel,
    params: &ExplorationParams,
) -> RewardBreakdown {
    let d = x_n - x_s;
    let yaw = if d.x.hypot(d.y) > 1e-9 {
        d.y.atan2(d.x)
    } else {
        0.0
    };
    let count = map.count_unknown_in_frustum(x_n, yaw, camera, params.subsample);
    let gain_normalized = count.normalized();
    let goal_scale = (g - x_s).norm() + params.radius;
    let goal_term = (goal_scale - (g - x_n).norm()) / goal_scale;
    RewardBreakdown {
        yaw,
        gain_raw: count.unknown,
        gain_normalized,
        goal_scale,
        goal_term,
        reward: params.w_e * gain_normalized + params.w_gr * goal_term,
    }
}

/// Intermediate goal by exploration reward. With probability
/// `goal_probability` the global goal is returned; otherwise up to
/// `samples` TSDF-unoccupied candidates are drawn around `x_s` and the
/// highest reward wins, ties going to the earliest draw.
pub fn select_intermediate_goal(
    x_s: &Vector3<f64>,
    g: &Vector3<f64>,
    map: &VoxelMap,
    camera: &CameraModel,
    params: &ExplorationParams,
    rng: &mut impl Rng,
) -> Result<ExplorationSelection, GoalSelectionError> {
    if rng.random::<f64>() < params.goal_probability {
        return Ok(ExplorationSelection {
            point: *g,
            drew_goal: true,
            candidates: Vec::new(),
            chosen: None,
        });
    }
    let max_attempts = 10 * params.samples;
    let mut points = Vec::with_capacity(params.samples);
    for _ in 0..max_attempts {
        if points.len() == params.samples {
            break;
        }
        let p = sample_in_ball(rng, x_s, params.radius);
        let visible = params
            .line_of_sight
            .is_none_or(|c| segment_clear(map, x_s, &p, c));
        if map.voxel_state(&p) == VoxelState::Free && visible {
            points.push(p);
        }
    }
    if points.is_empty() {
        return Err(GoalSelectionError::SamplingExhausted(max_attempts));
    }
    let candidates: Vec<CandidateRecord> = points
        .par_iter()
        .map(|p| CandidateRecord {
            point: *p,
            reward: exploration_reward(p, x_s, g, map, camera, params),
        })
        .collect();
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        if c.reward.reward > candidates[best].reward.reward {
            best = i;
        }
    }
    Ok(ExplorationSelection {
        point: candidates[best].point,
        drew_goal: false,
        candidates,
        chosen: Some(best),
    })
}

fn segment_clear(map: &VoxelMap, a: &Vector3<f64>, b: &Vector3<f64>, clearance: f64) -> bool {
    let steps = ((b - a).norm() / map.voxel_size()).ceil().max(1.0) as usize;
    (1..=steps).all(|i| map.distance(&a.lerp(b, i as f64 / steps as f64)) >= clearance)
}
