use nalgebra::Vector3;
use rand::Rng;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use super::rrt::{edge_valid, observed_bounds};
use super::GoalSelectionError;
use crate::camera::CameraModel;
use crate::voxel_map::{traverse_voxels, VoxelMap, VoxelState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NbvpParams {
    pub nodes: usize,
    pub edge_length: f64,
    /// Distance discount of the branch gain.
    pub lambda: f64,
    /// One gain ray per `ray_block × ray_block` pixels.
    pub ray_block: usize,
    /// Sampling attempts per requested node before giving up.
    pub attempts_per_node: usize,
}

impl Default for NbvpParams {
    fn default() -> Self {
        Self {
            nodes: 30,
            edge_length: 1.0,
            lambda: 0.5,
            ray_block: 4,
            attempts_per_node: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbvpSelection {
    pub position: Vector3<f64>,
    pub yaw: f64,
    /// Index of the tree node whose branch won.
    pub best_node: usize,
    pub best_value: f64,
    /// Per-node visible unknown voxel count; the root has none.
    pub gains: Vec<usize>,
}

/// Number of distinct unknown voxels seen from `position` looking along
/// `yaw`, casting one ray per pixel block. Rays stop at the first occupied
/// voxel or at the sensor range.
pub fn visible_unknown(
    map: &VoxelMap,
    position: &Vector3<f64>,
    yaw: f64,
    camera: &CameraModel,
    block: usize,
) -> usize {
    let pose = camera.pose(position, yaw);
    let block = block.max(1);
    let mut seen = FxHashSet::default();
    let mut v = block / 2;
    while v < camera.height {
        let mut u = block / 2;
        while u < camera.width {
            let dir = pose.rotation * camera.pixel_ray(u, v);
            traverse_voxels(
                position,
                &dir,
                camera.max_range,
                map.voxel_size(),
                |idx| match map.voxel_state_at(idx) {
                    VoxelState::Occupied => false,
                    VoxelState::Unknown => {
                        seen.insert(idx);
                        true
                    }
                    VoxelState::Free => true,
                },
            );
            u += block;
        }
        v += block;
    }
    seen.len()
}

/// Next-best-view step: grows a tree through observed-free space, scores
/// each branch by its discounted visible-unknown gain and returns the first
/// node of the best branch together with its sampled yaw.
pub fn nbvp_select(
    map: &VoxelMap,
    position: &Vector3<f64>,
    yaw: f64,
    camera: &CameraModel,
    params: &NbvpParams,
    rng: &mut impl Rng,
) -> Result<NbvpSelection, GoalSelectionError> {
    if map.voxel_state(position) == VoxelState::Occupied {
        return Err(GoalSelectionError::StartNotFree);
    }
    let (mut lo, mut hi) = observed_bounds(map).unwrap_or((*position, *position));
    lo = lo.inf(position);
    hi = hi.sup(position);

    struct Node {
        p: Vector3<f64>,
        yaw: f64,
        parent: usize,
        cost: f64,
    }
    let mut nodes = vec![Node {
        p: *position,
        yaw,
        parent: 0,
        cost: 0.0,
    }];
    let mut attempts = 0;
    while nodes.len() <= params.nodes && attempts < params.nodes * params.attempts_per_node {
        attempts += 1;
        let sample = Vector3::from_fn(|k, _| rng.random_range(lo[k]..=hi[k]));
        let sample_yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let (parent, _) = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (i, (n.p - sample).norm_squared()))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let from = nodes[parent].p;
        let d = sample - from;
        let len = d.norm();
        if len < 1e-9 {
            continue;
        }
        let to = if len > params.edge_length {
            from + d * (params.edge_length / len)
        } else {
            sample
        };
        if !edge_valid(map, &from, &to, false) {
            continue;
        }
        let cost = nodes[parent].cost + (to - from).norm();
        nodes.push(Node {
            p: to,
            yaw: sample_yaw,
            parent,
            cost,
        });
    }
    if nodes.len() == 1 {
        return Err(GoalSelectionError::NoValidNodes);
    }

    let mut gains = vec![0usize; nodes.len()];
    let mut value = vec![0.0f64; nodes.len()];
    for i in 1..nodes.len() {
        gains[i] = visible_unknown(map, &nodes[i].p, nodes[i].yaw, camera, params.ray_block);
        // Parents always precede children.
        value[i] =
            value[nodes[i].parent] + gains[i] as f64 * (-params.lambda * nodes[i].cost).exp();
    }
    let mut best = 1;
    for i in 2..nodes.len() {
        if value[i] > value[best] {
            best = i;
        }
    }
    let mut first = best;
    while nodes[first].parent != 0 {
        first = nodes[first].parent;
    }
    Ok(NbvpSelection {
        position: nodes[first].p,
        yaw: nodes[first].yaw,
        best_node: best,
        best_value: value[best],
        gains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voxel_map::MapConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fill(map: &mut VoxelMap, lo: [i64; 3], hi: [i64; 3], d: f32) {
        for x in lo[0]..hi[0] {
            for y in lo[1]..hi[1] {
                for z in lo[2]..hi[2] {
                    map.set_observed([x, y, z], d);
                }
            }
        }
    }

    #[test]
    fn all_observed_picks_lowest_index() {
        // Free room closed by an observed wall shell.
        let mut map = VoxelMap::new(MapConfig::default()).unwrap();
        fill(&mut map, [-41, -41, -21], [41, 41, 21], -0.2);
        fill(&mut map, [-40, -40, -20], [40, 40, 20], 0.4);
        let cam = CameraModel::default();
        let p = Vector3::new(0.1, 0.1, 0.1);
        let s = nbvp_select(
            &map,
            &p,
            0.0,
            &cam,
            &NbvpParams::default(),
            &mut ChaCha8Rng::seed_from_u64(4),
        )
        .unwrap();
        assert!(s.gains.iter().all(|&g| g == 0));
        assert_eq!(s.best_node, 1);
    }

    #[test]
    fn prefers_branch_facing_unknown() {
        // Observed free slab around the start; the +x half-space beyond
        // x = 2 m is unknown, everything else observed.
        let mut map = VoxelMap::new(MapConfig::default()).unwrap();
        fill(&mut map, [-40, -40, -20], [10, 40, 20], 0.4);
        let cam = CameraModel::default();
        let p = Vector3::new(0.1, 0.1, 0.1);
        let s = nbvp_select(
            &map,
            &p,
            0.0,
            &cam,
            &NbvpParams::default(),
            &mut ChaCha8Rng::seed_from_u64(7),
        )
        .unwrap();
        assert!(s.best_value > 0.0);
        assert!(s.gains[s.best_node] > 0);
        let facing_unknown = visible_unknown(&map, &Vector3::new(1.5, 0.1, 0.1), 0.0, &cam, 4);
        let facing_observed = visible_unknown(
            &map,
            &Vector3::new(1.5, 0.1, 0.1),
            std::f64::consts::PI,
            &cam,
            4,
        );
        assert!(facing_unknown > 0);
        assert_eq!(facing_observed, 0);
    }

    #[test]
    fn occluded_pocket_has_no_gain() {
        let mut map = VoxelMap::new(MapConfig::default()).unwrap();
        fill(&mut map, [-10, -40, -30], [40, 40, 30], 0.4);
        // Wall at x in [2, 2.4) m spanning the whole view.
        fill(&mut map, [10, -40, -30], [12, 40, 30], -0.2);
        // Unknown pocket behind the wall.
        for x in 14..18 {
            for y in -2..2 {
                for z in -2..2 {
                    map.tsdf_voxel_mut([x, y, z]).weight = 0.0;
                }
            }
        }
        let cam = CameraModel::default();
        let p = Vector3::new(0.1, 0.1, 0.1);
        assert_eq!(visible_unknown(&map, &p, 0.0, &cam, 4), 0);
        assert_eq!(visible_unknown(&map, &p, 0.0, &cam, 1), 0);

        // Same pocket without the wall is visible.
        fill(&mut map, [10, -40, -30], [12, 40, 30], 0.4);
        assert!(visible_unknown(&map, &p, 0.0, &cam, 4) > 0);
    }

    #[test]
    fn enclosed_start_fails() {
        let mut map = VoxelMap::new(MapConfig::default()).unwrap();
        fill(&mut map, [-3, -3, -3], [4, 4, 4], -0.2);
        map.set_observed([0, 0, 0], 0.4);
        let r = nbvp_select(
            &map,
            &Vector3::new(0.1, 0.1, 0.1),
            0.0,
            &CameraModel::default(),
            &NbvpParams {
                nodes: 5,
                attempts_per_node: 10,
                ..Default::default()
            },
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert_eq!(r, Err(GoalSelectionError::NoValidNodes));
    }

    #[test]
    fn deterministic() {
        let mut map = VoxelMap::new(MapConfig::default()).unwrap();
        fill(&mut map, [-20, -20, -10], [10, 20, 10], 0.4);
        let cam = CameraModel::default();
        let p = Vector3::new(0.1, 0.1, 0.1);
        let a = nbvp_select(
            &map,
            &p,
            0.0,
            &cam,
            &NbvpParams::default(),
            &mut ChaCha8Rng::seed_from_u64(11),
        )
        .unwrap();
        let b = nbvp_select(
            &map,
            &p,
            0.0,
            &cam,
            &NbvpParams::default(),
            &mut ChaCha8Rng::seed_from_u64(11),
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
