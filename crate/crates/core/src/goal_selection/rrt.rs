use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GoalSelectionError;
use crate::voxel_map::{VoxelMap, VoxelState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RrtParams {
    pub max_samples: usize,
    /// Optional wall-clock cap. Off by default so results depend only on
    /// the seed.
    pub time_budget: Option<Duration>,
    /// Rewiring radius constant.
    pub gamma: f64,
    /// Maximum edge length when steering towards a sample.
    pub extend: f64,
    pub goal_bias: f64,
    /// Padding added around the observed bounding box.
    pub bbox_margin: f64,
}

impl Default for RrtParams {
    fn default() -> Self {
        Self {
            max_samples: 2000,
            time_budget: None,
            gamma: 3.0,
            extend: 1.0,
            goal_bias: 0.05,
            bbox_margin: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RrtPath {
    /// Start first. The caller tracks `waypoints[1]`.
    pub waypoints: Vec<Vector3<f64>>,
    pub reached_goal: bool,
    pub cost: f64,
    pub nodes: usize,
}

impl RrtPath {
    pub fn first_waypoint(&self) -> Vector3<f64> {
        self.waypoints[1]
    }

    pub fn length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .sum()
    }
}

struct Node {
    p: Vector3<f64>,
    parent: usize,
    cost: f64,
}

pub(crate) fn point_valid(map: &VoxelMap, p: &Vector3<f64>, unknown_is_free: bool) -> bool {
    match map.voxel_state(p) {
        VoxelState::Free => true,
        VoxelState::Unknown => unknown_is_free,
        VoxelState::Occupied => false,
    }
}

/// Checks points every voxel length along `a -> b`, excluding `a` itself.
pub(crate) fn edge_valid(
    map: &VoxelMap,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    unknown_is_free: bool,
) -> bool {
    let d = b - a;
    let n = (d.norm() / map.voxel_size()).ceil().max(1.0) as usize;
    (1..=n).all(|i| point_valid(map, &(a + d * (i as f64 / n as f64)), unknown_is_free))
}

/// Axis-aligned bounds of the observed TSDF voxels, or `None` if nothing
/// is observed.
pub(crate) fn observed_bounds(map: &VoxelMap) -> Option<(Vector3<f64>, Vector3<f64>)> {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    map.for_each_observed(|v| {
        let c = map.voxel_center(v);
        lo = lo.inf(&c);
        hi = hi.sup(&c);
    });
    lo.x.is_finite().then_some((lo, hi))
}

/// RRT* from `start` towards `goal`.
///
/// Samples come from the observed bounding box (grown to contain start and
/// goal) padded by `bbox_margin`. Edges are valid if every stepped point
/// is TSDF-free, or unknown when `unknown_is_free`. After each insertion a
/// direct connection to the goal is attempted. Returns the path to the goal
/// when connected, otherwise the branch to the node nearest the goal.
pub fn rrt_star_plan(
    map: &VoxelMap,
    start: &Vector3<f64>,
    goal: &Vector3<f64>,
    unknown_is_free: bool,
    params: &RrtParams,
    rng: &mut impl Rng,
) -> Result<RrtPath, GoalSelectionError> {
    if !point_valid(map, start, unknown_is_free) {
        return Err(GoalSelectionError::StartNotFree);
    }
    let began = Instant::now();
    let (mut lo, mut hi) = observed_bounds(map).unwrap_or((*start, *start));
    for p in [start, goal] {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    lo.add_scalar_mut(-params.bbox_margin);
    hi.add_scalar_mut(params.bbox_margin);

    let mut nodes = vec![Node {
        p: *start,
        parent: 0,
        cost: 0.0,
    }];
    // (node, total cost through it) for the best known goal connection.
    let mut best_goal: Option<(usize, f64)> = None;
    let try_goal = |nodes: &[Node], i: usize, best: &mut Option<(usize, f64)>| {
        let c = nodes[i].cost + (goal - nodes[i].p).norm();
        if best.is_none_or(|(_, b)| c < b) && edge_valid(map, &nodes[i].p, goal, unknown_is_free) {
            *best = Some((i, c));
        }
    };
    try_goal(&nodes, 0, &mut best_goal);

    for _ in 0..params.max_samples {
        if params.time_budget.is_some_and(|b| began.elapsed() >= b) {
            break;
        }
        let sample = if rng.random::<f64>() < params.goal_bias {
            *goal
        } else {
            Vector3::from_fn(|k, _| rng.random_range(lo[k]..=hi[k]))
        };
        let nearest = nearest_node(&nodes, &sample);
        let from = nodes[nearest].p;
        let d = sample - from;
        let dist = d.norm();
        if dist < 1e-9 {
            continue;
        }
        let new = if dist > params.extend {
            from + d * (params.extend / dist)
        } else {
            sample
        };
        if !edge_valid(map, &from, &new, unknown_is_free) {
            continue;
        }

        let n = nodes.len() as f64 + 1.0;
        let radius = (params.gamma * (n.ln() / n).cbrt()).min(params.extend);
        let near: Vec<usize> = (0..nodes.len())
            .filter(|&i| (nodes[i].p - new).norm() <= radius)
            .collect();

        let mut parent = nearest;
        let mut cost = nodes[nearest].cost + (new - from).norm();
        for &i in &near {
            let c = nodes[i].cost + (new - nodes[i].p).norm();
            if c < cost && i != nearest && edge_valid(map, &nodes[i].p, &new, unknown_is_free) {
                parent = i;
                cost = c;
            }
        }
        let id = nodes.len();
        nodes.push(Node {
            p: new,
            parent,
            cost,
        });

        for &i in &near {
            let c = cost + (nodes[i].p - new).norm();
            if c < nodes[i].cost && edge_valid(map, &new, &nodes[i].p, unknown_is_free) {
                let delta = nodes[i].cost - c;
                nodes[i].parent = id;
                nodes[i].cost = c;
                propagate_decrease(&mut nodes, i, delta);
            }
        }
        try_goal(&nodes, id, &mut best_goal);
    }

    if let Some((i, _)) = best_goal {
        let mut waypoints = branch(&nodes, i);
        waypoints.push(*goal);
        let cost = waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        return Ok(RrtPath {
            waypoints,
            reached_goal: true,
            cost,
            nodes: nodes.len(),
        });
    }
    if nodes.len() == 1 {
        return Err(GoalSelectionError::NoValidNodes);
    }
    let closest = (1..nodes.len())
        .min_by(|&a, &b| {
            let da = (nodes[a].p - goal).norm_squared();
            let db = (nodes[b].p - goal).norm_squared();
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .expect("tree has non-root nodes");
    Ok(RrtPath {
        waypoints: branch(&nodes, closest),
        reached_goal: false,
        cost: nodes[closest].cost,
        nodes: nodes.len(),
    })
}

fn nearest_node(nodes: &[Node], p: &Vector3<f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, n) in nodes.iter().enumerate() {
        let d = (n.p - p).norm_squared();
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Lowers the cost of every descendant of `root` by `delta`.
fn propagate_decrease(nodes: &mut [Node], root: usize, delta: f64) {
    let mut stack = vec![root];
    while let Some(p) = stack.pop() {
        for (i, node) in nodes.iter_mut().enumerate().skip(1) {
            if node.parent == p && i != root {
                node.cost -= delta;
                stack.push(i);
            }
        }
    }
}

fn branch(nodes: &[Node], mut i: usize) -> Vec<Vector3<f64>> {
    let mut out = vec![nodes[i].p];
    while i != 0 {
        i = nodes[i].parent;
        out.push(nodes[i].p);
    }
    out.reverse();
    out
}
