//! Independent oracles shared by the integration tests and the acceptance
//! suite.
#![allow(dead_code)]

use canopy::traj_opt::{PlannerParams, PlanningContext, StartState, TrajectoryProblem};
use canopy::voxel_map::{MapConfig, VoxelMap};
use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Index = [i64; 3];

/// Marks every voxel of the inclusive box observed free.
pub fn observed_box(map: &mut VoxelMap, lo: Index, hi: Index) {
    for x in lo[0]..=hi[0] {
        for y in lo[1]..=hi[1] {
            for z in lo[2]..=hi[2] {
                map.set_observed([x, y, z], 0.4);
            }
        }
    }
}

/// Relative error of `analytic` against `reference`, normalized by the
/// larger norm of the two.
pub fn relative_error(analytic: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    let scale = analytic.norm().max(reference.norm());
    if scale < 1e-12 {
        return 0.0;
    }
    (analytic - reference).norm() / scale
}

/// Central differences of `f` with a cube-root-epsilon step per entry.
pub fn central_difference(x: &DMatrix<f64>, f: impl Fn(&DMatrix<f64>) -> f64) -> DMatrix<f64> {
    let base = f64::EPSILON.cbrt();
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    let mut y = x.clone();
    for i in 0..x.len() {
        let h = base * x[i].abs().max(1.0);
        y[i] = x[i] + h;
        let up = f(&y);
        y[i] = x[i] - h;
        let down = f(&y);
        y[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    g
}

/// Gradient errors of one random cluttered instance.
#[derive(Debug, Clone, Copy)]
pub struct GradientErrors {
    pub derivative: f64,
    pub collision: f64,
    pub goal: f64,
    pub collision_cost: f64,
}

/// A map with three obstacle clusters beside the straight line from the
/// origin to a random goal about 2.5 m ahead, and a perturbed
/// straight-line initialization.
pub fn gradient_instance(seed: u64) -> GradientErrors {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map = VoxelMap::new(MapConfig::default()).unwrap();
    let vs = map.voxel_size();
    observed_box(&mut map, [-10, -15, -10], [30, 15, 10]);
    let goal = Vector3::new(
        rng.random_range(2.0..3.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-0.5..0.5),
    );
    for _ in 0..3 {
        let along = goal * rng.random_range(0.3..0.9);
        let side = Vector3::new(0.0, rng.random_range(0.4..1.0), rng.random_range(-0.3..0.3))
            * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let c = map.voxel_of(&(along + side));
        for d in [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]] {
            map.set_observed([c[0] + d[0], c[1] + d[1], c[2] + d[2]], -0.1);
        }
    }
    map.update_esdf();
    let context = PlanningContext {
        start: StartState::at_rest(Vector3::zeros()),
        goal,
        params: PlannerParams::default(),
    };
    let problem = TrajectoryProblem::new(&context, &map, goal).unwrap();
    let mut free = problem.initial_free();
    for v in free.iter_mut() {
        *v += rng.random_range(-0.2..0.2) * v.abs().max(vs);
    }

    let (_, gd) = problem.derivative_cost_and_gradient(&free);
    let fd = central_difference(&free, |x| problem.derivative_cost_and_gradient(x).0);
    let derivative = relative_error(&gd, &fd);
    let (jc, gc) = problem.collision_cost_and_gradient(&free);
    let fd = central_difference(&free, |x| problem.collision_cost_and_gradient(x).0);
    let collision = relative_error(&gc, &fd);
    let (_, gg) = problem.goal_cost_and_gradient(&free);
    let fd = central_difference(&free, |x| problem.goal_cost_and_gradient(x).0);
    let goal = relative_error(&gg, &fd);
    GradientErrors {
        derivative,
        collision,
        goal,
        collision_cost: jc,
    }
}

/// Result of comparing the wavefront ESDF with brute force on one grid.
#[derive(Debug, Clone, Copy)]
pub struct EsdfComparison {
    pub voxels: usize,
    pub obstacles: usize,
    /// Largest |ESDF - exact| over observed free voxels.
    pub max_error: f64,
    /// Obstacle voxels that do not read as obstacles.
    pub misclassified: usize,
}

/// Random fully observed grid of at most 40×40×15 voxels with a random
/// obstacle share, checked against exact nearest-obstacle distances.
pub fn esdf_instance(seed: u64) -> EsdfComparison {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map = VoxelMap::new(MapConfig::default()).unwrap();
    let vs = map.voxel_size();
    let max = map.config().esdf_max_distance;
    let dims = [
        rng.random_range(5..=40i64),
        rng.random_range(5..=40i64),
        rng.random_range(3..=15i64),
    ];
    let origin = [
        rng.random_range(-20..20i64),
        rng.random_range(-20..20i64),
        rng.random_range(-8..8i64),
    ];
    let share = rng.random_range(0.002..0.05);
    let mut cells = Vec::new();
    let mut obstacles = Vec::new();
    for x in 0..dims[0] {
        for y in 0..dims[1] {
            for z in 0..dims[2] {
                let v = [origin[0] + x, origin[1] + y, origin[2] + z];
                if rng.random_bool(share) {
                    map.set_observed(v, -0.1);
                    obstacles.push(v);
                } else {
                    map.set_observed(v, 0.4);
                }
                cells.push(v);
            }
        }
    }
    map.update_esdf();

    let mut max_error = 0.0f64;
    let mut misclassified = 0;
    for v in &cells {
        let e = map.esdf_voxel(*v).unwrap();
        if obstacles.contains(v) {
            misclassified += usize::from(!e.is_obstacle());
            continue;
        }
        let exact = obstacles
            .iter()
            .map(|o| {
                let d = [
                    (v[0] - o[0]) as f64,
                    (v[1] - o[1]) as f64,
                    (v[2] - o[2]) as f64,
                ];
                vs * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
            })
            .fold(f64::INFINITY, f64::min)
            .min(max);
        max_error = max_error.max((e.distance as f64 - exact).abs());
    }
    EsdfComparison {
        voxels: cells.len(),
        obstacles: obstacles.len(),
        max_error,
        misclassified,
    }
}
