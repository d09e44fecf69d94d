mod common;

use canopy::traj_opt::{
    adjust_goal_gradient, adjust_goal_straight_line, optimize, PlannerParams, PlanningContext,
    StartState,
};
use canopy::voxel_map::{MapConfig, VoxelMap};
use common::observed_box;
use nalgebra::Vector3;

fn context(start: Vector3<f64>, goal: Vector3<f64>) -> PlanningContext {
    PlanningContext {
        start: StartState::at_rest(start),
        goal,
        params: PlannerParams::default(),
    }
}

/// Minimum conservative clearance on a grid five times denser than the
/// optimizer's sample step.
fn dense_clearance(map: &VoxelMap, spline: &canopy::poly_spline::PolynomialSpline, dt: f64) -> f64 {
    let step = dt / 25.0;
    let n = (spline.duration() / step).ceil() as usize;
    (0..=n)
        .map(|i| map.distance(&spline.position((i as f64 * step).min(spline.duration()))))
        .fold(f64::INFINITY, f64::min)
}

/// Observed free space with a wall at x ∈ [1.2, 1.4] m, open for
/// y ∈ [0, 2] m.
fn gap_map() -> VoxelMap {
    let mut map = VoxelMap::new(MapConfig::default()).unwrap();
    observed_box(&mut map, [-10, -20, -8], [25, 20, 8]);
    for x in 6..=6 {
        for y in -20..=20 {
            if (0..10).contains(&y) {
                continue;
            }
            for z in -8..=8 {
                map.set_observed([x, y, z], -0.1);
            }
        }
    }
    map.update_esdf();
    map
}

#[test]
fn goal_behind_wall_is_reached_through_the_gap() {
    let map = gap_map();
    // The straight line runs through the bottom row of the wall.
    let start = Vector3::new(0.0, -0.1, 0.1);
    let goal = Vector3::new(2.8, -0.1, 0.1);
    let ctx = context(start, goal);
    assert!(map.distance(&Vector3::new(1.3, -0.1, 0.1)) < 0.0);
    let out = optimize(&ctx, &map, goal).unwrap();
    assert!(out.feasible, "{:?}", out.costs);
    let spline = &out.trajectory;
    assert!(dense_clearance(&map, spline, ctx.params.dt) >= ctx.params.robot_radius - 1e-9);
    // The crossing of the wall plane happens inside the opening.
    let n = 400;
    let crossing = (0..n)
        .map(|i| spline.position(spline.duration() * i as f64 / n as f64))
        .find(|p| p.x >= 1.3)
        .expect("passes the wall");
    assert!(crossing.y > 0.2 && crossing.y < 1.8, "{crossing:?}");
}

#[test]
fn feasible_verdicts_hold_under_dense_resampling() {
    let map = gap_map();
    let mut checked = 0;
    for i in 0..12 {
        let y = -1.5 + 0.35 * i as f64;
        let start = Vector3::new(-0.5, y, 0.1);
        let goal = Vector3::new(2.3, 2.0 - 0.3 * i as f64, 0.1);
        let ctx = context(start, goal);
        let Ok(out) = optimize(&ctx, &map, goal) else {
            continue;
        };
        if out.feasible {
            checked += 1;
            assert!(
                dense_clearance(&map, &out.trajectory, ctx.params.dt)
                    >= ctx.params.robot_radius - 1e-9
            );
        }
        for w in out.cost_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs(), "{:?}", out.cost_history);
        }
    }
    assert!(checked >= 3);
}

/// Rest-to-rest minimum-jerk motion over length `l` in time `t` peaks at
/// 15/8 · l / t.
#[test]
fn unobstructed_plans_respect_the_speed_limit() {
    let mut map = VoxelMap::new(MapConfig::default()).unwrap();
    observed_box(&mut map, [-20, -20, -10], [20, 20, 10]);
    map.update_esdf();
    for goal in [
        Vector3::new(3.0, 0.0, 0.0),
        Vector3::new(-2.0, 2.0, 0.5),
        Vector3::new(0.3, -1.0, 0.0),
    ] {
        let ctx = context(Vector3::zeros(), goal);
        let out = optimize(&ctx, &map, goal).unwrap();
        assert!(out.feasible);
        assert!(out.costs.collision == 0.0);
        let s = &out.trajectory;
        let miss = (s.position(s.duration()) - goal).norm();
        assert!(miss < 0.1, "{goal:?}: {miss}");
        let vmax = (0..=500)
            .map(|i| s.velocity(s.duration() * i as f64 / 500.0).norm())
            .fold(0.0, f64::max);
        assert!(
            vmax <= 15.0 / 8.0 * goal.norm() / s.duration() + 1e-6,
            "{goal:?}: {vmax}"
        );
        if goal.norm() <= 1.5 {
            assert!(vmax <= 1.1 * ctx.params.v_max, "{goal:?}: {vmax}");
        }
    }
}

#[test]
fn optimize_is_deterministic() {
    let map = gap_map();
    let goal = Vector3::new(2.8, -0.1, 0.1);
    let ctx = context(Vector3::new(0.0, -0.1, 0.1), goal);
    let a = optimize(&ctx, &map, goal).unwrap();
    let b = optimize(&ctx, &map, goal).unwrap();
    assert_eq!(a.cost_history, b.cost_history);
    assert_eq!(a.trajectory, b.trajectory);
}

#[test]
fn straight_line_adjustment_stops_before_a_slab() {
    // Slab of obstacle voxels for x ∈ [2.0, 3.0] m.
    let mut map = VoxelMap::new(MapConfig::default()).unwrap();
    observed_box(&mut map, [-5, -10, -5], [25, 10, 5]);
    for x in 10..15 {
        for y in -10..=10 {
            for z in -5..=5 {
                map.set_observed([x, y, z], -0.1);
            }
        }
    }
    map.update_esdf();
    let radius = 0.5;
    let start = Vector3::new(0.0, 0.05, 0.05);
    let goal = Vector3::new(2.6, 0.05, 0.05);
    let p = adjust_goal_straight_line(goal, start, &map, radius).unwrap();
    // March oracle: the nearest slab voxel center is at x = 2.1, so the
    // first admissible point has x ≤ 1.6 and lies on the segment.
    let dir = (start - goal).normalize();
    let mut expected = None;
    let mut s = 0.0;
    while s <= (start - goal).norm() {
        let q = goal + dir * s;
        if 2.1 - q.x >= radius {
            expected = Some(q);
            break;
        }
        s += map.voxel_size();
    }
    let expected = expected.unwrap();
    assert!(
        (p - expected).norm() <= map.voxel_size() + 1e-9,
        "{p:?} vs {expected:?}"
    );
    assert!(map.distance(&p) >= radius);
    assert!((p.y - 0.05).abs() < 1e-12 && (p.z - 0.05).abs() < 1e-12);
}

#[test]
fn gradient_adjustment_exits_a_cylinder_radially() {
    let mut map = VoxelMap::new(MapConfig::default()).unwrap();
    observed_box(&mut map, [-20, -20, -5], [20, 20, 5]);
    let axis = Vector3::new(0.1, 0.1, 0.0);
    let r = 0.6;
    for x in -20..=20 {
        for y in -20..=20 {
            let c = map.voxel_center([x, y, 0]);
            if ((c.x - axis.x).powi(2) + (c.y - axis.y).powi(2)).sqrt() <= r {
                for z in -5..=5 {
                    map.set_observed([x, y, z], -0.1);
                }
            }
        }
    }
    map.update_esdf();
    let radius = 0.5;
    let start = Vector3::new(-3.0, 0.1, 0.1);
    for angle in (0..16).map(|i| 0.1 + i as f64 * std::f64::consts::TAU / 16.0) {
        let dir = Vector3::new(angle.cos(), angle.sin(), 0.0);
        let goal = axis + dir * (r - 0.05) + Vector3::new(0.0, 0.0, 0.1);
        let p = adjust_goal_gradient(goal, start, &map, radius).unwrap();
        let nearest = axis + dir * (r + radius) + Vector3::new(0.0, 0.0, 0.1);
        assert!(map.distance(&p) >= radius);
        assert!(
            (p - nearest).norm() <= 2.0 * map.voxel_size(),
            "angle {angle}: {p:?} vs {nearest:?}"
        );
    }
}
