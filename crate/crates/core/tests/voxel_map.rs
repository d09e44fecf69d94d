use canopy::camera::{CameraModel, DepthImage};
use canopy::sim::{generate_forest, simulate_sensor, ForestSpec};
use canopy::voxel_map::{MapConfig, QueryLayer, UnknownSpacePolicy, VoxelMap};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Depth image of a plane perpendicular to the optical axis at `x` meters.
fn flat_wall(camera: &CameraModel, x: f64) -> DepthImage {
    let mut img = DepthImage::filled(camera.width, camera.height, 0.0);
    for v in 0..camera.height {
        for u in 0..camera.width {
            img.set(u, v, (x / camera.pixel_ray(u, v).x) as f32);
        }
    }
    img
}

#[test]
fn flat_wall_clears_the_space_in_front() {
    let camera = CameraModel::default();
    let mut map = VoxelMap::new(MapConfig::default()).unwrap();
    let origin = Vector3::new(0.05, 0.07, 0.03);
    let pose = camera.pose(&origin, 0.0);
    map.integrate_depth_image(&pose, &flat_wall(&camera, 3.0), &camera)
        .unwrap();
    let trunc = map.config().truncation as f32;
    let vs = map.voxel_size();

    // Per-ray march oracle: every voxel a pixel ray crosses before
    // 3.0 - truncation - one voxel, with its center inside the frustum, is
    // free at the truncation value.
    let mut marched = std::collections::HashSet::new();
    for v in (0..camera.height).step_by(3) {
        for u in (0..camera.width).step_by(3) {
            let dir = camera.pixel_ray(u, v);
            let stop = (3.0 - 0.4 - vs) / dir.x;
            let mut s = 0.3;
            while s < stop {
                let voxel = map.voxel_of(&(origin + dir * s));
                if camera.contains(&(map.voxel_center(voxel) - origin)) {
                    marched.insert(voxel);
                }
                s += vs / 10.0;
            }
        }
    }
    assert!(marched.len() > 1000);
    for v in &marched {
        let t = map.tsdf_voxel(*v).expect("allocated");
        assert!(t.observed(), "{v:?}");
        assert_eq!(t.distance, trunc, "{v:?}");
    }

    // Voxels at the wall carry a small distance.
    for (u, v) in [(80, 60), (10, 10), (150, 100)] {
        let hit = origin + camera.pixel_ray(u, v) * (3.0 / camera.pixel_ray(u, v).x);
        let t = map.tsdf_voxel(map.voxel_of(&hit)).unwrap();
        assert!(t.observed() && t.distance.abs() <= trunc);
    }
}

#[test]
fn flat_wall_twice_doubles_weights() {
    let camera = CameraModel::default();
    let mut once = VoxelMap::new(MapConfig::default()).unwrap();
    let pose = camera.pose(&Vector3::new(0.05, 0.07, 0.03), 0.4);
    let img = flat_wall(&camera, 2.5);
    once.integrate_depth_image(&pose, &img, &camera).unwrap();
    let mut twice = once.clone();
    twice.integrate_depth_image(&pose, &img, &camera).unwrap();
    let mut n = 0;
    once.for_each_observed(|v| {
        let a = once.tsdf_voxel(v).unwrap();
        let b = twice.tsdf_voxel(v).unwrap();
        assert!((a.distance - b.distance).abs() < 1e-6);
        assert_eq!(b.weight, 2.0 * a.weight);
        n += 1;
    });
    assert_eq!(n, twice.observed_count());
}

/// Exact unknown and total counts by enumerating a box around the pose.
fn exhaustive(map: &VoxelMap, p: &Vector3<f64>, yaw: f64, camera: &CameraModel) -> (usize, usize) {
    let pose = camera.pose(p, yaw).inverse();
    let r = camera.max_range;
    let lo = map.voxel_of(&(p - Vector3::repeat(r)));
    let hi = map.voxel_of(&(p + Vector3::repeat(r)));
    let (mut unknown, mut total) = (0, 0);
    for x in lo[0]..=hi[0] {
        for y in lo[1]..=hi[1] {
            for z in lo[2]..=hi[2] {
                let c = map.voxel_center([x, y, z]);
                if camera.contains(&(pose * nalgebra::Point3::from(c)).coords) {
                    total += 1;
                    unknown +=
                        usize::from(!map.tsdf_voxel([x, y, z]).is_some_and(|t| t.observed()));
                }
            }
        }
    }
    (unknown, total)
}

#[test]
fn forest_frustum_counts_match_enumeration() {
    let world = generate_forest(&ForestSpec::small(), 0.3, 4).unwrap();
    let camera = CameraModel::default();
    let mut map = VoxelMap::new(MapConfig::default()).unwrap();
    for x in [1.03, 2.01, 3.07] {
        let p = Vector3::new(x, 5.02, 1.01);
        let depth = simulate_sensor(&world, &p, 0.1, &camera).unwrap();
        map.integrate_depth_image(&camera.pose(&p, 0.1), &depth, &camera)
            .unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let p = Vector3::new(
            rng.random_range(1.0..4.0),
            rng.random_range(3.0..7.0),
            rng.random_range(0.5..2.0),
        );
        let yaw = rng.random_range(-1.0..1.0);
        let c = map.count_unknown_in_frustum(&p, yaw, &camera, 1.0);
        let (unknown, total) = exhaustive(&map, &p, yaw, &camera);
        assert_eq!((c.unknown, c.in_frustum), (unknown, total));
        assert!(c.unknown > 0 && c.unknown < c.in_frustum);
        for f in [0.5, 0.05, 0.01] {
            assert_eq!(
                map.count_unknown_in_frustum(&p, yaw, &camera, f),
                map.count_unknown_in_frustum(&p, yaw, &camera, f)
            );
        }
    }
}

#[test]
fn policy_makes_unknown_conservative() {
    let camera = CameraModel::default();
    let world = generate_forest(&ForestSpec::small(), 0.2, 1).unwrap();
    let mut map = VoxelMap::new(MapConfig::default()).unwrap();
    let start = world.start();
    let depth = simulate_sensor(&world, &start, 0.0, &camera).unwrap();
    map.integrate_depth_image(&camera.pose(&start, 0.0), &depth, &camera)
        .unwrap();
    map.update_esdf();
    let policy = UnknownSpacePolicy::new(1.0, 5.0, start).unwrap();
    map.apply_unknown_policy(&policy, &start);
    let robot_radius = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 200 {
        let dir = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let p = start + dir.normalize() * rng.random_range(1.3..4.8);
        let v = map.voxel_of(&p);
        if map.tsdf_voxel(v).is_some_and(|t| t.observed()) {
            continue;
        }
        assert!(
            map.query(&p, QueryLayer::Esdf).distance < robot_radius,
            "{p:?}"
        );
        checked += 1;
    }
    // Inside the clearing sphere the start is free.
    assert!(map.distance(&start) > 0.0);
}
