use nalgebra::Vector3;

use super::WorldModel;

/// Dense grid of exact surface distances at voxel centers covering the
/// world extent.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceGrid {
    pub voxel_size: f64,
    pub dims: [usize; 3],
    pub values: Vec<f32>,
}

impl DistanceGrid {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f32 {
        self.values[i + self.dims[0] * (j + self.dims[1] * k)]
    }

    pub fn center(&self, i: usize, j: usize, k: usize) -> Vector3<f64> {
        Vector3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * self.voxel_size
    }
}

/// Distances to the nearest cylinder, the ground and (if the world is
/// enclosed) walls and ceiling, capped at `cap`.
pub fn ground_truth_esdf(world: &WorldModel, voxel_size: f64, cap: f64) -> DistanceGrid {
    let e = world.spec.extent;
    let dims = [0, 1, 2].map(|k| (e[k] / voxel_size).ceil() as usize);
    let mut values = Vec::with_capacity(dims.iter().product());
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let p = Vector3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * voxel_size;
                values.push(world.distance(&p, cap) as f32);
            }
        }
    }
    DistanceGrid {
        voxel_size,
        dims,
        values,
    }
}
