use nalgebra::Vector3;

use super::{split_index, BlockIndex, VoxelMap};
use crate::camera::CameraModel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrustumCount {
    /// Unknown voxels among the visited ones, scaled by the stride.
    pub unknown: usize,
    /// Visited voxels scaled by the stride.
    pub total: usize,
    /// Exact number of voxel centers inside the frustum.
    pub in_frustum: usize,
    pub visited: usize,
}

impl FrustumCount {
    /// Unknown share of the visited voxels, in `[0, 1]`.
    pub fn normalized(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.unknown as f64 / self.total as f64
        }
    }
}

/// Multipliers `(a, b)` of the rank-1 lattice `x + a·y + b·z ≡ 0 (mod
/// stride)` that selects the visited voxels. They follow the additive
/// recurrence of the plastic number, which spreads the selected voxels
/// evenly in all three axes instead of aligning them in columns.
fn lattice_multipliers(stride: usize) -> [i64; 2] {
    const ALPHA: [f64; 2] = [0.754_877_666_246_692_7, 0.569_840_290_998_053_2];
    let s = stride as f64;
    [(s * ALPHA[0]).round() as i64, (s * ALPHA[1]).round() as i64]
}

/// Stride used for a subsample fraction.
pub fn subsample_stride(fraction: f64) -> usize {
    (1.0 / fraction).round().max(1.0) as usize
}

impl VoxelMap {
    /// Estimates the number of unknown TSDF voxels inside the camera frustum
    /// at `position` looking along `yaw` with zero pitch.
    ///
    /// With stride `s = round(1 / fraction)`, the voxel centers inside the
    /// frustum whose index lies on a fixed rank-1 lattice of density `1 / s`
    /// are checked, so roughly every `s`-th voxel is visited. There is
    /// no occlusion test.
    ///
    /// # Panics
    /// If `fraction` is not in `(0, 1]`.
    pub fn count_unknown_in_frustum(
        &self,
        position: &Vector3<f64>,
        yaw: f64,
        camera: &CameraModel,
        fraction: f64,
    ) -> FrustumCount {
        assert!(
            fraction > 0.0 && fraction <= 1.0,
            "subsample fraction must be in (0, 1]"
        );
        let stride = subsample_stride(fraction);
        let vs = self.config.voxel_size;
        let range = camera.max_range;
        let tan_h = (0.5 * camera.horizontal_fov).tan();
        let tan_v = (0.5 * camera.vertical_fov).tan();
        let (sy, cy) = yaw.sin_cos();

        let (lo, hi) = sector_bounds(position, yaw, camera);
        let to_idx = |x: f64| (x / vs - 0.5).ceil() as i64;
        let lo = [to_idx(lo.x), to_idx(lo.y), to_idx(lo.z)];
        let hi = [
            (hi.x / vs - 0.5).floor() as i64,
            (hi.y / vs - 0.5).floor() as i64,
            (hi.z / vs - 0.5).floor() as i64,
        ];

        let mut out = FrustumCount::default();
        let mut unknown_visited = 0usize;
        let mut counter = 0usize;
        let lattice = lattice_multipliers(stride);
        let mut cache: Option<(BlockIndex, Option<u32>)> = None;
        let r2 = range * range;
        for z in lo[2]..=hi[2] {
            let dz = (z as f64 + 0.5) * vs - position.z;
            for y in lo[1]..=hi[1] {
                let dy = (y as f64 + 0.5) * vs - position.y;
                for x in lo[0]..=hi[0] {
                    let dx = (x as f64 + 0.5) * vs - position.x;
                    let fwd = cy * dx + sy * dy;
                    if fwd <= 0.0 {
                        continue;
                    }
                    let side = -sy * dx + cy * dy;
                    if side.abs() > fwd * tan_h || dz.abs() > fwd * tan_v {
                        continue;
                    }
                    if dx * dx + dy * dy + dz * dz > r2 {
                        continue;
                    }
                    counter += 1;
                    let visit =
                        (x + lattice[0] * y + lattice[1] * z).rem_euclid(stride as i64) == 0;
                    if !visit {
                        continue;
                    }
                    out.visited += 1;
                    let (b, l) = split_index([x, y, z]);
                    let slot = match cache {
                        Some((cb, s)) if cb == b => s,
                        _ => {
                            let s = self.slot(b);
                            cache = Some((b, s));
                            s
                        }
                    };
                    let observed = slot.is_some_and(|s| self.blocks[s as usize].tsdf[l].observed());
                    if !observed {
                        unknown_visited += 1;
                    }
                }
            }
        }
        out.in_frustum = counter;
        out.unknown = unknown_visited * stride;
        out.total = out.visited * stride;
        out
    }
}

/// Axis-aligned bounds of a zero-pitch frustum: the horizontal sector of
/// radius `max_range` and the vertical extent `max_range * sin(vfov / 2)`.
fn sector_bounds(p: &Vector3<f64>, yaw: f64, camera: &CameraModel) -> (Vector3<f64>, Vector3<f64>) {
    use std::f64::consts::{FRAC_PI_2, PI};
    let r = camera.max_range;
    let half = 0.5 * camera.horizontal_fov;
    let mut xs = vec![0.0, r * (yaw - half).cos(), r * (yaw + half).cos()];
    let mut ys = vec![0.0, r * (yaw - half).sin(), r * (yaw + half).sin()];
    for k in -4..=4 {
        let a = k as f64 * FRAC_PI_2;
        let rel = (a - yaw + PI).rem_euclid(2.0 * PI) - PI;
        if rel.abs() <= half {
            xs.push(r * a.cos());
            ys.push(r * a.sin());
        }
    }
    let fold = |v: &[f64], f: fn(f64, f64) -> f64, init: f64| v.iter().copied().fold(init, f);
    let h = r * (0.5 * camera.vertical_fov).sin();
    (
        Vector3::new(
            p.x + fold(&xs, f64::min, f64::INFINITY),
            p.y + fold(&ys, f64::min, f64::INFINITY),
            p.z - h,
        ),
        Vector3::new(
            p.x + fold(&xs, f64::max, f64::NEG_INFINITY),
            p.y + fold(&ys, f64::max, f64::NEG_INFINITY),
            p.z + h,
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::sensor_pose;
    use crate::voxel_map::MapConfig;

    /// Brute force over a generous cube using the camera's own membership
    /// test. Poses are kept off the voxel lattice so no center lies exactly
    /// on a frustum face or the range sphere.
    fn exhaustive(map: &VoxelMap, p: &Vector3<f64>, yaw: f64, cam: &CameraModel) -> (usize, usize) {
        let pose = sensor_pose(p, yaw, 0.0);
        let inv = pose.inverse();
        let n = (cam.max_range / map.voxel_size()).ceil() as i64 + 2;
        let c = map.voxel_of(p);
        let (mut total, mut unknown) = (0, 0);
        for x in c[0] - n..=c[0] + n {
            for y in c[1] - n..=c[1] + n {
                for z in c[2] - n..=c[2] + n {
                    let w = map.voxel_center([x, y, z]);
                    if cam.contains(&(inv * nalgebra::Point3::from(w)).coords) {
                        total += 1;
                        if !map.tsdf_voxel([x, y, z]).is_some_and(|t| t.observed()) {
                            unknown += 1;
                        }
                    }
                }
            }
        }
        (total, unknown)
    }

    #[test]
    fn full_fraction_matches_exhaustive_enumeration() {
        let mut map = VoxelMap::new(MapConfig::default()).unwrap();
        for x in 0..20 {
            for y in -5..5 {
                map.set_observed([x, y, 5], 0.4);
            }
        }
        let cam = CameraModel::default();
        for (p, yaw) in [
            (Vector3::new(0.13, 0.41, 1.07), 0.0),
            (Vector3::new(-1.0, 2.0, 1.0), 2.3),
            (Vector3::new(0.537, 0.471, 0.513), -0.7),
            (
                Vector3::new(0.537, 0.471, 0.513),
                std::f64::consts::FRAC_PI_2,
            ),
        ] {
            let got = map.count_unknown_in_frustum(&p, yaw, &cam, 1.0);
            let (total, unknown) = exhaustive(&map, &p, yaw, &cam);
            assert_eq!(got.in_frustum, total);
            assert_eq!(got.total, total);
            assert_eq!(got.unknown, unknown);
        }
    }

    #[test]
    fn fully_observed_has_no_unknown() {
        let mut map = VoxelMap::new(MapConfig::default()).unwrap();
        for x in -1..30 {
            for y in -30..30 {
                for z in -15..20 {
                    map.set_observed([x, y, z], 0.4);
                }
            }
        }
        let cam = CameraModel::default();
        for f in [1.0, 0.5, 0.05, 0.01] {
            let c = map.count_unknown_in_frustum(&Vector3::new(0.1, 0.1, 1.0), 0.0, &cam, f);
            assert_eq!(c.unknown, 0);
        }
    }

    #[test]
    fn stride_rounding() {
        assert_eq!(subsample_stride(1.0), 1);
        assert_eq!(subsample_stride(0.05), 20);
        assert_eq!(subsample_stride(0.3), 3);
    }
}
