use nalgebra::Isometry3;

use super::{split_index, traverse_voxels, MapError, VoxelMap};
use crate::camera::{CameraModel, DepthImage};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegrationSummary {
    pub rays: usize,
    pub voxels_updated: usize,
    pub blocks_allocated: usize,
}

impl VoxelMap {
    /// Fuses one depth image into the TSDF layer.
    ///
    /// Every valid pixel ray is traversed from the sensor origin to the hit
    /// plus the truncation distance (or to the max range for rays without a
    /// return). Each voxel pierced this way receives one projective update
    /// per image: its center is projected back into the image and the signed
    /// distance is the range of that pixel minus the distance to the center.
    /// Updates are a running weighted average with unit weight per update.
    pub fn integrate_depth_image(
        &mut self,
        pose: &Isometry3<f64>,
        depth: &DepthImage,
        camera: &CameraModel,
    ) -> Result<IntegrationSummary, MapError> {
        if depth.width != camera.width || depth.height != camera.height {
            return Err(MapError::ImageSize {
                got_w: depth.width,
                got_h: depth.height,
                want_w: camera.width,
                want_h: camera.height,
            });
        }
        let finite = pose.translation.vector.iter().all(|x| x.is_finite())
            && pose.rotation.coords.iter().all(|x| x.is_finite());
        if !finite {
            return Err(MapError::NonFinitePose);
        }
        if let Some(&r) = depth.data.iter().find(|r| **r < 0.0) {
            return Err(MapError::NegativeRange(r));
        }

        self.frame = self.frame.wrapping_add(1).max(1);
        let frame = self.frame;
        let trunc = self.config.truncation;
        let max_w = self.config.max_weight;
        let vs = self.config.voxel_size;
        let origin = pose.translation.vector;
        let to_camera = pose.rotation.inverse();
        let blocks_before = self.blocks.len();
        let mut summary = IntegrationSummary::default();

        let mut cached_block = None;
        let mut cached_slot = 0u32;

        for v in 0..camera.height {
            for u in 0..camera.width {
                let range = depth.get(u, v);
                if range.is_nan() {
                    continue;
                }
                summary.rays += 1;
                let length = if range.is_finite() {
                    range as f64 + trunc
                } else {
                    camera.max_range
                };
                let dir = pose.rotation * camera.pixel_ray(u, v);
                traverse_voxels(&origin, &dir, length, vs, |voxel| {
                    let (b, l) = split_index(voxel);
                    let slot = if cached_block == Some(b) {
                        cached_slot
                    } else {
                        let s = self.allocate(b);
                        cached_block = Some(b);
                        cached_slot = s;
                        s
                    };
                    let center = self.voxel_center(voxel);
                    let tsdf = &mut self.blocks[slot as usize].tsdf[l];
                    if tsdf.frame == frame {
                        return true;
                    }
                    tsdf.frame = frame;
                    let p_cam = to_camera * (center - origin);
                    let Some((pu, pv)) = camera.project(&p_cam) else {
                        return true;
                    };
                    let pixel_range = depth.get(pu, pv);
                    if pixel_range.is_nan() {
                        return true;
                    }
                    let dist = p_cam.norm();
                    let sdf = if pixel_range.is_finite() {
                        let s = pixel_range as f64 - dist;
                        if s < -trunc {
                            return true;
                        }
                        s.min(trunc)
                    } else {
                        if dist > camera.max_range {
                            return true;
                        }
                        trunc
                    };
                    let w = tsdf.weight;
                    tsdf.distance =
                        ((tsdf.distance as f64 * w as f64 + sdf) / (w as f64 + 1.0)) as f32;
                    tsdf.weight = (w + 1.0).min(max_w);
                    summary.voxels_updated += 1;
                    true
                });
            }
        }
        summary.blocks_allocated = self.blocks.len() - blocks_before;
        Ok(summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::sensor_pose;
    use crate::voxel_map::MapConfig;
    use nalgebra::Vector3;

    fn single_ray_camera() -> CameraModel {
        CameraModel {
            horizontal_fov: 60f64.to_radians(),
            vertical_fov: 60f64.to_radians(),
            max_range: 5.0,
            width: 1,
            height: 1,
            mount_pitch: 0.0,
        }
    }

    #[test]
    fn single_ray_marks_free_space_and_surface() {
        let mut map = VoxelMap::new(MapConfig::default()).unwrap();
        let cam = single_ray_camera();
        let origin = Vector3::new(0.1, 0.1, 0.1);
        let pose = sensor_pose(&origin, 0.0, 0.0);
        let depth = DepthImage::filled(1, 1, 2.0);
        map.integrate_depth_image(&pose, &depth, &cam).unwrap();

        let mut free = 0;
        for i in 1..9 {
            let v = map.tsdf_voxel([i, 0, 0]).unwrap();
            assert!(v.observed(), "voxel {i} along the ray should be observed");
            assert!(v.distance > 0.0);
            free += 1;
        }
        assert_eq!(free, 8);
        let hit = map.voxel_of(&(origin + Vector3::new(2.0, 0.0, 0.0)));
        let v = map.tsdf_voxel(hit).unwrap();
        assert!(v.observed());
        assert!(v.distance.abs() <= 0.4);
        // Behind the surface within the truncation band: occupied.
        let behind = map.tsdf_voxel([11, 0, 0]).unwrap();
        assert!(behind.occupied());
    }

    #[test]
    fn repeated_image_doubles_weight_only() {
        let mut map = VoxelMap::new(MapConfig::default()).unwrap();
        let cam = CameraModel {
            width: 16,
            height: 12,
            ..Default::default()
        };
        let pose = sensor_pose(&Vector3::new(0.05, 0.3, 1.0), 0.2, 0.0);
        let mut depth = DepthImage::filled(16, 12, 2.5);
        for u in 0..16 {
            depth.set(u, 0, DepthImage::NO_RETURN);
            depth.set(u, 5, 1.3 + 0.1 * u as f32);
        }
        map.integrate_depth_image(&pose, &depth, &cam).unwrap();
        let first: Vec<_> = map.blocks.iter().flat_map(|b| b.tsdf.to_vec()).collect();
        map.integrate_depth_image(&pose, &depth, &cam).unwrap();
        let second: Vec<_> = map.blocks.iter().flat_map(|b| b.tsdf.to_vec()).collect();
        assert_eq!(first.len(), second.len());
        for (a, b) in first.iter().zip(&second) {
            assert!((a.distance - b.distance).abs() <= 1e-6 * a.distance.abs().max(1e-3));
            assert_eq!(b.weight, (2.0 * a.weight).min(10_000.0));
        }
    }

    #[test]
    fn weight_is_capped() {
        let cfg = MapConfig {
            max_weight: 3.0,
            ..Default::default()
        };
        let mut map = VoxelMap::new(cfg).unwrap();
        let cam = single_ray_camera();
        let pose = sensor_pose(&Vector3::new(0.1, 0.1, 0.1), 0.0, 0.0);
        let depth = DepthImage::filled(1, 1, 2.0);
        for _ in 0..5 {
            map.integrate_depth_image(&pose, &depth, &cam).unwrap();
        }
        assert_eq!(map.tsdf_voxel([3, 0, 0]).unwrap().weight, 3.0);
    }

    #[test]
    fn rejects_bad_input() {
        let mut map = VoxelMap::new(MapConfig::default()).unwrap();
        let cam = single_ray_camera();
        let pose = sensor_pose(&Vector3::zeros(), 0.0, 0.0);
        let neg = DepthImage::filled(1, 1, -1.0);
        assert!(matches!(
            map.integrate_depth_image(&pose, &neg, &cam),
            Err(MapError::NegativeRange(_))
        ));
        let wrong = DepthImage::filled(2, 1, 1.0);
        assert!(matches!(
            map.integrate_depth_image(&pose, &wrong, &cam),
            Err(MapError::ImageSize { .. })
        ));
        let nan_pose = sensor_pose(&Vector3::new(f64::NAN, 0.0, 0.0), 0.0, 0.0);
        let ok = DepthImage::filled(1, 1, 1.0);
        assert!(matches!(
            map.integrate_depth_image(&nan_pose, &ok, &cam),
            Err(MapError::NonFinitePose)
        ));
    }
}
