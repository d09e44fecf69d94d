//! Pinhole depth camera model and depth images.
//!
//! Camera frame convention: `+x` is the optical axis, `+y` points left and
//! `+z` points up. Pixel `(u, v)` counts columns left to right and rows top to
//! bottom.

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("field of view must lie in (0, pi), got {0}")]
    FieldOfView(f64),
    #[error("max range must be positive, got {0}")]
    Range(f64),
    #[error("image resolution must be non-zero")]
    Resolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraModel {
    /// Horizontal field of view in radians.
    pub horizontal_fov: f64,
    /// Vertical field of view in radians.
    pub vertical_fov: f64,
    pub max_range: f64,
    pub width: usize,
    pub height: usize,
    /// Downward tilt of the optical axis in radians.
    pub mount_pitch: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            horizontal_fov: 90f64.to_radians(),
            vertical_fov: 60f64.to_radians(),
            max_range: 5.0,
            width: 160,
            height: 120,
            mount_pitch: 0.0,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<(), CameraError> {
        for fov in [self.horizontal_fov, self.vertical_fov] {
            if !(fov > 0.0 && fov < std::f64::consts::PI) {
                return Err(CameraError::FieldOfView(fov));
            }
        }
        if !(self.max_range > 0.0) || !self.max_range.is_finite() {
            return Err(CameraError::Range(self.max_range));
        }
        if self.width == 0 || self.height == 0 {
            return Err(CameraError::Resolution);
        }
        Ok(())
    }

    fn tan_half(&self) -> (f64, f64) {
        (
            (0.5 * self.horizontal_fov).tan(),
            (0.5 * self.vertical_fov).tan(),
        )
    }

    /// Focal lengths in pixels.
    pub fn focal(&self) -> (f64, f64) {
        let (th, tv) = self.tan_half();
        (0.5 * self.width as f64 / th, 0.5 * self.height as f64 / tv)
    }

    /// Unit ray through the center of pixel `(u, v)` in the camera frame.
    pub fn pixel_ray(&self, u: usize, v: usize) -> Vector3<f64> {
        let (fx, fy) = self.focal();
        let y = -((u as f64 + 0.5) - 0.5 * self.width as f64) / fx;
        let z = -((v as f64 + 0.5) - 0.5 * self.height as f64) / fy;
        Vector3::new(1.0, y, z).normalize()
    }

    /// Pixel containing the projection of a camera-frame point, if any.
    pub fn project(&self, p: &Vector3<f64>) -> Option<(usize, usize)> {
        if p.x <= 0.0 {
            return None;
        }
        let (fx, fy) = self.focal();
        let u = 0.5 * self.width as f64 - p.y * fx / p.x;
        let v = 0.5 * self.height as f64 - p.z * fy / p.x;
        if u < 0.0 || v < 0.0 {
            return None;
        }
        let (u, v) = (u.floor() as usize, v.floor() as usize);
        (u < self.width && v < self.height).then_some((u, v))
    }

    /// Whether a camera-frame point lies inside the viewing frustum,
    /// including the range limit.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        if p.x <= 0.0 {
            return false;
        }
        let (th, tv) = self.tan_half();
        p.y.abs() <= p.x * th && p.z.abs() <= p.x * tv && p.norm_squared() <= self.max_range.powi(2)
    }

    /// Camera-to-world transform for a sensor at `position` with heading `yaw`.
    pub fn pose(&self, position: &Vector3<f64>, yaw: f64) -> Isometry3<f64> {
        sensor_pose(position, yaw, self.mount_pitch)
    }
}

/// Camera-to-world transform: yaw about world `z`, then pitch (positive tilts
/// the optical axis down).
pub fn sensor_pose(position: &Vector3<f64>, yaw: f64, pitch: f64) -> Isometry3<f64> {
    let rotation = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw)
        * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), pitch);
    Isometry3::from_parts(Translation3::from(*position), rotation)
}

/// Row-major image of ranges along pixel rays, in meters.
///
/// `f32::INFINITY` marks a ray with no return inside the sensor range and
/// `NaN` marks a pixel without data.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl DepthImage {
    pub const NO_RETURN: f32 = f32::INFINITY;

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f32 {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: f32) {
        self.data[v * self.width + u] = value;
    }
}
