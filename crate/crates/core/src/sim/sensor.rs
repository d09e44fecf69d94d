use nalgebra::Vector3;

use super::{SimError, WorldModel};
use crate::camera::{CameraModel, DepthImage};

/// Noise-free depth image by analytic raycasting. Pixels without a surface
/// inside the sensor range hold `f32::INFINITY`.
pub fn simulate_sensor(
    world: &WorldModel,
    position: &Vector3<f64>,
    yaw: f64,
    camera: &CameraModel,
) -> Result<DepthImage, SimError> {
    let e = world.spec.extent;
    if !(0..3).all(|k| position[k] >= 0.0 && position[k] <= e[k]) {
        return Err(SimError::OutsideWorld([position.x, position.y, position.z]));
    }
    let rotation = camera.pose(position, yaw).rotation;
    let mut image = DepthImage::filled(camera.width, camera.height, f32::INFINITY);
    for v in 0..camera.height {
        for u in 0..camera.width {
            let dir = rotation * camera.pixel_ray(u, v);
            if let Some(t) = world.raycast(position, &dir, camera.max_range) {
                image.set(u, v, t as f32);
            }
        }
    }
    Ok(image)
}
