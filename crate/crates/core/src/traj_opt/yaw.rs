use crate::poly_spline::PolynomialSpline;

/// Planar speed below which the heading is held.
const MIN_PLANAR_SPEED: f64 = 0.1;

/// Heading along the horizontal velocity at `t`, or `previous` when the
/// vehicle is nearly hovering.
pub fn velocity_tracking_yaw(spline: &PolynomialSpline, t: f64, previous: f64) -> f64 {
    let v = spline.velocity(t);
    if v.x.hypot(v.y) < MIN_PLANAR_SPEED {
        previous
    } else {
        v.y.atan2(v.x)
    }
}
