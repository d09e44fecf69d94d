use nalgebra::DVector;

const SAFETY_FACTOR: f64 = 1.3;
const MIN_DURATION: f64 = 0.1;

/// Segment durations for straight-line legs between waypoints:
/// `max(d / v_max, sqrt(2 d / a_max)) * 1.3`, at least 0.1 s.
pub fn allocate_segment_times(waypoints: &[DVector<f64>], v_max: f64, a_max: f64) -> Vec<f64> {
    assert!(waypoints.len() >= 2, "need at least two waypoints");
    assert!(v_max > 0.0 && a_max > 0.0, "limits must be positive");
    waypoints
        .windows(2)
        .map(|w| {
            let d = (&w[1] - &w[0]).norm();
            (SAFETY_FACTOR * (d / v_max).max((2.0 * d / a_max).sqrt())).max(MIN_DURATION)
        })
        .collect()
}
