use serde::{Deserialize, Serialize};

/// Smooth obstacle potential on the clearance `d' = d - robot_radius`:
/// linear inside the radius, quadratic within the margin, zero beyond it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionPotential {
    pub margin: f64,
    pub robot_radius: f64,
}

impl CollisionPotential {
    /// Cost and its derivative with respect to the distance `d`.
    #[inline]
    pub fn eval(&self, d: f64) -> (f64, f64) {
        let e = self.margin;
        let dp = d - self.robot_radius;
        if dp < 0.0 {
            (-dp + 0.5 * e, -1.0)
        } else if dp <= e {
            let r = dp - e;
            (r * r / (2.0 * e), r / e)
        } else {
            (0.0, 0.0)
        }
    }
}
