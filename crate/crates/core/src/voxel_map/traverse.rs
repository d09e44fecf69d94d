use nalgebra::Vector3;

use super::VoxelIndex;

/// Visits every voxel pierced by the segment `origin + t * dir`, `t` in
/// `[0, length]`, in order along the segment (Amanatides & Woo).
///
/// `dir` must be unit length. The callback returns `false` to stop early.
pub fn traverse_voxels(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    length: f64,
    voxel_size: f64,
    mut visit: impl FnMut(VoxelIndex) -> bool,
) {
    let start = origin / voxel_size;
    let mut cell = [
        start.x.floor() as i64,
        start.y.floor() as i64,
        start.z.floor() as i64,
    ];
    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for k in 0..3 {
        let d = dir[k];
        if d > 0.0 {
            step[k] = 1;
            t_delta[k] = voxel_size / d;
            t_max[k] = ((cell[k] + 1) as f64 - start[k]) * voxel_size / d;
        } else if d < 0.0 {
            step[k] = -1;
            t_delta[k] = -voxel_size / d;
            t_max[k] = (start[k] - cell[k] as f64) * voxel_size / -d;
        }
    }
    loop {
        if !visit(cell) {
            return;
        }
        let axis = if t_max[0] < t_max[1] {
            if t_max[0] < t_max[2] {
                0
            } else {
                2
            }
        } else if t_max[1] < t_max[2] {
            1
        } else {
            2
        };
        if t_max[axis] > length {
            return;
        }
        cell[axis] += step[axis];
        t_max[axis] += t_delta[axis];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(o: Vector3<f64>, d: Vector3<f64>, len: f64) -> Vec<VoxelIndex> {
        let mut out = Vec::new();
        traverse_voxels(&o, &d.normalize(), len, 1.0, |v| {
            out.push(v);
            true
        });
        out
    }

    #[test]
    fn axis_aligned_ray() {
        let v = collect(Vector3::new(0.5, 0.5, 0.5), Vector3::x(), 3.0);
        assert_eq!(v, vec![[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]]);
    }

    #[test]
    fn negative_direction() {
        let v = collect(Vector3::new(0.5, 0.5, 0.5), -Vector3::y(), 1.6);
        assert_eq!(v, vec![[0, 0, 0], [0, -1, 0], [0, -2, 0]]);
    }

    #[test]
    fn consecutive_cells_are_face_adjacent() {
        let v = collect(
            Vector3::new(0.3, 0.7, 0.1),
            Vector3::new(1.0, 0.7, -0.4),
            10.0,
        );
        for w in v.windows(2) {
            let d: i64 = (0..3).map(|k| (w[1][k] - w[0][k]).abs()).sum();
            assert_eq!(d, 1);
        }
        // Every sampled point along the segment lies in a visited cell.
        let dir = Vector3::new(1.0, 0.7, -0.4).normalize();
        for i in 0..1000 {
            let p = Vector3::new(0.3, 0.7, 0.1) + dir * (i as f64 * 0.01);
            let c = [p.x.floor() as i64, p.y.floor() as i64, p.z.floor() as i64];
            assert!(v.contains(&c));
        }
    }
}
