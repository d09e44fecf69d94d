use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;

pub const MIN_CYLINDER_RADIUS: f64 = 0.1;
pub const MAX_CYLINDER_RADIUS: f64 = 0.5;
pub const MIN_CYLINDER_HEIGHT: f64 = 0.5;
const GRID_CELL: f64 = 1.0;

/// Vertical solid cylinder standing on the ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub center: Vector2<f64>,
    pub radius: f64,
    pub height: f64,
}

impl Cylinder {
    /// Signed distance from `p` to the cylinder surface.
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        let dr = (p.xy() - self.center).norm() - self.radius;
        let dz = (p.z - self.height).max(-p.z);
        let outside = Vector2::new(dr.max(0.0), dz.max(0.0)).norm();
        outside + dr.max(dz).min(0.0)
    }

    /// First intersection of the ray `o + t d` (`d` unit) with the side or
    /// the top cap, for origins outside the cylinder.
    pub fn intersect(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        let mut best = None::<f64>;
        let rel = o.xy() - self.center;
        let dxy = d.xy();
        let a = dxy.norm_squared();
        if a > 0.0 {
            let b = 2.0 * rel.dot(&dxy);
            let c = rel.norm_squared() - self.radius * self.radius;
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let t = (-b - disc.sqrt()) / (2.0 * a);
                let z = o.z + t * d.z;
                if t >= 0.0 && (0.0..=self.height).contains(&z) {
                    best = Some(t);
                }
            }
        }
        if d.z < 0.0 && o.z > self.height {
            let t = (self.height - o.z) / d.z;
            if (rel + dxy * t).norm_squared() <= self.radius * self.radius {
                best = Some(best.map_or(t, |b| b.min(t)));
            }
        }
        best
    }
}

/// Geometry and endpoints of a forest scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestSpec {
    pub extent: [f64; 3],
    pub region_min: [f64; 2],
    pub region_max: [f64; 2],
    pub start: [f64; 3],
    pub goal: [f64; 3],
    /// Radius of the obstacle-free discs around start and goal.
    pub clear_disc: f64,
    /// Bound the world by walls and a ceiling in addition to the ground.
    pub enclosed: bool,
}

impl ForestSpec {
    /// 15 × 10 m map with a 10 × 10 m obstacle region in the middle.
    pub fn small() -> Self {
        Self {
            extent: [15.0, 10.0, 3.0],
            region_min: [2.5, 0.0],
            region_max: [12.5, 10.0],
            start: [1.0, 5.0, 1.0],
            goal: [14.0, 5.0, 1.0],
            clear_disc: 0.5,
            enclosed: true,
        }
    }

    /// 50 × 50 m map crossed corner to corner.
    pub fn long() -> Self {
        Self {
            extent: [50.0, 50.0, 3.0],
            region_min: [0.0, 0.0],
            region_max: [50.0, 50.0],
            start: [1.0, 1.0, 1.0],
            goal: [49.0, 49.0, 1.0],
            clear_disc: 1.5,
            enclosed: true,
        }
    }

    pub fn region_area(&self) -> f64 {
        (self.region_max[0] - self.region_min[0]) * (self.region_max[1] - self.region_min[1])
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let [x, y, z] = self.extent;
        let ok_extent = x > 0.0 && y > 0.0 && z > MIN_CYLINDER_HEIGHT;
        let ok_region = (0..2).all(|k| {
            0.0 <= self.region_min[k]
                && self.region_min[k] + 2.0 * MAX_CYLINDER_RADIUS <= self.region_max[k]
                && self.region_max[k] <= self.extent[k]
        });
        let inside = |p: &[f64; 3]| (0..3).all(|k| p[k] > 0.0 && p[k] < self.extent[k]);
        if ok_extent && ok_region && inside(&self.start) && inside(&self.goal) {
            Ok(())
        } else {
            Err(SimError::Config("forest geometry is inconsistent".into()))
        }
    }
}

/// Ground-truth world: cylinders on a ground plane at `z = 0`, optionally
/// bounded by walls at the extent and a ceiling at the extent height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "WorldData", into = "WorldData")]
pub struct WorldModel {
    pub spec: ForestSpec,
    pub cylinders: Vec<Cylinder>,
    grid: CylinderGrid,
}

#[derive(Serialize, Deserialize)]
struct WorldData {
    spec: ForestSpec,
    cylinders: Vec<Cylinder>,
}

impl From<WorldData> for WorldModel {
    fn from(d: WorldData) -> Self {
        WorldModel::new(d.spec, d.cylinders)
    }
}

impl From<WorldModel> for WorldData {
    fn from(w: WorldModel) -> Self {
        WorldData {
            spec: w.spec,
            cylinders: w.cylinders,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct CylinderGrid {
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl CylinderGrid {
    fn build(extent: &[f64; 3], cylinders: &[Cylinder]) -> Self {
        let nx = (extent[0] / GRID_CELL).ceil().max(1.0) as usize;
        let ny = (extent[1] / GRID_CELL).ceil().max(1.0) as usize;
        let mut cells = vec![Vec::new(); nx * ny];
        for (i, c) in cylinders.iter().enumerate() {
            let lo = ((c.center - Vector2::repeat(c.radius)) / GRID_CELL)
                .map(|v| v.floor().max(0.0) as usize);
            let hi = ((c.center + Vector2::repeat(c.radius)) / GRID_CELL)
                .map(|v| v.floor().max(0.0) as usize);
            for gx in lo.x..=hi.x.min(nx - 1) {
                for gy in lo.y..=hi.y.min(ny - 1) {
                    cells[gy * nx + gx].push(i as u32);
                }
            }
        }
        Self { nx, ny, cells }
    }

    fn cell(&self, gx: i64, gy: i64) -> &[u32] {
        if gx < 0 || gy < 0 || gx as usize >= self.nx || gy as usize >= self.ny {
            &[]
        } else {
            &self.cells[gy as usize * self.nx + gx as usize]
        }
    }
}

impl WorldModel {
    pub fn new(spec: ForestSpec, cylinders: Vec<Cylinder>) -> Self {
        let grid = CylinderGrid::build(&spec.extent, &cylinders);
        Self {
            spec,
            cylinders,
            grid,
        }
    }

    pub fn start(&self) -> Vector3<f64> {
        Vector3::from(self.spec.start)
    }

    pub fn goal(&self) -> Vector3<f64> {
        Vector3::from(self.spec.goal)
    }

    /// Distance to the nearest surface (cylinders, ground and, if enclosed,
    /// walls and ceiling), capped at `cap`.
    pub fn distance(&self, p: &Vector3<f64>, cap: f64) -> f64 {
        let mut d = cap.min(p.z);
        if self.spec.enclosed {
            let [x, y, z] = self.spec.extent;
            d = d.min(p.x).min(x - p.x).min(p.y).min(y - p.y).min(z - p.z);
        }
        let reach = d + MAX_CYLINDER_RADIUS;
        let lo = ((p.xy() - Vector2::repeat(reach)) / GRID_CELL).map(|v| v.floor() as i64);
        let hi = ((p.xy() + Vector2::repeat(reach)) / GRID_CELL).map(|v| v.floor() as i64);
        for gx in lo.x..=hi.x {
            for gy in lo.y..=hi.y {
                for &i in self.grid.cell(gx, gy) {
                    d = d.min(self.cylinders[i as usize].distance(p));
                }
            }
        }
        d
    }

    /// Whether `p` is inside a cylinder or outside the world volume.
    pub fn is_occupied(&self, p: &Vector3<f64>) -> bool {
        self.distance(p, 1.0) < 0.0
    }

    /// Range to the first surface along the unit ray `o + t d`, if within
    /// `max_range`.
    pub fn raycast(&self, o: &Vector3<f64>, d: &Vector3<f64>, max_range: f64) -> Option<f64> {
        let mut best = f64::INFINITY;
        if d.z < 0.0 {
            best = best.min(-o.z / d.z);
        }
        if self.spec.enclosed {
            let [x, y, z] = self.spec.extent;
            for (pos, dir, hi) in [(o.x, d.x, x), (o.y, d.y, y)] {
                if dir < 0.0 {
                    best = best.min(-pos / dir);
                } else if dir > 0.0 {
                    best = best.min((hi - pos) / dir);
                }
            }
            if d.z > 0.0 {
                best = best.min((z - o.z) / d.z);
            }
        }
        let limit = best.min(max_range);

        // 2-D DDA over the cylinder grid, stopping once a hit lies before
        // the exit of the current cell.
        let dxy = d.xy();
        let planar = dxy.norm();
        let start = o.xy() / GRID_CELL;
        let mut cell = [start.x.floor() as i64, start.y.floor() as i64];
        let mut step = [0i64; 2];
        let mut t_max = [f64::INFINITY; 2];
        let mut t_delta = [f64::INFINITY; 2];
        for k in 0..2 {
            if dxy[k] > 0.0 {
                step[k] = 1;
                t_delta[k] = GRID_CELL / dxy[k];
                t_max[k] = ((cell[k] + 1) as f64 - start[k]) * GRID_CELL / dxy[k];
            } else if dxy[k] < 0.0 {
                step[k] = -1;
                t_delta[k] = -GRID_CELL / dxy[k];
                t_max[k] = (start[k] - cell[k] as f64) * GRID_CELL / -dxy[k];
            }
        }
        loop {
            for &i in self.grid.cell(cell[0], cell[1]) {
                if let Some(t) = self.cylinders[i as usize].intersect(o, d) {
                    best = best.min(t);
                }
            }
            let t_exit = t_max[0].min(t_max[1]);
            if planar < 1e-12 || best <= t_exit || t_exit > limit {
                break;
            }
            let k = if t_max[0] < t_max[1] { 0 } else { 1 };
            cell[k] += step[k];
            t_max[k] += t_delta[k];
        }
        (best <= max_range).then_some(best)
    }

    /// Fraction of the obstacle-region volume (up to the world height)
    /// whose sample points on a `resolution` lattice fall inside cylinders.
    pub fn occupied_fraction(&self, resolution: f64) -> f64 {
        let s = &self.spec;
        let n = |lo: f64, hi: f64| ((hi - lo) / resolution).round().max(1.0) as usize;
        let (nx, ny, nz) = (
            n(s.region_min[0], s.region_max[0]),
            n(s.region_min[1], s.region_max[1]),
            n(0.0, s.extent[2]),
        );
        let mut inside = 0usize;
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let p = Vector3::new(
                        s.region_min[0] + (i as f64 + 0.5) * resolution,
                        s.region_min[1] + (j as f64 + 0.5) * resolution,
                        (k as f64 + 0.5) * resolution,
                    );
                    if self.inside_cylinder(&p) {
                        inside += 1;
                    }
                }
            }
        }
        inside as f64 / (nx * ny * nz) as f64
    }

    fn inside_cylinder(&self, p: &Vector3<f64>) -> bool {
        let g = (p.xy() / GRID_CELL).map(|v| v.floor() as i64);
        self.grid
            .cell(g.x, g.y)
            .iter()
            .any(|&i| self.cylinders[i as usize].distance(p) < 0.0)
    }
}

/// Random cylinder forest: `round(density × region area)` cylinders with
/// radii and heights drawn uniformly, each fully inside the obstacle region
/// and clear of the start and goal discs.
pub fn generate_forest(spec: &ForestSpec, density: f64, seed: u64) -> Result<WorldModel, SimError> {
    if !(density >= 0.0) {
        return Err(SimError::Config(format!(
            "density must be non-negative, got {density}"
        )));
    }
    spec.validate()?;
    let count = (density * spec.region_area()).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep_clear = [
        Vector2::new(spec.start[0], spec.start[1]),
        Vector2::new(spec.goal[0], spec.goal[1]),
    ];
    let mut cylinders = Vec::with_capacity(count);
    let max_attempts = 1000 * count.max(1);
    let mut attempts = 0;
    while cylinders.len() < count {
        attempts += 1;
        if attempts > max_attempts {
            return Err(SimError::Config(format!(
                "could not place {count} cylinders"
            )));
        }
        let radius = rng.random_range(MIN_CYLINDER_RADIUS..=MAX_CYLINDER_RADIUS);
        let height = rng.random_range(MIN_CYLINDER_HEIGHT..=spec.extent[2]);
        let center = Vector2::new(
            rng.random_range(spec.region_min[0] + radius..=spec.region_max[0] - radius),
            rng.random_range(spec.region_min[1] + radius..=spec.region_max[1] - radius),
        );
        if keep_clear
            .iter()
            .any(|c| (center - c).norm() < radius + spec.clear_disc)
        {
            continue;
        }
        cylinders.push(Cylinder {
            center,
            radius,
            height,
        });
    }
    Ok(WorldModel::new(*spec, cylinders))
}
