use std::fs;
use std::path::PathBuf;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::write_csv;
use super::svg::{Axes, Svg};
use super::{BenchError, SCHEMA_VERSION};
use crate::camera::CameraModel;
use crate::sim::{generate_forest, simulate_sensor, ForestSpec, SimError, WorldModel};
use crate::voxel_map::{MapConfig, VoxelMap};

pub const SUBSAMPLE_CSV: &str = "subsample.csv";
pub const SUBSAMPLE_SUMMARY_CSV: &str = "subsample_summary.csv";
pub const SUBSAMPLE_SVG: &str = "subsample.svg";

/// Protocol of the frustum subsampling study: `maps` forests, each
/// explored from `views` random viewpoints, then queried at `poses_per_map`
/// random poses with every fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsampleSpec {
    pub maps: usize,
    pub poses_per_map: usize,
    pub views: usize,
    pub density: f64,
    pub fractions: Vec<f64>,
    pub base_seed: u64,
    pub world: ForestSpec,
    pub camera: CameraModel,
    pub map: MapConfig,
    pub output_dir: PathBuf,
}

impl Default for SubsampleSpec {
    fn default() -> Self {
        Self {
            maps: 10,
            poses_per_map: 20,
            views: 4,
            density: 0.2,
            fractions: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0],
            base_seed: 0,
            world: ForestSpec::small(),
            camera: CameraModel::default(),
            map: MapConfig::default(),
            output_dir: PathBuf::from("subsample_out"),
        }
    }
}

/// Gain estimate of one pose at one fraction against the full count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleRow {
    pub schema_version: u32,
    pub map: usize,
    pub pose: usize,
    pub fraction: f64,
    /// Exact unknown share of the frustum.
    pub exact_gain: f64,
    pub estimated_gain: f64,
    pub relative_error: f64,
    pub exact_unknown: usize,
    /// Unknown count extrapolated from the visited voxels.
    pub estimated_unknown: usize,
    pub visited: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionSummary {
    pub schema_version: u32,
    pub fraction: f64,
    pub samples: usize,
    pub median_error: f64,
    pub p95_error: f64,
    pub max_error: f64,
    pub mean_visited: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleStudy {
    pub rows: Vec<SubsampleRow>,
    pub summary: Vec<FractionSummary>,
}

impl SubsampleStudy {
    pub fn summary_for(&self, fraction: f64) -> Option<&FractionSummary> {
        self.summary.iter().find(|s| s.fraction == fraction)
    }
}

fn free_pose(
    world: &WorldModel,
    rng: &mut ChaCha8Rng,
    clearance: f64,
) -> Option<(Vector3<f64>, f64)> {
    let e = world.spec.extent;
    for _ in 0..1000 {
        let p = Vector3::new(
            rng.random_range(0.5..e[0] - 0.5),
            rng.random_range(0.5..e[1] - 0.5),
            rng.random_range(0.5..(e[2] - 0.5).max(0.6)),
        );
        if world.distance(&p, clearance) >= clearance {
            return Some((
                p,
                rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            ));
        }
    }
    None
}

/// Nearest-rank percentile of sorted values.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

/// Runs the study and writes the per-pose CSV, the per-fraction summary CSV
/// and an SVG of error against fraction.
///
/// The compared quantity is the normalized gain the exploration reward
/// uses: the unknown share of the visited frustum voxels. Poses whose
/// frustum holds no unknown voxel are redrawn.
pub fn run_subsampling_study(spec: &SubsampleSpec) -> Result<SubsampleStudy, BenchError> {
    if spec.fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(BenchError::Spec("fractions must be in (0, 1]".into()));
    }
    let dir = &spec.output_dir;
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;

    let mut rows = Vec::new();
    for m in 0..spec.maps {
        let seed = spec.base_seed + m as u64;
        let world = generate_forest(&spec.world, spec.density, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        let mut map = VoxelMap::new(spec.map).map_err(SimError::from)?;
        for _ in 0..spec.views {
            let Some((p, yaw)) = free_pose(&world, &mut rng, 0.3) else {
                continue;
            };
            let depth = simulate_sensor(&world, &p, yaw, &spec.camera)?;
            map.integrate_depth_image(&spec.camera.pose(&p, yaw), &depth, &spec.camera)
                .map_err(SimError::from)?;
        }
        let mut pose = 0;
        let mut attempts = 0;
        while pose < spec.poses_per_map && attempts < 100 * spec.poses_per_map.max(1) {
            attempts += 1;
            let Some((p, yaw)) = free_pose(&world, &mut rng, 0.3) else {
                break;
            };
            let exact = map.count_unknown_in_frustum(&p, yaw, &spec.camera, 1.0);
            if exact.unknown == 0 {
                continue;
            }
            let exact_gain = exact.normalized();
            for &fraction in &spec.fractions {
                let c = map.count_unknown_in_frustum(&p, yaw, &spec.camera, fraction);
                let estimated_gain = c.normalized();
                rows.push(SubsampleRow {
                    schema_version: SCHEMA_VERSION,
                    map: m,
                    pose,
                    fraction,
                    exact_gain,
                    estimated_gain,
                    relative_error: (estimated_gain - exact_gain).abs() / exact_gain,
                    exact_unknown: exact.unknown,
                    estimated_unknown: c.unknown,
                    visited: c.visited,
                });
            }
            pose += 1;
        }
    }

    let summary: Vec<FractionSummary> = spec
        .fractions
        .iter()
        .map(|&fraction| {
            let of: Vec<&SubsampleRow> = rows.iter().filter(|r| r.fraction == fraction).collect();
            let mut errors: Vec<f64> = of.iter().map(|r| r.relative_error).collect();
            errors.sort_by(f64::total_cmp);
            FractionSummary {
                schema_version: SCHEMA_VERSION,
                fraction,
                samples: errors.len(),
                median_error: percentile(&errors, 0.5),
                p95_error: percentile(&errors, 0.95),
                max_error: errors.last().copied().unwrap_or(0.0),
                mean_visited: of.iter().map(|r| r.visited as f64).sum::<f64>()
                    / of.len().max(1) as f64,
            }
        })
        .collect();

    write_csv(
        &dir.join(SUBSAMPLE_CSV),
        &rows,
        &[
            "schema_version",
            "map",
            "pose",
            "fraction",
            "exact_gain",
            "estimated_gain",
            "relative_error",
            "exact_unknown",
            "estimated_unknown",
            "visited",
        ],
    )?;
    write_csv(
        &dir.join(SUBSAMPLE_SUMMARY_CSV),
        &summary,
        &[
            "schema_version",
            "fraction",
            "samples",
            "median_error",
            "p95_error",
            "max_error",
            "mean_visited",
        ],
    )?;
    let svg_path = dir.join(SUBSAMPLE_SVG);
    fs::write(&svg_path, error_plot(&summary)).map_err(|e| BenchError::io(&svg_path, e))?;
    Ok(SubsampleStudy { rows, summary })
}

fn error_plot(summary: &[FractionSummary]) -> String {
    let (w, h) = (640.0, 400.0);
    let mut svg = Svg::new(w, h);
    let top = summary
        .iter()
        .map(|s| s.max_error)
        .fold(0.01f64, f64::max)
        .min(1.0)
        * 100.0;
    let y_max = (top / 5.0).ceil() * 5.0;
    let lo = summary
        .iter()
        .map(|s| s.fraction)
        .fold(1.0, f64::min)
        .min(0.01);
    let axes = Axes {
        left: 70.0,
        top: 20.0,
        width: w - 190.0,
        height: h - 80.0,
        x_range: (lo, 1.0),
        y_range: (0.0, y_max),
        log_x: true,
    };
    axes.draw_frame(
        &mut svg,
        "Subsampling fraction",
        "Relative gain error [%]",
        5,
    );
    for s in summary {
        axes.x_tick(&mut svg, s.fraction, &s.fraction.to_string());
    }
    type Series<'a> = (&'a str, &'a str, fn(&FractionSummary) -> f64);
    let series: [Series; 3] = [
        ("median", "#1f77b4", |s| s.median_error),
        ("p95", "#ff7f0e", |s| s.p95_error),
        ("max", "#d62728", |s| s.max_error),
    ];
    for (i, (name, color, f)) in series.iter().enumerate() {
        svg.open_group(name);
        let pts: Vec<(f64, f64)> = summary
            .iter()
            .map(|s| axes.map(s.fraction, (f(s) * 100.0).min(y_max)))
            .collect();
        svg.polyline(&pts, color, 2.0);
        for (x, y) in &pts {
            svg.circle(*x, *y, 3.0, color, None);
        }
        let ly = 30.0 + i as f64 * 20.0;
        svg.line(w - 110.0, ly, w - 90.0, ly, color, 2.0);
        svg.text(w - 84.0, ly + 4.0, 12.0, "start", name);
        svg.close_group();
    }
    svg.finish()
}
