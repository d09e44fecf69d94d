use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{BenchError, SCHEMA_VERSION};
use crate::goal_selection::StrategyKind;
use crate::sim::{TrialResult, TrialStatus};

/// One row of the per-trial CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub schema_version: u32,
    pub seed: u64,
    pub density: f64,
    pub strategy: StrategyKind,
    pub success: bool,
    pub status: TrialStatus,
    pub replans: usize,
    pub path_length: f64,
    pub final_distance: f64,
    pub stuck_events: usize,
    pub selections: usize,
    pub min_clearance: f64,
    pub collisions: usize,
    pub unknown_traversals: usize,
    pub tsdf_ms: f64,
    pub esdf_ms: f64,
    pub optimization_ms: f64,
    pub selection_ms: f64,
}

/// Wall-clock columns of the per-trial CSV.
pub const TIMING_COLUMNS: [&str; 4] = ["tsdf_ms", "esdf_ms", "optimization_ms", "selection_ms"];

impl From<&TrialResult> for TrialRow {
    fn from(r: &TrialResult) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: r.seed,
            density: r.density,
            strategy: r.strategy,
            success: r.success,
            status: r.status,
            replans: r.replans,
            path_length: r.path_length,
            final_distance: r.final_distance,
            stuck_events: r.stuck_events,
            selections: r.selections,
            min_clearance: r.min_clearance,
            collisions: r.collisions,
            unknown_traversals: r.unknown_traversals,
            tsdf_ms: r.tsdf_ms,
            esdf_ms: r.esdf_ms,
            optimization_ms: r.optimization_ms,
            selection_ms: r.selection_ms,
        }
    }
}

impl From<TrialRow> for TrialResult {
    fn from(r: TrialRow) -> Self {
        Self {
            seed: r.seed,
            density: r.density,
            strategy: r.strategy,
            success: r.success,
            status: r.status,
            replans: r.replans,
            path_length: r.path_length,
            final_distance: r.final_distance,
            stuck_events: r.stuck_events,
            selections: r.selections,
            min_clearance: r.min_clearance,
            collisions: r.collisions,
            unknown_traversals: r.unknown_traversals,
            tsdf_ms: r.tsdf_ms,
            esdf_ms: r.esdf_ms,
            optimization_ms: r.optimization_ms,
            selection_ms: r.selection_ms,
        }
    }
}

/// Per (strategy, density) summary. Path lengths are over the trials that
/// every strategy of the benchmark solved at that density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub schema_version: u32,
    pub strategy: StrategyKind,
    pub density: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub success_low: f64,
    pub success_high: f64,
    pub audit_failures: usize,
    pub jointly_solved: usize,
    pub mean_path_length: Option<f64>,
    pub median_path_length: Option<f64>,
    pub mean_tsdf_ms: f64,
    pub mean_esdf_ms: f64,
    pub mean_optimization_ms: f64,
    pub mean_selection_ms: Option<f64>,
    pub mean_stuck_events: f64,
    pub median_stuck_events: f64,
    pub max_stuck_events: usize,
}

/// Phase timings of one planning cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRow {
    pub schema_version: u32,
    pub seed: u64,
    pub density: f64,
    pub strategy: StrategyKind,
    pub cycle: usize,
    pub tsdf_ms: f64,
    pub esdf_ms: f64,
    pub optimization_ms: f64,
    pub selection_ms: Option<f64>,
}

impl CycleRow {
    pub fn total_ms(&self) -> f64 {
        self.tsdf_ms + self.esdf_ms + self.optimization_ms + self.selection_ms.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlayLayer {
    Bounds,
    Start,
    Goal,
    Cylinder,
    Path,
    IntermediateGoal,
}

/// One primitive of a top-down trial overlay. `radius` is set for
/// cylinders only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRow {
    pub schema_version: u32,
    pub seed: u64,
    pub density: f64,
    pub strategy: StrategyKind,
    pub layer: OverlayLayer,
    pub x: f64,
    pub y: f64,
    pub radius: Option<f64>,
}

pub(crate) fn write_csv<T: Serialize>(
    path: &Path,
    rows: &[T],
    header: &[&str],
) -> Result<(), BenchError> {
    let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(file));
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))?;
    Ok(())
}

fn read_csv<T: DeserializeOwned>(
    path: &Path,
    version: impl Fn(&T) -> u32,
) -> Result<Vec<T>, BenchError> {
    let file = File::open(path).map_err(|e| BenchError::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let mut rows = Vec::new();
    for row in r.deserialize() {
        let row: T = row?;
        let v = version(&row);
        if v != SCHEMA_VERSION {
            return Err(BenchError::Schema(path.display().to_string(), v));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub const TRIAL_HEADER: [&str; 18] = [
    "schema_version",
    "seed",
    "density",
    "strategy",
    "success",
    "status",
    "replans",
    "path_length",
    "final_distance",
    "stuck_events",
    "selections",
    "min_clearance",
    "collisions",
    "unknown_traversals",
    "tsdf_ms",
    "esdf_ms",
    "optimization_ms",
    "selection_ms",
];

pub const AGGREGATE_HEADER: [&str; 19] = [
    "schema_version",
    "strategy",
    "density",
    "trials",
    "successes",
    "success_rate",
    "success_low",
    "success_high",
    "audit_failures",
    "jointly_solved",
    "mean_path_length",
    "median_path_length",
    "mean_tsdf_ms",
    "mean_esdf_ms",
    "mean_optimization_ms",
    "mean_selection_ms",
    "mean_stuck_events",
    "median_stuck_events",
    "max_stuck_events",
];

pub const CYCLE_HEADER: [&str; 9] = [
    "schema_version",
    "seed",
    "density",
    "strategy",
    "cycle",
    "tsdf_ms",
    "esdf_ms",
    "optimization_ms",
    "selection_ms",
];

pub const OVERLAY_HEADER: [&str; 8] = [
    "schema_version",
    "seed",
    "density",
    "strategy",
    "layer",
    "x",
    "y",
    "radius",
];

pub fn read_trials_csv(path: &Path) -> Result<Vec<TrialRow>, BenchError> {
    read_csv(path, |r: &TrialRow| r.schema_version)
}

pub fn read_aggregate_csv(path: &Path) -> Result<Vec<AggregateRow>, BenchError> {
    read_csv(path, |r: &AggregateRow| r.schema_version)
}

pub fn read_cycles_csv(path: &Path) -> Result<Vec<CycleRow>, BenchError> {
    read_csv(path, |r: &CycleRow| r.schema_version)
}

pub fn read_overlay_csv(path: &Path) -> Result<Vec<OverlayRow>, BenchError> {
    read_csv(path, |r: &OverlayRow| r.schema_version)
}

/// 95% Wilson score interval of a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Orders rows by density, then strategy, then seed.
pub(crate) fn canonical_order(a: &TrialResult, b: &TrialResult) -> std::cmp::Ordering {
    a.density
        .total_cmp(&b.density)
        .then(a.strategy.cmp(&b.strategy))
        .then(a.seed.cmp(&b.seed))
}

/// Aggregates per-trial results. Only the rows themselves are used, so the
/// per-trial CSV reproduces the aggregate exactly.
pub fn aggregate(results: &[TrialResult]) -> Vec<AggregateRow> {
    let mut sorted: Vec<&TrialResult> = results.iter().collect();
    sorted.sort_by(|a, b| canonical_order(a, b));

    let mut densities: Vec<f64> = sorted.iter().map(|r| r.density).collect();
    densities.dedup();
    let mut rows = Vec::new();
    for density in densities {
        let at: Vec<&TrialResult> = sorted
            .iter()
            .copied()
            .filter(|r| r.density == density)
            .collect();
        let mut strategies: Vec<StrategyKind> = at.iter().map(|r| r.strategy).collect();
        strategies.dedup();
        // Seeds solved by every strategy present at this density.
        let mut solved: BTreeMap<u64, usize> = BTreeMap::new();
        for r in at.iter().filter(|r| r.success) {
            *solved.entry(r.seed).or_default() += 1;
        }
        let joint: Vec<u64> = solved
            .into_iter()
            .filter(|&(_, n)| n == strategies.len())
            .map(|(s, _)| s)
            .collect();

        for strategy in strategies {
            let group: Vec<&TrialResult> = at
                .iter()
                .copied()
                .filter(|r| r.strategy == strategy)
                .collect();
            let trials = group.len();
            let successes = group.iter().filter(|r| r.success).count();
            let (success_low, success_high) = wilson_interval(successes, trials);
            let lengths: Vec<f64> = group
                .iter()
                .filter(|r| r.success && joint.binary_search(&r.seed).is_ok())
                .map(|r| r.path_length)
                .collect();
            let stuck: Vec<f64> = group.iter().map(|r| r.stuck_events as f64).collect();
            let per = |f: fn(&TrialResult) -> f64| {
                mean(&group.iter().map(|r| f(r)).collect::<Vec<_>>()).unwrap_or(0.0)
            };
            let selection: Vec<f64> = group
                .iter()
                .filter(|r| r.selections > 0)
                .map(|r| r.selection_ms)
                .collect();
            rows.push(AggregateRow {
                schema_version: SCHEMA_VERSION,
                strategy,
                density,
                trials,
                successes,
                success_rate: successes as f64 / trials as f64,
                success_low,
                success_high,
                audit_failures: group
                    .iter()
                    .filter(|r| r.status == TrialStatus::AuditFailure)
                    .count(),
                jointly_solved: lengths.len(),
                mean_path_length: mean(&lengths),
                median_path_length: median(&lengths),
                mean_tsdf_ms: per(|r| r.tsdf_ms),
                mean_esdf_ms: per(|r| r.esdf_ms),
                mean_optimization_ms: per(|r| r.optimization_ms),
                mean_selection_ms: mean(&selection),
                mean_stuck_events: mean(&stuck).unwrap_or(0.0),
                median_stuck_events: median(&stuck).unwrap_or(0.0),
                max_stuck_events: group.iter().map(|r| r.stuck_events).max().unwrap_or(0),
            });
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedLengths {
    /// Seeds solved by both strategies.
    pub trials: usize,
    pub mean_a: f64,
    pub mean_b: f64,
}

impl PairedLengths {
    /// Relative reduction of `a` against `b`.
    pub fn reduction(&self) -> f64 {
        1.0 - self.mean_a / self.mean_b
    }
}

/// Mean path lengths of strategies `a` and `b` over the seeds both solved
/// at `density`. `None` when no seed was solved by both.
pub fn paired_path_lengths(
    results: &[TrialResult],
    density: f64,
    a: StrategyKind,
    b: StrategyKind,
) -> Option<PairedLengths> {
    let solved = |k: StrategyKind| -> BTreeMap<u64, f64> {
        results
            .iter()
            .filter(|r| r.density == density && r.strategy == k && r.success)
            .map(|r| (r.seed, r.path_length))
            .collect()
    };
    let (la, lb) = (solved(a), solved(b));
    let pairs: Vec<(f64, f64)> = la
        .iter()
        .filter_map(|(seed, &x)| lb.get(seed).map(|&y| (x, y)))
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let n = pairs.len() as f64;
    Some(PairedLengths {
        trials: pairs.len(),
        mean_a: pairs.iter().map(|p| p.0).sum::<f64>() / n,
        mean_b: pairs.iter().map(|p| p.1).sum::<f64>() / n,
    })
}

/// Success counts and path lengths per strategy and density, followed by the
/// per-phase timing table of the proposed method's cycles.
pub fn write_long_report(
    path: &Path,
    aggregate: &[AggregateRow],
    cycles: &[CycleRow],
) -> Result<String, BenchError> {
    let mut densities: Vec<f64> = aggregate.iter().map(|r| r.density).collect();
    densities.sort_by(f64::total_cmp);
    densities.dedup();
    let mut strategies: Vec<StrategyKind> = aggregate.iter().map(|r| r.strategy).collect();
    strategies.sort();
    strategies.dedup();

    let mut s = String::new();
    let _ = writeln!(s, "## Success on the long map\n");
    let _ = write!(s, "| Strategy |");
    for d in &densities {
        let _ = write!(s, " Success @ {d} | Path length [m] @ {d} |");
    }
    let _ = write!(s, "\n|---|");
    for _ in &densities {
        let _ = write!(s, "---:|---:|");
    }
    let _ = writeln!(s);
    for k in &strategies {
        let _ = write!(s, "| {k} |");
        for d in &densities {
            match aggregate
                .iter()
                .find(|r| r.strategy == *k && r.density == *d)
            {
                Some(r) => {
                    let len = r
                        .mean_path_length
                        .map_or("-".to_string(), |l| format!("{l:.1}"));
                    let _ = write!(s, " {}/{} | {len} |", r.successes, r.trials);
                }
                None => {
                    let _ = write!(s, " - | - |");
                }
            }
        }
        let _ = writeln!(s);
    }

    let own: Vec<&CycleRow> = cycles
        .iter()
        .filter(|c| c.strategy == StrategyKind::Proposed)
        .collect();
    let source = if own.is_empty() {
        cycles.iter().collect()
    } else {
        own
    };
    let avg = |f: fn(&CycleRow) -> Option<f64>| {
        let v: Vec<f64> = source.iter().filter_map(|c| f(c)).collect();
        mean(&v).map_or("-".to_string(), |m| format!("{m:.1}"))
    };
    let _ = writeln!(s, "\n## Timings per iteration\n");
    let _ = writeln!(s, "| Step | Time [ms] |\n|---|---:|");
    let _ = writeln!(s, "| **Mapping** | |");
    let _ = writeln!(s, "| TSDF Insert | {} |", avg(|c| Some(c.tsdf_ms)));
    let _ = writeln!(s, "| ESDF Update | {} |", avg(|c| Some(c.esdf_ms)));
    let _ = writeln!(s, "| **Local Replanning** | |");
    let _ = writeln!(
        s,
        "| Trajectory Optimization | {} |",
        avg(|c| Some(c.optimization_ms))
    );
    let _ = writeln!(
        s,
        "| Intermediate Goal Selection | {} |",
        avg(|c| c.selection_ms)
    );
    let _ = writeln!(
        s,
        "\nAveraged over {} cycles; goal selection only over the cycles that ran it.",
        source.len()
    );

    let mut f = File::create(path).map_err(|e| BenchError::io(path, e))?;
    f.write_all(s.as_bytes())
        .map_err(|e| BenchError::io(path, e))?;
    Ok(s)
}
