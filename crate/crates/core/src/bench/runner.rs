use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{
    aggregate, canonical_order, write_csv, write_long_report, AggregateRow, CycleRow, OverlayLayer,
    OverlayRow, TrialRow, AGGREGATE_HEADER, CYCLE_HEADER, OVERLAY_HEADER, TRIAL_HEADER,
};
use super::{
    BenchError, AGGREGATE_CSV, CYCLES_CSV, LONG_REPORT, OVERLAY_CSV, SCHEMA_VERSION, TRIALS_CSV,
};
use crate::goal_selection::StrategyKind;
use crate::sim::{run_trial, ForestSpec, TrialConfig, TrialOutcome, TrialResult, TrialStatus};

/// A grid of trials over densities and strategies. Trial `i` of every
/// (density, strategy) cell uses seed `base_seed + i`, so strategies are
/// compared on the same worlds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub densities: Vec<f64>,
    pub trials: usize,
    pub strategies: Vec<StrategyKind>,
    pub max_replans: usize,
    /// Worker threads; `None` uses all cores but one.
    pub workers: Option<usize>,
    pub output_dir: PathBuf,
    pub base_seed: u64,
    /// Write the per-trial overlay geometry used by the path plots.
    pub overlays: bool,
    /// Template for every other trial parameter. Its seed, density,
    /// strategy and replan cap are overwritten per trial.
    pub trial: TrialConfig,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            densities: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            trials: 50,
            strategies: StrategyKind::ALL.to_vec(),
            max_replans: 120,
            workers: None,
            output_dir: PathBuf::from("bench_out"),
            base_seed: 0,
            overlays: true,
            trial: TrialConfig::default(),
        }
    }
}

impl BenchmarkSpec {
    /// The 50×50 m scenario: 20 seeds at densities 0.1 and 0.2, all
    /// strategies, 500 replans.
    pub fn long() -> Self {
        Self {
            densities: vec![0.1, 0.2],
            trials: 20,
            max_replans: 500,
            output_dir: PathBuf::from("long_bench_out"),
            trial: TrialConfig {
                world: ForestSpec::long(),
                ..TrialConfig::default()
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.densities.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(BenchError::Spec(
                "densities must be finite and non-negative".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(BenchError::Spec("worker count must be positive".into()));
        }
        let mut strategies = self.strategies.clone();
        strategies.sort();
        strategies.dedup();
        if strategies.len() != self.strategies.len() {
            return Err(BenchError::Spec("strategies must be distinct".into()));
        }
        let mut densities = self.densities.clone();
        densities.sort_by(f64::total_cmp);
        densities.dedup();
        if densities.len() != self.densities.len() {
            return Err(BenchError::Spec("densities must be distinct".into()));
        }
        self.trial.validate()?;
        Ok(())
    }

    pub fn worker_count(&self) -> usize {
        self.workers.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map_or(1, |n| n.get())
                .saturating_sub(1)
                .max(1)
        })
    }

    /// Trial configurations in density, strategy, seed order.
    pub fn trial_configs(&self) -> Vec<TrialConfig> {
        let mut out =
            Vec::with_capacity(self.densities.len() * self.strategies.len() * self.trials);
        for &density in &self.densities {
            for &strategy in &self.strategies {
                for i in 0..self.trials {
                    out.push(TrialConfig {
                        seed: self.base_seed + i as u64,
                        density,
                        strategy,
                        max_replans: self.max_replans,
                        ..self.trial.clone()
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    /// Canonically ordered, as written to the per-trial CSV.
    pub results: Vec<TrialResult>,
    pub aggregate: Vec<AggregateRow>,
    pub cycles: Vec<CycleRow>,
}

impl BenchmarkRun {
    pub fn audit_failures(&self) -> usize {
        self.results
            .iter()
            .filter(|r| r.status == TrialStatus::AuditFailure)
            .count()
    }
}

struct TrialRecord {
    result: TrialResult,
    cycles: Vec<CycleRow>,
    overlay: Vec<OverlayRow>,
}

fn record(outcome: TrialOutcome, overlays: bool) -> TrialRecord {
    let r = &outcome.result;
    let cycles = outcome
        .transcript
        .iter()
        .map(|c| CycleRow {
            schema_version: SCHEMA_VERSION,
            seed: r.seed,
            density: r.density,
            strategy: r.strategy,
            cycle: c.cycle,
            tsdf_ms: c.timings.tsdf_ms,
            esdf_ms: c.timings.esdf_ms,
            optimization_ms: c.timings.optimization_ms,
            selection_ms: c.timings.selection_ms,
        })
        .collect();
    let mut overlay = Vec::new();
    if overlays {
        let row = |layer, x: f64, y: f64, radius| OverlayRow {
            schema_version: SCHEMA_VERSION,
            seed: r.seed,
            density: r.density,
            strategy: r.strategy,
            layer,
            x,
            y,
            radius,
        };
        let w = &outcome.world;
        overlay.push(row(OverlayLayer::Bounds, 0.0, 0.0, None));
        overlay.push(row(
            OverlayLayer::Bounds,
            w.spec.extent[0],
            w.spec.extent[1],
            None,
        ));
        overlay.push(row(OverlayLayer::Start, w.start().x, w.start().y, None));
        overlay.push(row(OverlayLayer::Goal, w.goal().x, w.goal().y, None));
        for c in &w.cylinders {
            overlay.push(row(
                OverlayLayer::Cylinder,
                c.center.x,
                c.center.y,
                Some(c.radius),
            ));
        }
        for p in &outcome.path {
            overlay.push(row(OverlayLayer::Path, p.x, p.y, None));
        }
        for p in &outcome.intermediate_goals {
            overlay.push(row(OverlayLayer::IntermediateGoal, p.x, p.y, None));
        }
    }
    TrialRecord {
        result: outcome.result,
        cycles,
        overlay,
    }
}

/// Runs every trial of `spec` on a pool of `spec.worker_count()` threads and
/// writes the per-trial, aggregate, cycle-timing and overlay CSVs into the
/// output directory. Planner failures are results, not errors.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkRun, BenchError> {
    spec.validate()?;
    let dir = &spec.output_dir;
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    // Fail on an unwritable directory before spending time on trials.
    write_csv::<TrialRow>(&dir.join(TRIALS_CSV), &[], &TRIAL_HEADER)?;

    let configs = spec.trial_configs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.worker_count())
        .build()
        .map_err(|e| BenchError::Spec(e.to_string()))?;
    let overlays = spec.overlays;
    let mut records: Vec<TrialRecord> = pool.install(|| {
        configs
            .par_iter()
            .map(|c| run_trial(c).map(|o| record(o, overlays)))
            .collect::<Result<_, _>>()
    })?;
    records.sort_by(|a, b| canonical_order(&a.result, &b.result));

    let results: Vec<TrialResult> = records.iter().map(|r| r.result.clone()).collect();
    let rows: Vec<TrialRow> = results.iter().map(TrialRow::from).collect();
    write_csv(&dir.join(TRIALS_CSV), &rows, &TRIAL_HEADER)?;
    let aggregate = aggregate(&results);
    write_csv(&dir.join(AGGREGATE_CSV), &aggregate, &AGGREGATE_HEADER)?;
    let cycles: Vec<CycleRow> = records
        .iter()
        .flat_map(|r| r.cycles.iter().cloned())
        .collect();
    write_csv(&dir.join(CYCLES_CSV), &cycles, &CYCLE_HEADER)?;
    if overlays {
        let overlay: Vec<OverlayRow> = records.into_iter().flat_map(|r| r.overlay).collect();
        write_csv(&dir.join(OVERLAY_CSV), &overlay, &OVERLAY_HEADER)?;
    }
    Ok(BenchmarkRun {
        results,
        aggregate,
        cycles,
    })
}

/// [`run_benchmark`] followed by the long-map report: success counts and
/// path lengths per strategy and the per-phase timing table.
pub fn run_long_benchmark(spec: &BenchmarkSpec) -> Result<(BenchmarkRun, String), BenchError> {
    let run = run_benchmark(spec)?;
    let report = write_long_report(
        &spec.output_dir.join(LONG_REPORT),
        &run.aggregate,
        &run.cycles,
    )?;
    Ok((run, report))
}
