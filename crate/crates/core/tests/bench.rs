use std::fs;
use std::path::Path;

use canopy::bench::{
    aggregate, plot_report, read_aggregate_csv, read_trials_csv, run_benchmark,
    run_subsampling_study, BenchmarkSpec, SubsampleSpec, AGGREGATE_CSV, TIMING_COLUMNS, TRIALS_CSV,
};
use canopy::goal_selection::StrategyKind;
use canopy::sim::TrialResult;

fn small_spec(dir: &Path, workers: usize) -> BenchmarkSpec {
    BenchmarkSpec {
        densities: vec![0.2, 0.3],
        trials: 2,
        strategies: vec![StrategyKind::None, StrategyKind::Proposed],
        max_replans: 15,
        workers: Some(workers),
        output_dir: dir.to_path_buf(),
        ..Default::default()
    }
}

/// CSV body with the timing columns blanked.
fn body_without_timings(path: &Path) -> String {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let headers = reader.headers().unwrap().clone();
    let skip: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| TIMING_COLUMNS.contains(h))
        .map(|(i, _)| i)
        .collect();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            r.iter()
                .enumerate()
                .map(|(i, f)| if skip.contains(&i) { "" } else { f })
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn parallel_and_sequential_runs_agree() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let seq = run_benchmark(&small_spec(a.path(), 1)).unwrap();
    let par = run_benchmark(&small_spec(b.path(), 2)).unwrap();
    assert_eq!(seq.results.len(), 8);
    let strip = |r: &[TrialResult]| {
        r.iter()
            .map(TrialResult::without_timings)
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&seq.results), strip(&par.results));
    assert_eq!(
        body_without_timings(&a.path().join(TRIALS_CSV)),
        body_without_timings(&b.path().join(TRIALS_CSV))
    );

    // Aggregates recomputed from the trial CSV equal the aggregate CSV.
    let rows = read_trials_csv(&a.path().join(TRIALS_CSV)).unwrap();
    let results: Vec<TrialResult> = rows.into_iter().map(TrialResult::from).collect();
    assert_eq!(
        aggregate(&results),
        read_aggregate_csv(&a.path().join(AGGREGATE_CSV)).unwrap()
    );
    assert_eq!(aggregate(&results), seq.aggregate);

    let header = fs::read_to_string(a.path().join(TRIALS_CSV)).unwrap();
    let header = header.lines().next().unwrap();
    let value = serde_json::to_value(&seq.results[0]).unwrap();
    for field in value.as_object().unwrap().keys() {
        assert!(
            header.split(',').any(|h| h == field),
            "{field} missing from {header}"
        );
    }
    assert!(header.starts_with("schema_version,"));
}

#[test]
fn zero_trials_writes_header_only_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = BenchmarkSpec {
        trials: 0,
        ..small_spec(dir.path(), 1)
    };
    let run = run_benchmark(&spec).unwrap();
    assert!(run.results.is_empty() && run.aggregate.is_empty());
    for name in [TRIALS_CSV, AGGREGATE_CSV] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text.lines().count(), 1, "{name}");
    }
    let plots = plot_report(dir.path(), &dir.path().join("plots")).unwrap();
    assert!(plots.files.is_empty());
    assert_eq!(plots.warnings.len(), 1);
    assert!(!dir.path().join("plots").exists());
}

#[test]
fn single_trial_overlay_has_every_layer() {
    let dir = tempfile::tempdir().unwrap();
    let spec = BenchmarkSpec {
        densities: vec![0.2],
        trials: 1,
        strategies: vec![StrategyKind::Random],
        max_replans: 20,
        base_seed: 5,
        ..small_spec(dir.path(), 1)
    };
    run_benchmark(&spec).unwrap();
    let out = dir.path().join("plots");
    let plots = plot_report(dir.path(), &out).unwrap();
    let overlays: Vec<_> = plots
        .files
        .iter()
        .filter(|f| {
            f.file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with("overlay_")
        })
        .collect();
    assert_eq!(overlays.len(), 1);
    assert_eq!(
        overlays[0].file_name().unwrap(),
        "overlay_seed5_random_d0.2.svg"
    );
    let svg = fs::read_to_string(overlays[0]).unwrap();
    for layer in ["start", "goal", "cylinders", "path", "intermediate_goals"] {
        assert!(svg.contains(&format!("<g id=\"{layer}\"")), "{layer}");
    }
    assert!(svg.matches("<circle").count() > 10);
    assert!(out.join("success_rate.svg").exists() && out.join("path_length.svg").exists());
}

/// Median error over fractions, smoothed over three neighbors, does not
/// grow with the fraction.
#[test]
fn subsampling_error_shrinks_with_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SubsampleSpec {
        maps: 3,
        poses_per_map: 10,
        output_dir: dir.path().to_path_buf(),
        ..Default::default()
    };
    let study = run_subsampling_study(&spec).unwrap();
    assert_eq!(study.summary_for(1.0).unwrap().max_error, 0.0);
    let medians: Vec<f64> = study.summary.iter().map(|s| s.median_error).collect();
    let smooth: Vec<f64> = (0..medians.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(medians.len() - 1);
            medians[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    for w in smooth.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{smooth:?}");
    }
    for name in ["subsample.csv", "subsample_summary.csv", "subsample.svg"] {
        assert!(dir.path().join(name).exists());
    }
}
