use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::report::{
    read_aggregate_csv, read_overlay_csv, read_trials_csv, AggregateRow, OverlayLayer, OverlayRow,
};
use super::svg::{Axes, Svg, PALETTE};
use super::{BenchError, AGGREGATE_CSV, OVERLAY_CSV, TRIALS_CSV};
use crate::goal_selection::StrategyKind;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotSummary {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn color(k: StrategyKind) -> &'static str {
    let i = StrategyKind::ALL.iter().position(|s| *s == k).unwrap_or(0);
    PALETTE[i % PALETTE.len()]
}

/// Renders the SVG plots of a benchmark directory from its CSV files into
/// `out_dir`: success rates per density, jointly-solved path lengths and
/// one top-down overlay per trial when overlay data exists. A report
/// without trials produces no files and a warning on standard error.
pub fn plot_report(report_dir: &Path, out_dir: &Path) -> Result<PlotSummary, BenchError> {
    let trials = read_trials_csv(&report_dir.join(TRIALS_CSV))?;
    let mut summary = PlotSummary::default();
    if trials.is_empty() {
        let msg = format!(
            "{}: report has no trials, no plots written",
            report_dir.display()
        );
        eprintln!("warning: {msg}");
        summary.warnings.push(msg);
        return Ok(summary);
    }
    fs::create_dir_all(out_dir).map_err(|e| BenchError::io(out_dir, e))?;
    let aggregate = read_aggregate_csv(&report_dir.join(AGGREGATE_CSV))?;

    let mut write = |name: String, content: String| -> Result<(), BenchError> {
        let path = out_dir.join(name);
        fs::write(&path, content).map_err(|e| BenchError::io(&path, e))?;
        summary.files.push(path);
        Ok(())
    };
    write(
        "success_rate.svg".into(),
        grouped_bars(&aggregate, "Success rate", (0.0, 1.0), |r| {
            Some((r.success_rate, Some((r.success_low, r.success_high))))
        }),
    )?;
    let max_len = aggregate
        .iter()
        .filter_map(|r| r.mean_path_length)
        .fold(0.0, f64::max);
    write(
        "path_length.svg".into(),
        grouped_bars(
            &aggregate,
            "Mean path length, jointly solved [m]",
            (0.0, nice_ceiling(max_len)),
            |r| r.mean_path_length.map(|l| (l, None)),
        ),
    )?;

    let overlay_path = report_dir.join(OVERLAY_CSV);
    if overlay_path.exists() {
        let mut groups: BTreeMap<(u64, String, StrategyKind), Vec<OverlayRow>> = BTreeMap::new();
        for row in read_overlay_csv(&overlay_path)? {
            groups
                .entry((row.seed, row.density.to_string(), row.strategy))
                .or_default()
                .push(row);
        }
        for ((seed, density, strategy), rows) in groups {
            write(
                format!("overlay_seed{seed}_{strategy}_d{density}.svg"),
                overlay(
                    &rows,
                    &format!("seed {seed}, {strategy}, density {density}"),
                ),
            )?;
        }
    }
    Ok(summary)
}

fn nice_ceiling(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let step = 10f64.powf(v.log10().floor());
    (v / step).ceil() * step
}

/// Bars grouped by density with one bar per strategy and optional
/// interval whiskers.
fn grouped_bars(
    rows: &[AggregateRow],
    y_label: &str,
    y_range: (f64, f64),
    value: impl Fn(&AggregateRow) -> Option<(f64, Option<(f64, f64)>)>,
) -> String {
    let mut densities: Vec<f64> = rows.iter().map(|r| r.density).collect();
    densities.sort_by(f64::total_cmp);
    densities.dedup();
    let mut strategies: Vec<StrategyKind> = rows.iter().map(|r| r.strategy).collect();
    strategies.sort();
    strategies.dedup();

    let (w, h) = (720.0, 420.0);
    let mut svg = Svg::new(w, h);
    let axes = Axes {
        left: 70.0,
        top: 20.0,
        width: w - 200.0,
        height: h - 80.0,
        x_range: (0.0, densities.len() as f64),
        y_range,
        log_x: false,
    };
    axes.draw_frame(&mut svg, "Density [objects/m²]", y_label, 5);
    let slot = 0.8 / strategies.len().max(1) as f64;
    for (si, k) in strategies.iter().enumerate() {
        svg.open_group(&format!("bars-{k}"));
        for (di, d) in densities.iter().enumerate() {
            let Some(r) = rows.iter().find(|r| r.strategy == *k && r.density == *d) else {
                continue;
            };
            let Some((v, interval)) = value(r) else {
                continue;
            };
            let x0 = di as f64 + 0.1 + si as f64 * slot;
            let (px0, py) = axes.map(x0, v.min(y_range.1));
            let (px1, base) = axes.map(x0 + slot, y_range.0);
            svg.rect(px0, py, px1 - px0, base - py, color(*k), None);
            if let Some((lo, hi)) = interval {
                let cx = 0.5 * (px0 + px1);
                let (_, ylo) = axes.map(0.0, lo);
                let (_, yhi) = axes.map(0.0, hi);
                svg.line(cx, ylo, cx, yhi, "black", 1.0);
            }
        }
        svg.close_group();
    }
    for (di, d) in densities.iter().enumerate() {
        axes.x_tick(&mut svg, di as f64 + 0.5, &d.to_string());
    }
    legend(&mut svg, &strategies, w - 120.0, 30.0);
    svg.finish()
}

fn legend(svg: &mut Svg, strategies: &[StrategyKind], x: f64, y: f64) {
    svg.open_group("legend");
    for (i, k) in strategies.iter().enumerate() {
        let yy = y + i as f64 * 20.0;
        svg.rect(x, yy, 12.0, 12.0, color(*k), None);
        svg.text(x + 18.0, yy + 10.0, 12.0, "start", k.name());
    }
    svg.close_group();
}

/// Top-down view of one trial with one group per layer.
fn overlay(rows: &[OverlayRow], title: &str) -> String {
    let of = |layer: OverlayLayer| rows.iter().filter(move |r| r.layer == layer);
    let (mut max_x, mut max_y) = (1.0f64, 1.0f64);
    for r in of(OverlayLayer::Bounds) {
        max_x = max_x.max(r.x);
        max_y = max_y.max(r.y);
    }
    let scale = (800.0 / max_x).min(600.0 / max_y);
    let margin = 30.0;
    let (w, h) = (
        max_x * scale + 2.0 * margin,
        max_y * scale + 2.0 * margin + 20.0,
    );
    let map = |x: f64, y: f64| (margin + x * scale, h - margin - y * scale);
    let mut svg = Svg::new(w.round(), h.round());
    svg.text(w / 2.0, 18.0, 13.0, "middle", title);

    svg.open_group("bounds");
    let (x0, y0) = map(0.0, max_y);
    svg.rect(x0, y0, max_x * scale, max_y * scale, "none", Some("black"));
    svg.close_group();

    svg.open_group("cylinders");
    for r in of(OverlayLayer::Cylinder) {
        let (cx, cy) = map(r.x, r.y);
        svg.circle(cx, cy, r.radius.unwrap_or(0.1) * scale, "#8c6d31", None);
    }
    svg.close_group();

    svg.open_group("path");
    let path: Vec<(f64, f64)> = of(OverlayLayer::Path).map(|r| map(r.x, r.y)).collect();
    svg.polyline(&path, "#1f77b4", 2.0);
    svg.close_group();

    svg.open_group("intermediate_goals");
    for r in of(OverlayLayer::IntermediateGoal) {
        let (cx, cy) = map(r.x, r.y);
        svg.circle(cx, cy, 4.0, "none", Some("#ff7f0e"));
    }
    svg.close_group();

    for (layer, id, fill) in [
        (OverlayLayer::Start, "start", "#2ca02c"),
        (OverlayLayer::Goal, "goal", "#d62728"),
    ] {
        svg.open_group(id);
        for r in of(layer) {
            let (cx, cy) = map(r.x, r.y);
            svg.circle(cx, cy, 6.0, fill, Some("black"));
        }
        svg.close_group();
    }
    svg.finish()
}
