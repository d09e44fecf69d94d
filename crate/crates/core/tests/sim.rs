use canopy::goal_selection::StrategyKind;
use canopy::sim::{generate_forest, run_trial, ForestSpec, TrialConfig, TrialOutcome};

fn trial(seed: u64, density: f64, strategy: StrategyKind) -> TrialOutcome {
    run_trial(&TrialConfig {
        seed,
        density,
        strategy,
        max_replans: 40,
        ..Default::default()
    })
    .unwrap()
}

/// Composite Simpson integral of the speed over every executed window.
fn speed_integral(outcome: &TrialOutcome) -> f64 {
    outcome
        .executed
        .iter()
        .map(|(spline, t0, t1)| {
            let n = 200;
            let h = (t1 - t0) / n as f64;
            let f = |i: usize| spline.velocity(t0 + h * i as f64).norm();
            let mut sum = f(0) + f(n);
            for i in 1..n {
                sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i);
            }
            sum * h / 3.0
        })
        .sum()
}

#[test]
fn trial_invariants_hold_for_every_strategy() {
    for (i, &strategy) in StrategyKind::ALL.iter().enumerate() {
        let out = trial(i as u64, 0.3, strategy);
        let r = &out.result;

        let counts: Vec<usize> = out.transcript.iter().map(|c| c.observed_voxels).collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{strategy}");

        let integral = speed_integral(&out);
        assert!(
            (r.path_length - integral).abs() <= 0.01 * integral.max(1e-9),
            "{strategy}: {} vs {integral}",
            r.path_length
        );

        assert_eq!(r.collisions, 0, "{strategy}");
        assert_eq!(r.unknown_traversals, 0, "{strategy}");
        assert!(
            r.min_clearance >= TrialConfig::default().body_radius,
            "{strategy}"
        );
        if r.success {
            assert!(r.final_distance <= TrialConfig::default().goal_tolerance);
        }
        assert_eq!(r.replans, out.transcript.len());
    }
}

#[test]
fn fixed_seed_reproduces_result_and_transcript() {
    for strategy in [
        StrategyKind::Proposed,
        StrategyKind::RrtOptimistic,
        StrategyKind::Nbvp,
    ] {
        let a = trial(11, 0.4, strategy);
        let b = trial(11, 0.4, strategy);
        assert_eq!(a.result.without_timings(), b.result.without_timings());
        assert_eq!(a.path, b.path);
        assert_eq!(a.transcript.len(), b.transcript.len());
        for (x, y) in a.transcript.iter().zip(&b.transcript) {
            let (mut x, mut y) = (x.clone(), y.clone());
            x.timings = Default::default();
            y.timings = Default::default();
            assert_eq!(x, y);
        }
    }
}

#[test]
fn forest_layout_respects_the_scenario() {
    for (spec, density) in [(ForestSpec::small(), 0.5), (ForestSpec::long(), 0.2)] {
        for seed in 0..5 {
            let w = generate_forest(&spec, density, seed).unwrap();
            assert_eq!(
                w.cylinders.len(),
                (density * spec.region_area()).round() as usize
            );
            for c in &w.cylinders {
                assert!(c.center.x >= spec.region_min[0] && c.center.x <= spec.region_max[0]);
                assert!(c.center.y >= spec.region_min[1] && c.center.y <= spec.region_max[1]);
            }
            for p in [w.start(), w.goal()] {
                assert!(w.distance(&p, 10.0) > 0.0);
                for c in &w.cylinders {
                    let planar = (c.center - p.xy()).norm() - c.radius;
                    assert!(planar >= spec.clear_disc - 1e-9);
                }
            }
        }
    }
}

#[test]
fn plain_optimization_often_fails_in_clutter() {
    let run = |strategy| {
        (0..8)
            .filter(|&seed| {
                run_trial(&TrialConfig {
                    seed,
                    density: 0.3,
                    strategy,
                    max_replans: 60,
                    ..Default::default()
                })
                .unwrap()
                .result
                .success
            })
            .count()
    };
    let none = run(StrategyKind::None);
    let proposed = run(StrategyKind::Proposed);
    assert!(none < proposed, "none {none}, proposed {proposed}");
}
