mod common;

use common::{esdf_instance, gradient_instance};

#[test]
fn cost_gradients_match_central_differences() {
    let mut with_collision = 0;
    for seed in 0..30 {
        let e = gradient_instance(seed);
        assert!(e.derivative < 1e-5, "seed {seed}: J_d {e:?}");
        assert!(e.goal < 1e-5, "seed {seed}: J_g {e:?}");
        assert!(e.collision < 1e-4, "seed {seed}: J_c {e:?}");
        with_collision += usize::from(e.collision_cost > 0.0);
    }
    assert!(
        with_collision >= 25,
        "only {with_collision} instances touch an obstacle"
    );
}

#[test]
fn wavefront_esdf_matches_brute_force() {
    let bound = 0.2 * 3f64.sqrt();
    for seed in 0..8 {
        let c = esdf_instance(seed);
        assert_eq!(c.misclassified, 0, "seed {seed}");
        assert!(c.max_error <= bound, "seed {seed}: {c:?}");
    }
}
