use nalgebra::DMatrix;

use super::mapping::{falling, unit_inverse};
use super::{SplineError, SplineLayout};

/// The integrated squared derivative cost as a quadratic form in the node
/// derivatives, partitioned into fixed (F) and free (P) blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeCostMatrices {
    pub derivative: usize,
    pub r_ff: DMatrix<f64>,
    pub r_fp: DMatrix<f64>,
    pub r_pf: DMatrix<f64>,
    pub r_pp: DMatrix<f64>,
}

/// `Q[i][j] = ∫_0^1 d^k/dt^k t^i · d^k/dt^k t^j dt`.
fn unit_hessian(order: usize, k: usize) -> DMatrix<f64> {
    let n = order + 1;
    DMatrix::from_fn(n, n, |i, j| {
        if i < k || j < k {
            0.0
        } else {
            falling(i, k) * falling(j, k) / (i + j + 1 - 2 * k) as f64
        }
    })
}

impl DerivativeCostMatrices {
    /// Cost matrix over the full node vector, before partitioning.
    pub fn full(layout: &SplineLayout, derivative: usize) -> Result<DMatrix<f64>, SplineError> {
        let max = layout.derivs_per_node() - 1;
        if derivative > max {
            return Err(SplineError::DerivativeOrder {
                order: derivative,
                max,
            });
        }
        let order = layout.order();
        let h = layout.derivs_per_node();
        let a1_inv = unit_inverse(order)?;
        let inner = a1_inv.transpose() * unit_hessian(order, derivative) * &a1_inv;
        let mut r = DMatrix::zeros(layout.node_len(), layout.node_len());
        for (s, &t) in layout.durations().iter().enumerate() {
            // Node derivatives of order k scale by T^k in unit time.
            let scale: Vec<f64> = (0..2 * h).map(|i| t.powi((i % h) as i32)).collect();
            let factor = t.powi(1 - 2 * derivative as i32);
            let seg = DMatrix::from_fn(2 * h, 2 * h, |i, j| {
                factor * scale[i] * inner[(i, j)] * scale[j]
            });
            let mut block = r.view_mut((s * h, s * h), (2 * h, 2 * h));
            block += seg;
        }
        // Symmetrize away rounding.
        Ok((&r + r.transpose()) * 0.5)
    }

    pub fn build(layout: &SplineLayout, derivative: usize) -> Result<Self, SplineError> {
        let r = Self::full(layout, derivative)?;
        let (fi, pi) = (layout.fixed_indices(), layout.free_indices());
        let rf = r.select_rows(fi);
        let rp = r.select_rows(pi);
        Ok(Self {
            derivative,
            r_ff: rf.select_columns(fi),
            r_fp: rf.select_columns(pi),
            r_pf: rp.select_columns(fi),
            r_pp: rp.select_columns(pi),
        })
    }

    /// `J_d` summed over dimensions (columns of `fixed` and `free`).
    pub fn cost(&self, fixed: &DMatrix<f64>, free: &DMatrix<f64>) -> f64 {
        let rf = &self.r_ff * fixed + &self.r_fp * free;
        let rp = &self.r_pf * fixed + &self.r_pp * free;
        fixed.dot(&rf) + free.dot(&rp)
    }

    /// `J_d` and its gradient `2 (R_PF F + R_PP P)` with respect to the free
    /// derivatives.
    pub fn cost_and_gradient(
        &self,
        fixed: &DMatrix<f64>,
        free: &DMatrix<f64>,
    ) -> (f64, DMatrix<f64>) {
        let rf = &self.r_ff * fixed + &self.r_fp * free;
        let rp = &self.r_pf * fixed + &self.r_pp * free;
        let cost = fixed.dot(&rf) + free.dot(&rp);
        (cost.max(0.0), rp * 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Oracle: composite 5-point Gauss-Legendre quadrature of the squared
    /// derivative of the reconstructed spline.
    fn quadrature_cost(layout: &SplineLayout, f: &DMatrix<f64>, p: &DMatrix<f64>, k: usize) -> f64 {
        let spline = layout.spline(f, p).unwrap();
        let nodes = [
            (-0.906_179_845_938_664, 0.236_926_885_056_189),
            (-0.538_469_310_105_683, 0.478_628_670_499_366),
            (0.0, 0.568_888_888_888_889),
            (0.538_469_310_105_683, 0.478_628_670_499_366),
            (0.906_179_845_938_664, 0.236_926_885_056_189),
        ];
        let mut total = 0.0;
        let mut start = 0.0;
        for &d in layout.durations() {
            let pieces = 16;
            for q in 0..pieces {
                let a = start + d * q as f64 / pieces as f64;
                let b = a + d / pieces as f64;
                for (x, w) in nodes {
                    let t = 0.5 * (a + b) + 0.5 * (b - a) * x;
                    let v = spline.evaluate(t, k).unwrap();
                    total += 0.5 * (b - a) * w * v.norm_squared();
                }
            }
            start += d;
        }
        total
    }

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let layout = SplineLayout::new(9, vec![0.8, 1.7, 1.2], true).unwrap();
        for k in [2, 3, 4] {
            let c = DerivativeCostMatrices::build(&layout, k).unwrap();
            let f = random(layout.num_fixed(), 3, &mut rng);
            let p = random(layout.num_free(), 3, &mut rng);
            let exact = quadrature_cost(&layout, &f, &p, k);
            let got = c.cost(&f, &p);
            assert!(
                (got - exact).abs() < 1e-6 * exact,
                "k={k}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn symmetric_psd() {
        let layout = SplineLayout::new(9, vec![1.3, 0.4, 2.2], false).unwrap();
        let r = DerivativeCostMatrices::full(&layout, 3).unwrap();
        assert_eq!(r, r.transpose());
        let eig = r.symmetric_eigenvalues();
        let max = eig.amax();
        assert!(eig.iter().all(|&e| e > -1e-9 * max));
        let c = DerivativeCostMatrices::build(&layout, 3).unwrap();
        assert_eq!(c.r_pf, c.r_fp.transpose());
    }

    #[test]
    fn zero_for_constant_velocity_line() {
        let layout = SplineLayout::new(9, vec![1.0, 1.0, 1.0], false).unwrap();
        let mut nodes = DMatrix::zeros(layout.node_len(), 3);
        for node in 0..4 {
            nodes[(layout.node_index(node, 0), 0)] = node as f64;
            nodes[(layout.node_index(node, 1), 0)] = 1.0;
        }
        let (f, p) = layout.split(&nodes);
        let c = DerivativeCostMatrices::build(&layout, 3).unwrap();
        assert!(c.cost(&f, &p).abs() < 1e-9);
    }

    #[test]
    fn homogeneous_of_degree_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let layout = SplineLayout::new(9, vec![1.0, 2.0, 1.5], true).unwrap();
        let c = DerivativeCostMatrices::build(&layout, 3).unwrap();
        let f = DMatrix::zeros(layout.num_fixed(), 3);
        let p = random(layout.num_free(), 3, &mut rng);
        let j1 = c.cost(&f, &p);
        let j2 = c.cost(&f, &(&p * 2.0));
        assert!((j2 - 4.0 * j1).abs() < 1e-9 * j2);
    }

    #[test]
    fn rejects_high_derivative() {
        let layout = SplineLayout::new(9, vec![1.0], false).unwrap();
        assert!(DerivativeCostMatrices::build(&layout, 5).is_err());
    }
}
