use nalgebra::{DMatrix, RowDVector};

use super::mapping::{derivative_row, unit_inverse};
use super::{PolynomialSegment, PolynomialSpline, SplineError};

/// Segment index and local time for `t`; a junction belongs to the later
/// segment and the final instant to the last segment.
pub(crate) fn locate(durations: &[f64], t: f64) -> Result<(usize, f64), SplineError> {
    let total: f64 = durations.iter().sum();
    if !(t >= -1e-12 && t <= total + 1e-9) {
        return Err(SplineError::OutOfRange { t, total });
    }
    let mut start = 0.0;
    for (s, d) in durations.iter().enumerate() {
        if t < start + d || s + 1 == durations.len() {
            return Ok((s, (t - start).clamp(0.0, *d)));
        }
        start += d;
    }
    unreachable!("durations are non-empty")
}

/// Node layout of a spline with given segment times: which node derivatives
/// are boundary conditions and which are free.
///
/// Node vectors hold `derivs_per_node` entries per node, nodes in order.
/// Fixed: all start derivatives (position, velocity, acceleration, and the
/// higher ones, which callers set to zero), end velocity and acceleration,
/// and the end position unless the goal is soft. Everything else is free.
#[derive(Debug, Clone)]
pub struct SplineLayout {
    order: usize,
    durations: Vec<f64>,
    soft_goal: bool,
    fixed: Vec<usize>,
    free: Vec<usize>,
    /// `A^-1` per segment.
    inverses: Vec<DMatrix<f64>>,
}

impl SplineLayout {
    pub fn new(order: usize, durations: Vec<f64>, soft_goal: bool) -> Result<Self, SplineError> {
        if durations.is_empty() {
            return Err(SplineError::Empty);
        }
        let unit_inv = unit_inverse(order)?;
        let h = order.div_ceil(2);
        let mut inverses = Vec::with_capacity(durations.len());
        for &t in &durations {
            if !(t > 1e-9) || !t.is_finite() {
                return Err(SplineError::DegenerateSegment(t));
            }
            let n = order + 1;
            let tk: Vec<f64> = (0..n).map(|r| t.powi((r % h) as i32)).collect();
            let tj: Vec<f64> = (0..n).map(|j| t.powi(j as i32)).collect();
            inverses.push(DMatrix::from_fn(n, n, |r, c| {
                unit_inv[(r, c)] * tk[c] / tj[r]
            }));
        }
        let end = durations.len() * h;
        let node_len = end + h;
        let is_fixed = |i: usize| i < h || i == end + 1 || i == end + 2 || (i == end && !soft_goal);
        let fixed = (0..node_len).filter(|&i| is_fixed(i)).collect();
        let free = (0..node_len).filter(|&i| !is_fixed(i)).collect();
        Ok(Self {
            order,
            durations,
            soft_goal,
            fixed,
            free,
            inverses,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn segments(&self) -> usize {
        self.durations.len()
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn total_duration(&self) -> f64 {
        self.durations.iter().sum()
    }

    pub fn soft_goal(&self) -> bool {
        self.soft_goal
    }

    /// Derivatives stored per node, `(order + 1) / 2`.
    pub fn derivs_per_node(&self) -> usize {
        self.order.div_ceil(2)
    }

    pub fn node_len(&self) -> usize {
        (self.segments() + 1) * self.derivs_per_node()
    }

    /// Index into the node vector of derivative `k` at node `node`.
    pub fn node_index(&self, node: usize, k: usize) -> usize {
        node * self.derivs_per_node() + k
    }

    pub fn fixed_indices(&self) -> &[usize] {
        &self.fixed
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    pub fn num_fixed(&self) -> usize {
        self.fixed.len()
    }

    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    /// Position of a node-vector index within the free vector, if free.
    pub fn free_position(&self, index: usize) -> Option<usize> {
        self.free.iter().position(|&i| i == index)
    }

    /// Position of a node-vector index within the fixed vector, if fixed.
    pub fn fixed_position(&self, index: usize) -> Option<usize> {
        self.fixed.iter().position(|&i| i == index)
    }

    /// Splits node derivatives (`node_len` rows, one column per dimension)
    /// into fixed and free parts.
    pub fn split(&self, nodes: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        (
            nodes.select_rows(&self.fixed),
            nodes.select_rows(&self.free),
        )
    }

    pub fn join(
        &self,
        fixed: &DMatrix<f64>,
        free: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>, SplineError> {
        let k = fixed.ncols();
        if fixed.nrows() != self.fixed.len() || free.nrows() != self.free.len() || free.ncols() != k
        {
            return Err(SplineError::Shape(format!(
                "expected {}x{k} fixed and {}x{k} free, got {}x{} and {}x{}",
                self.fixed.len(),
                self.free.len(),
                fixed.nrows(),
                fixed.ncols(),
                free.nrows(),
                free.ncols()
            )));
        }
        let mut nodes = DMatrix::zeros(self.node_len(), k);
        for (r, &i) in self.fixed.iter().enumerate() {
            nodes.set_row(i, &fixed.row(r));
        }
        for (r, &i) in self.free.iter().enumerate() {
            nodes.set_row(i, &free.row(r));
        }
        Ok(nodes)
    }

    /// Reconstructs segment coefficients, `p = A^-1 d` per segment.
    pub fn spline(
        &self,
        fixed: &DMatrix<f64>,
        free: &DMatrix<f64>,
    ) -> Result<PolynomialSpline, SplineError> {
        let nodes = self.join(fixed, free)?;
        let h = self.derivs_per_node();
        let segments = self
            .inverses
            .iter()
            .zip(&self.durations)
            .enumerate()
            .map(|(s, (inv, &duration))| {
                let d = nodes.rows(s * h, 2 * h);
                let coefficients = inv * d;
                PolynomialSegment::new(coefficients.transpose(), duration)
            })
            .collect::<Result<Vec<_>, _>>()?;
        PolynomialSpline::new(segments)
    }

    /// Row over the full node vector giving derivative `k` at time `t`.
    pub fn basis_row(&self, t: f64, k: usize) -> Result<RowDVector<f64>, SplineError> {
        let (s, local) = locate(&self.durations, t)?;
        let h = self.derivs_per_node();
        let seg_row = derivative_row(self.order, local, k) * &self.inverses[s];
        let mut row = RowDVector::zeros(self.node_len());
        row.columns_mut(s * h, 2 * h).copy_from(&seg_row);
        Ok(row)
    }

    /// Linear maps from (fixed, free) to derivatives `0..=max_k` at the
    /// sample times `0, dt, 2 dt, ...` up to the total duration.
    pub fn sample_basis(&self, dt: f64, max_k: usize) -> SampleBasis {
        let total = self.total_duration();
        let n = (total / dt + 1e-9).floor() as usize + 1;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let mut fixed = Vec::with_capacity(max_k + 1);
        let mut free = Vec::with_capacity(max_k + 1);
        for k in 0..=max_k {
            let mut full = DMatrix::zeros(n, self.node_len());
            for (i, &t) in times.iter().enumerate() {
                full.set_row(i, &self.basis_row(t, k).expect("sample inside duration"));
            }
            fixed.push(full.select_columns(&self.fixed));
            free.push(full.select_columns(&self.free));
        }
        SampleBasis { times, fixed, free }
    }
}

/// Precomputed sampling matrices; row `i` of derivative `k` evaluates
/// `f^(k)(times[i])` as `fixed[k].row(i) * F + free[k].row(i) * P`.
#[derive(Debug, Clone)]
pub struct SampleBasis {
    pub times: Vec<f64>,
    pub fixed: Vec<DMatrix<f64>>,
    pub free: Vec<DMatrix<f64>>,
}

impl SampleBasis {
    /// Derivative `k` at all sample times, one row per sample.
    pub fn eval(&self, k: usize, fixed: &DMatrix<f64>, free: &DMatrix<f64>) -> DMatrix<f64> {
        &self.fixed[k] * fixed + &self.free[k] * free
    }
}
