use nalgebra::{DMatrix, DVector, RowDVector, Vector3};
use serde::{Deserialize, Serialize};

use super::{CollisionPotential, PlanningContext, TrajOptError};
use crate::poly_spline::{
    allocate_segment_times, DerivativeCostMatrices, PolynomialSpline, SampleBasis, SplineLayout,
};
use crate::voxel_map::{QueryLayer, VoxelMap};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub derivative: f64,
    pub collision: f64,
    pub goal: f64,
    /// Weighted sum.
    pub total: f64,
}

/// The optimization problem for one planning cycle: a spline layout with
/// times from the straight line to `goal`, the fixed boundary derivatives
/// and precomputed linear maps from the free derivatives to sampled
/// positions and velocities. Free and fixed derivatives are matrices with
/// one column per spatial dimension.
pub struct TrajectoryProblem<'a> {
    map: &'a VoxelMap,
    layout: SplineLayout,
    cost: DerivativeCostMatrices,
    basis: SampleBasis,
    end_fixed: RowDVector<f64>,
    end_free: RowDVector<f64>,
    fixed: DMatrix<f64>,
    goal: Vector3<f64>,
    potential: CollisionPotential,
    weights: [f64; 3],
    dt: f64,
}

impl<'a> TrajectoryProblem<'a> {
    pub fn new(
        context: &PlanningContext,
        map: &'a VoxelMap,
        goal: Vector3<f64>,
    ) -> Result<Self, TrajOptError> {
        let p = &context.params;
        let start = context.start.position;
        let s = p.segments.max(1);
        let waypoints: Vec<DVector<f64>> = (0..=s)
            .map(|i| {
                DVector::from_column_slice(
                    (start + (goal - start) * (i as f64 / s as f64)).as_slice(),
                )
            })
            .collect();
        let durations = allocate_segment_times(&waypoints, p.v_max, p.a_max);
        let layout = SplineLayout::new(p.order, durations, p.soft_goal)?;
        let cost = DerivativeCostMatrices::build(&layout, p.cost_derivative)?;
        let basis = layout.sample_basis(p.dt, 1);

        let mut nodes = DMatrix::zeros(layout.node_len(), 3);
        let end = layout.segments();
        for k in 0..3 {
            nodes[(layout.node_index(0, 0), k)] = start[k];
            nodes[(layout.node_index(0, 1), k)] = context.start.velocity[k];
            nodes[(layout.node_index(0, 2), k)] = context.start.acceleration[k];
            nodes[(layout.node_index(end, 0), k)] = goal[k];
        }
        let (fixed, _) = layout.split(&nodes);
        let end_row = layout.basis_row(layout.total_duration(), 0)?;
        let end_fixed = end_row.select_columns(layout.fixed_indices());
        let end_free = end_row.select_columns(layout.free_indices());
        Ok(Self {
            map,
            layout,
            cost,
            basis,
            end_fixed,
            end_free,
            fixed,
            goal,
            potential: CollisionPotential {
                margin: p.margin,
                robot_radius: p.robot_radius,
            },
            weights: [p.w_d, p.w_c, p.w_g],
            dt: p.dt,
        })
    }

    pub fn layout(&self) -> &SplineLayout {
        &self.layout
    }

    pub fn fixed(&self) -> &DMatrix<f64> {
        &self.fixed
    }

    pub fn goal(&self) -> Vector3<f64> {
        self.goal
    }

    pub fn robot_radius(&self) -> f64 {
        self.potential.robot_radius
    }

    /// Straight-line initialization: interior node positions evenly spaced
    /// on the line, end position at the goal, and every other free
    /// derivative chosen to minimize `J_d` given those positions.
    pub fn initial_free(&self) -> DMatrix<f64> {
        let l = &self.layout;
        let start = self.fixed.row(0).transpose();
        let s = l.segments();
        let mut nodes = l
            .join(&self.fixed, &DMatrix::zeros(l.num_free(), 3))
            .expect("shapes agree");
        for node in 1..=s {
            let t = node as f64 / s as f64;
            for k in 0..3 {
                nodes[(l.node_index(node, 0), k)] = start[k] + (self.goal[k] - start[k]) * t;
            }
        }
        let (_, mut free) = l.split(&nodes);
        let pinned: Vec<bool> = l
            .free_indices()
            .iter()
            .map(|&i| i % l.derivs_per_node() == 0)
            .collect();
        let rest: Vec<usize> = (0..pinned.len()).filter(|&i| !pinned[i]).collect();
        let held: Vec<usize> = (0..pinned.len()).filter(|&i| pinned[i]).collect();
        if rest.is_empty() {
            return free;
        }
        let r_rr = self.cost.r_pp.select_rows(&rest).select_columns(&rest);
        let r_rh = self.cost.r_pp.select_rows(&rest).select_columns(&held);
        let r_rf = self.cost.r_pf.select_rows(&rest);
        let rhs = -(r_rf * &self.fixed + r_rh * free.select_rows(&held));
        let solved = match r_rr.clone().cholesky() {
            Some(c) => c.solve(&rhs),
            None => r_rr
                .lu()
                .solve(&rhs)
                .unwrap_or_else(|| DMatrix::zeros(rest.len(), 3)),
        };
        for (r, &i) in rest.iter().enumerate() {
            free.set_row(i, &solved.row(r));
        }
        free
    }

    pub fn derivative_cost_and_gradient(&self, free: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        self.cost.cost_and_gradient(&self.fixed, free)
    }

    /// Collision line integral `Σ c(f(t)) |v(t)| Δt` over the samples and
    /// its gradient with respect to the free derivatives.
    pub fn collision_cost_and_gradient(&self, free: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let pos = self.basis.eval(0, &self.fixed, free);
        let vel = self.basis.eval(1, &self.fixed, free);
        let n = pos.nrows();
        let mut w_pos = DMatrix::zeros(n, 3);
        let mut w_vel = DMatrix::zeros(n, 3);
        let mut total = 0.0;
        for i in 0..n {
            let x = Vector3::new(pos[(i, 0)], pos[(i, 1)], pos[(i, 2)]);
            let v = Vector3::new(vel[(i, 0)], vel[(i, 1)], vel[(i, 2)]);
            let q = self.map.query(&x, QueryLayer::Esdf);
            let (c, dc) = self.potential.eval(q.distance);
            if c == 0.0 && dc == 0.0 {
                continue;
            }
            let speed = v.norm();
            total += c * speed * self.dt;
            let gp = q.gradient * (dc * speed * self.dt);
            for k in 0..3 {
                w_pos[(i, k)] = gp[k];
            }
            if speed > 0.0 {
                let gv = v * (c * self.dt / speed);
                for k in 0..3 {
                    w_vel[(i, k)] = gv[k];
                }
            }
        }
        let grad = self.basis.free[0].tr_mul(&w_pos) + self.basis.free[1].tr_mul(&w_vel);
        (total, grad)
    }

    pub fn end_position(&self, free: &DMatrix<f64>) -> Vector3<f64> {
        let e = &self.end_fixed * &self.fixed + &self.end_free * free;
        Vector3::new(e[0], e[1], e[2])
    }

    /// `|f(t_end) - g|` and its gradient; the subgradient at the goal is 0.
    pub fn goal_cost_and_gradient(&self, free: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let err = self.end_position(free) - self.goal;
        let norm = err.norm();
        let mut grad = DMatrix::zeros(free.nrows(), 3);
        if norm > 0.0 {
            let u = err / norm;
            let u = RowDVector::from_row_slice(u.as_slice());
            grad = self.end_free.transpose() * u;
        }
        (norm, grad)
    }

    /// Weighted total cost and gradient.
    pub fn evaluate(&self, free: &DMatrix<f64>) -> (CostBreakdown, DMatrix<f64>) {
        let (jd, gd) = self.derivative_cost_and_gradient(free);
        let (jc, gc) = self.collision_cost_and_gradient(free);
        let (jg, gg) = self.goal_cost_and_gradient(free);
        let [wd, wc, wg] = self.weights;
        let costs = CostBreakdown {
            derivative: jd,
            collision: jc,
            goal: jg,
            total: wd * jd + wc * jc + wg * jg,
        };
        (costs, gd * wd + gc * wc + gg * wg)
    }

    pub fn total_cost(&self, free: &DMatrix<f64>) -> f64 {
        self.evaluate(free).0.total
    }

    pub(crate) fn derivative_hessian(&self) -> DMatrix<f64> {
        &self.cost.r_pp * (2.0 * self.weights[0])
    }

    pub fn spline(&self, free: &DMatrix<f64>) -> PolynomialSpline {
        self.layout.spline(&self.fixed, free).expect("valid layout")
    }

    /// Smallest conservative clearance over samples every `dt / 5`, and
    /// whether every sample lies in a voxel known in the distance field.
    pub fn clearance(&self, spline: &PolynomialSpline) -> (f64, bool) {
        let total = spline.duration();
        let step = self.dt / 5.0;
        let n = (total / step).ceil() as usize;
        let mut min = f64::INFINITY;
        let mut known = true;
        for i in 0..=n {
            let p = spline.position((i as f64 * step).min(total));
            min = min.min(self.map.distance(&p));
            known &= self.map.esdf_known(&p);
        }
        (min, known)
    }
}
