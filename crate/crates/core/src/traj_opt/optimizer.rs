use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use super::{CostBreakdown, PlanningContext, TrajOptError, TrajectoryProblem};
use crate::poly_spline::PolynomialSpline;
use crate::voxel_map::VoxelMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerParams {
    pub max_iterations: usize,
    /// Sufficient-decrease constant of the Armijo condition.
    pub armijo: f64,
    /// Step shrink factor per backtracking step.
    pub shrink: f64,
    pub max_backtracks: usize,
    /// Stop when the relative cost decrease of an iteration falls below this.
    pub relative_tolerance: f64,
    /// Descend along `-M^-1 ∇J` with `M` the Hessian of the weighted
    /// derivative cost instead of along `-∇J`.
    pub preconditioned: bool,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 30,
            relative_tolerance: 1e-4,
            preconditioned: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationOutcome {
    pub trajectory: PolynomialSpline,
    /// Every sample keeps at least the robot radius of conservative
    /// clearance and lies in known space.
    pub feasible: bool,
    pub costs: CostBreakdown,
    pub iterations: usize,
    pub min_clearance: f64,
    /// Total cost after initialization and after each accepted step.
    pub cost_history: Vec<f64>,
    pub goal: Vector3<f64>,
}

/// Minimizes the compound cost over the free derivatives by gradient
/// descent with Armijo backtracking, starting from the straight line to
/// `goal`. Deterministic for fixed inputs.
pub fn optimize(
    context: &PlanningContext,
    map: &VoxelMap,
    goal: Vector3<f64>,
) -> Result<OptimizationOutcome, TrajOptError> {
    let params = &context.params;
    let clearance = map.distance(&context.start.position);
    if clearance < params.robot_radius {
        return Err(TrajOptError::StartInCollision { clearance });
    }
    let problem = TrajectoryProblem::new(context, map, goal)?;
    let opt = &params.optimizer;

    let metric = if opt.preconditioned {
        let mut m = problem.derivative_hessian();
        let scale = m.diagonal().amax().max(1e-12);
        for i in 0..m.nrows() {
            m[(i, i)] += 1e-9 * scale;
        }
        m.cholesky()
    } else {
        None
    };

    let mut free = problem.initial_free();
    let (mut costs, mut grad) = problem.evaluate(&free);
    let mut history = vec![costs.total];
    let mut iterations = 0;
    for _ in 0..opt.max_iterations {
        let direction: DMatrix<f64> = match &metric {
            Some(c) => -c.solve(&grad),
            None => -&grad,
        };
        let slope = grad.dot(&direction);
        if !(slope < 0.0) {
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=opt.max_backtracks {
            let trial = &free + &direction * alpha;
            let (c, g) = problem.evaluate(&trial);
            if c.total <= costs.total + opt.armijo * alpha * slope {
                accepted = Some((trial, c, g));
                break;
            }
            alpha *= opt.shrink;
        }
        let Some((trial, c, g)) = accepted else {
            break;
        };
        let previous = costs.total;
        free = trial;
        costs = c;
        grad = g;
        iterations += 1;
        history.push(costs.total);
        if (previous - costs.total) <= opt.relative_tolerance * previous.abs().max(1e-12) {
            break;
        }
    }

    let trajectory = problem.spline(&free);
    let (min_clearance, known) = problem.clearance(&trajectory);
    Ok(OptimizationOutcome {
        feasible: known && min_clearance >= params.robot_radius,
        trajectory,
        costs,
        iterations,
        min_clearance,
        cost_history: history,
        goal,
    })
}
