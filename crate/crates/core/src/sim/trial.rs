use std::io::Write;
use std::time::Instant;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{generate_forest, simulate_sensor, ForestSpec, SimError, WorldModel};
use crate::camera::CameraModel;
use crate::goal_selection::{
    nbvp_select, rrt_star_plan, select_intermediate_goal, select_random_goal, ExplorationParams,
    ExplorationSelection, NbvpParams, RrtParams, StrategyKind,
};
use crate::poly_spline::PolynomialSpline;
use crate::traj_opt::{
    adjust_goal_gradient, adjust_goal_straight_line, optimize, project_goal, velocity_tracking_yaw,
    CostBreakdown, GoalAdjustment, PlannerParams, PlanningContext, StartState, TrajOptError,
};
use crate::voxel_map::{MapConfig, UnknownSpacePolicy, VoxelMap};

/// Everything that determines a trial. Serialized as the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub seed: u64,
    /// Cylinders per square meter of obstacle region.
    pub density: f64,
    pub strategy: StrategyKind,
    pub max_replans: usize,
    /// Seconds of trajectory executed per cycle.
    pub replan_period: f64,
    pub goal_tolerance: f64,
    pub world: ForestSpec,
    pub camera: CameraModel,
    pub map: MapConfig,
    pub planner: PlannerParams,
    pub goal_adjustment: GoalAdjustment,
    /// Unknown space within this radius of the start is treated as free.
    pub clear_radius: f64,
    /// Unknown space within this radius of the vehicle is an obstacle.
    pub occupied_radius: f64,
    /// Physical radius checked against the ground truth.
    pub body_radius: f64,
    /// A feasible cycle that brings the vehicle less than this much closer
    /// to its target counts as stuck.
    pub min_progress: f64,
    /// Sphere radius of the random strategy.
    pub random_radius: f64,
    pub exploration: ExplorationParams,
    pub rrt: RrtParams,
    pub nbvp: NbvpParams,
    /// Time step of the executed-path audit and length integral.
    pub audit_step: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            density: 0.2,
            strategy: StrategyKind::Proposed,
            max_replans: 120,
            replan_period: 1.0,
            goal_tolerance: 0.5,
            world: ForestSpec::small(),
            camera: CameraModel::default(),
            map: MapConfig::default(),
            planner: PlannerParams::default(),
            goal_adjustment: GoalAdjustment::Gradient,
            clear_radius: 1.0,
            occupied_radius: 5.0,
            body_radius: 0.2,
            min_progress: 0.2,
            random_radius: 3.0,
            exploration: ExplorationParams::default(),
            rrt: RrtParams::default(),
            nbvp: NbvpParams::default(),
            audit_step: 0.01,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.world.validate()?;
        self.camera
            .validate()
            .map_err(|e| SimError::Config(e.to_string()))?;
        let p = &self.planner;
        let checks = [
            (self.replan_period > 0.0, "replan period must be positive"),
            (self.goal_tolerance > 0.0, "goal tolerance must be positive"),
            (p.horizon > 0.0, "planning horizon must be positive"),
            (
                self.clear_radius < self.occupied_radius,
                "clearing radius must be below occupancy radius",
            ),
            (
                self.occupied_radius >= p.horizon,
                "occupancy radius must cover the planning horizon",
            ),
            (
                self.body_radius > 0.0 && self.body_radius <= p.robot_radius,
                "body radius must be positive and at most the planning radius",
            ),
            (
                self.random_radius > 0.0,
                "random goal radius must be positive",
            ),
            (self.audit_step > 0.0, "audit step must be positive"),
            (
                self.exploration.subsample > 0.0 && self.exploration.subsample <= 1.0,
                "subsample fraction must be in (0, 1]",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(SimError::Config(msg.into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Success,
    MaxReplans,
    StrategyFailure,
    /// The executed path touched an obstacle or unknown space. Never
    /// expected; reported separately from planner failures.
    AuditFailure,
}

/// Flat per-trial summary, one CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
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
    /// Smallest ground-truth clearance along the executed path.
    pub min_clearance: f64,
    pub collisions: usize,
    pub unknown_traversals: usize,
    pub tsdf_ms: f64,
    pub esdf_ms: f64,
    pub optimization_ms: f64,
    /// Mean over cycles that ran a goal selection.
    pub selection_ms: f64,
}

impl TrialResult {
    /// Copy with the wall-clock columns zeroed.
    pub fn without_timings(&self) -> Self {
        Self {
            tsdf_ms: 0.0,
            esdf_ms: 0.0,
            optimization_ms: 0.0,
            selection_ms: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub tsdf_ms: f64,
    pub esdf_ms: f64,
    pub optimization_ms: f64,
    pub selection_ms: Option<f64>,
}

impl PhaseTimings {
    pub fn total_ms(&self) -> f64 {
        self.tsdf_ms + self.esdf_ms + self.optimization_ms + self.selection_ms.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectionLog {
    ReturnToGoal,
    Random {
        point: Vector3<f64>,
    },
    Rrt {
        reached_goal: bool,
        waypoints: Vec<Vector3<f64>>,
        first: Vector3<f64>,
    },
    Nbvp {
        position: Vector3<f64>,
        yaw: f64,
        best_node: usize,
        best_value: f64,
        gains: Vec<usize>,
    },
    Proposed(ExplorationSelection),
    Failed {
        error: String,
        fallback: Option<Box<SelectionLog>>,
    },
}

/// One line of the trial transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub position: Vector3<f64>,
    pub yaw: f64,
    pub target: Vector3<f64>,
    pub intermediate: bool,
    pub projected_goal: Vector3<f64>,
    pub adjusted_goal: Option<Vector3<f64>>,
    pub feasible: bool,
    pub stuck: bool,
    pub progress: f64,
    pub costs: Option<CostBreakdown>,
    pub iterations: usize,
    pub plan_clearance: Option<f64>,
    pub observed_voxels: usize,
    pub executed_length: f64,
    pub selection: Option<SelectionLog>,
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub result: TrialResult,
    pub transcript: Vec<CycleRecord>,
    /// Executed positions every `replan_period / 10` seconds.
    pub path: Vec<Vector3<f64>>,
    pub intermediate_goals: Vec<Vector3<f64>>,
    /// Trajectory pieces in execution order: spline and time window.
    pub executed: Vec<(PolynomialSpline, f64, f64)>,
    pub world: WorldModel,
}

#[derive(Debug, Clone, Copy)]
struct Intermediate {
    point: Vector3<f64>,
    yaw: Option<f64>,
}

struct Execution {
    spline: PolynomialSpline,
    t: f64,
}

/// Runs one forest trial: sense, map, plan and execute at the replanning
/// rate until the goal is reached or the replan budget is spent.
pub fn run_trial(config: &TrialConfig) -> Result<TrialOutcome, SimError> {
    config.validate()?;
    let world = generate_forest(&config.world, config.density, config.seed)?;
    let mut map = VoxelMap::new(config.map)?;
    let start = world.start();
    let goal = world.goal();
    let policy = UnknownSpacePolicy::new(config.clear_radius, config.occupied_radius, start)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let mut state = StartState::at_rest(start);
    let mut yaw = (goal.y - start.y).atan2(goal.x - start.x);
    let mut active: Option<Execution> = None;
    let mut intermediate: Option<Intermediate> = None;
    let mut random_pending = false;

    let mut transcript = Vec::new();
    let mut path = vec![start];
    let mut intermediate_goals = Vec::new();
    let mut executed = Vec::new();
    let mut path_length = 0.0;
    let mut min_clearance = world.distance(&start, f64::INFINITY);
    let mut collisions = 0;
    let mut unknown_traversals = 0;
    let mut stuck_events = 0;
    let mut selections = 0;
    let mut sums = PhaseTimings::default();
    let mut selection_sum = 0.0;
    let mut status = TrialStatus::MaxReplans;
    let mut cycles = 0;

    for cycle in 0..config.max_replans {
        if (state.position - goal).norm() <= config.goal_tolerance {
            status = TrialStatus::Success;
            break;
        }
        cycles += 1;
        let mut timings = PhaseTimings::default();

        let depth = simulate_sensor(&world, &state.position, yaw, &config.camera)?;
        let clock = Instant::now();
        map.integrate_depth_image(
            &config.camera.pose(&state.position, yaw),
            &depth,
            &config.camera,
        )?;
        timings.tsdf_ms = ms(clock);
        let clock = Instant::now();
        map.update_esdf();
        map.apply_unknown_policy(&policy, &state.position);
        timings.esdf_ms = ms(clock);

        if let Some(ig) = intermediate {
            if (state.position - ig.point).norm() <= config.goal_tolerance {
                intermediate = None;
                if let Some(y) = ig.yaw {
                    yaw = y;
                }
            }
        }
        let target = intermediate.map_or(goal, |ig| ig.point);
        let context = PlanningContext {
            start: state,
            goal: target,
            params: config.planner,
        };

        let clock = Instant::now();
        let projected = project_goal(&context);
        let radius = config.planner.robot_radius;
        let adjusted = match config.goal_adjustment {
            GoalAdjustment::Gradient => {
                adjust_goal_gradient(projected, state.position, &map, radius)
                    .or_else(|_| adjust_goal_straight_line(projected, state.position, &map, radius))
            }
            GoalAdjustment::StraightLine => {
                adjust_goal_straight_line(projected, state.position, &map, radius)
            }
        };
        let adjusted_goal = adjusted.as_ref().ok().copied();
        let outcome = adjusted.and_then(|g| optimize(&context, &map, g));
        timings.optimization_ms = ms(clock);

        let (feasible, costs, iterations, plan_clearance) = match &outcome {
            Ok(o) => (
                o.feasible,
                Some(o.costs),
                o.iterations,
                Some(o.min_clearance),
            ),
            Err(TrajOptError::StartInCollision { clearance }) => (false, None, 0, Some(*clearance)),
            Err(_) => (false, None, 0, None),
        };
        if let Ok(o) = outcome {
            if o.feasible {
                active = Some(Execution {
                    spline: o.trajectory,
                    t: 0.0,
                });
            }
        }

        // Execute up to one period of the current trajectory. After an
        // infeasible plan the previous one keeps running to its end.
        let before = (state.position - target).norm();
        let mut executed_length = 0.0;
        if let Some(exec) = active.as_mut() {
            let end = (exec.t + config.replan_period).min(exec.spline.duration());
            let steps = ((end - exec.t) / config.audit_step).ceil().max(1.0) as usize;
            let mut prev = exec.spline.position(exec.t);
            for i in 1..=steps {
                let t = exec.t + (end - exec.t) * i as f64 / steps as f64;
                let p = exec.spline.position(t);
                executed_length += (p - prev).norm();
                prev = p;
                let clearance = world.distance(&p, f64::INFINITY);
                min_clearance = min_clearance.min(clearance);
                if clearance < config.body_radius {
                    collisions += 1;
                }
                if !map
                    .esdf_voxel(map.voxel_of(&p))
                    .is_some_and(|e| e.is_free())
                {
                    unknown_traversals += 1;
                }
            }
            let period_samples = 10;
            for i in 1..=period_samples {
                let t = exec.t + (end - exec.t) * i as f64 / period_samples as f64;
                path.push(exec.spline.position(t));
            }
            executed.push((exec.spline.clone(), exec.t, end));
            yaw = velocity_tracking_yaw(&exec.spline, end, yaw);
            state = StartState {
                position: exec.spline.position(end),
                velocity: exec.spline.velocity(end),
                acceleration: exec.spline.acceleration(end),
            };
            exec.t = end;
            if end >= exec.spline.duration() {
                state.velocity = Vector3::zeros();
                state.acceleration = Vector3::zeros();
                active = None;
            }
        }
        path_length += executed_length;
        let after = (state.position - target).norm();
        let progress = before - after;
        let stuck = !feasible || (progress < config.min_progress && after > config.goal_tolerance);

        if collisions > 0 || unknown_traversals > 0 {
            status = TrialStatus::AuditFailure;
        }

        let mut selection = None;
        let mut strategy_failed = false;
        if stuck && status != TrialStatus::AuditFailure {
            stuck_events += 1;
            if config.strategy != StrategyKind::None {
                let clock = Instant::now();
                let chosen = select(
                    config,
                    &map,
                    &state.position,
                    yaw,
                    &goal,
                    &mut intermediate,
                    &mut random_pending,
                    &mut rng,
                );
                let elapsed = ms(clock);
                timings.selection_ms = Some(elapsed);
                selection_sum += elapsed;
                selections += 1;
                strategy_failed = chosen.is_none();
                if let Some(ig) = intermediate {
                    intermediate_goals.push(ig.point);
                }
                selection = Some(chosen.unwrap_or_else(|| SelectionLog::Failed {
                    error: "no intermediate goal".into(),
                    fallback: None,
                }));
                if let Some(SelectionLog::Failed {
                    fallback: Some(_), ..
                }) = &selection
                {
                    strategy_failed = false;
                }
            }
        }

        sums.tsdf_ms += timings.tsdf_ms;
        sums.esdf_ms += timings.esdf_ms;
        sums.optimization_ms += timings.optimization_ms;
        transcript.push(CycleRecord {
            cycle,
            position: state.position,
            yaw,
            target,
            intermediate: target != goal,
            projected_goal: projected,
            adjusted_goal,
            feasible,
            stuck,
            progress,
            costs,
            iterations,
            plan_clearance,
            observed_voxels: map.observed_count(),
            executed_length,
            selection,
            timings,
        });

        if status == TrialStatus::AuditFailure {
            break;
        }
        if strategy_failed {
            status = TrialStatus::StrategyFailure;
            break;
        }
    }
    if status == TrialStatus::MaxReplans && (state.position - goal).norm() <= config.goal_tolerance
    {
        status = TrialStatus::Success;
    }

    let n = cycles.max(1) as f64;
    let result = TrialResult {
        seed: config.seed,
        density: config.density,
        strategy: config.strategy,
        success: status == TrialStatus::Success,
        status,
        replans: cycles,
        path_length,
        final_distance: (state.position - goal).norm(),
        stuck_events,
        selections,
        min_clearance,
        collisions,
        unknown_traversals,
        tsdf_ms: sums.tsdf_ms / n,
        esdf_ms: sums.esdf_ms / n,
        optimization_ms: sums.optimization_ms / n,
        selection_ms: if selections > 0 {
            selection_sum / selections as f64
        } else {
            0.0
        },
    };
    Ok(TrialOutcome {
        result,
        transcript,
        path,
        intermediate_goals,
        executed,
        world,
    })
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Runs the configured strategy after a stuck cycle and updates the active
/// intermediate goal. `None` means the strategy failed without fallback.
#[allow(clippy::too_many_arguments)]
fn select(
    config: &TrialConfig,
    map: &VoxelMap,
    position: &Vector3<f64>,
    yaw: f64,
    goal: &Vector3<f64>,
    intermediate: &mut Option<Intermediate>,
    random_pending: &mut bool,
    rng: &mut ChaCha8Rng,
) -> Option<SelectionLog> {
    let random = |rng: &mut ChaCha8Rng, intermediate: &mut Option<Intermediate>| {
        select_random_goal(position, config.random_radius, map, rng)
            .ok()
            .map(|point| {
                *intermediate = Some(Intermediate { point, yaw: None });
                SelectionLog::Random { point }
            })
    };
    match config.strategy {
        StrategyKind::None => None,
        StrategyKind::Random => {
            // Alternate: one random goal, then back to the original goal.
            if *random_pending && intermediate.is_some() {
                *random_pending = false;
                *intermediate = None;
                Some(SelectionLog::ReturnToGoal)
            } else {
                *random_pending = true;
                random(rng, intermediate)
            }
        }
        StrategyKind::RrtOptimistic | StrategyKind::RrtConservative => {
            let optimistic = config.strategy == StrategyKind::RrtOptimistic;
            let plan = rrt_star_plan(map, position, goal, optimistic, &config.rrt, rng).ok()?;
            let first = plan.first_waypoint();
            *intermediate = Some(Intermediate {
                point: first,
                yaw: None,
            });
            Some(SelectionLog::Rrt {
                reached_goal: plan.reached_goal,
                waypoints: plan.waypoints,
                first,
            })
        }
        StrategyKind::Nbvp => {
            let s = nbvp_select(map, position, yaw, &config.camera, &config.nbvp, rng).ok()?;
            *intermediate = Some(Intermediate {
                point: s.position,
                yaw: Some(s.yaw),
            });
            Some(SelectionLog::Nbvp {
                position: s.position,
                yaw: s.yaw,
                best_node: s.best_node,
                best_value: s.best_value,
                gains: s.gains,
            })
        }
        StrategyKind::Proposed => {
            match select_intermediate_goal(
                position,
                goal,
                map,
                &config.camera,
                &config.exploration,
                rng,
            ) {
                Ok(s) => {
                    *intermediate = (!s.drew_goal).then_some(Intermediate {
                        point: s.point,
                        yaw: None,
                    });
                    Some(SelectionLog::Proposed(s))
                }
                Err(e) => {
                    let fallback = random(rng, intermediate)?;
                    Some(SelectionLog::Failed {
                        error: e.to_string(),
                        fallback: Some(Box::new(fallback)),
                    })
                }
            }
        }
    }
}

/// Writes the transcript as one JSON object per line.
pub fn write_transcript<W: Write>(mut w: W, records: &[CycleRecord]) -> Result<(), SimError> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
