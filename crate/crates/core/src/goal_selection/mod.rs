//! Intermediate goal selection for when local optimization gets stuck.

mod exploration;
mod nbvp;
mod random;
mod rrt;

pub use exploration::{
    exploration_reward, select_intermediate_goal, CandidateRecord, ExplorationParams,
    ExplorationSelection, RewardBreakdown,
};
pub use nbvp::visible_unknown;
pub use nbvp::{nbvp_select, NbvpParams, NbvpSelection};
pub use random::select_random_goal;
pub use rrt::{rrt_star_plan, RrtParams, RrtPath};

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GoalSelectionError {
    #[error("no unoccupied sample found in {0} attempts")]
    SamplingExhausted(usize),
    #[error("planner could not grow any valid node")]
    NoValidNodes,
    #[error("start is not free under the chosen semantics")]
    StartNotFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "rrt_opt", alias = "rrt_star_optimistic")]
    RrtOptimistic,
    #[serde(rename = "rrt_cons", alias = "rrt_star_conservative")]
    RrtConservative,
    #[serde(rename = "nbvp")]
    Nbvp,
    #[serde(rename = "proposed")]
    Proposed,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::None,
        StrategyKind::Random,
        StrategyKind::RrtOptimistic,
        StrategyKind::RrtConservative,
        StrategyKind::Nbvp,
        StrategyKind::Proposed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::None => "none",
            StrategyKind::Random => "random",
            StrategyKind::RrtOptimistic => "rrt_opt",
            StrategyKind::RrtConservative => "rrt_cons",
            StrategyKind::Nbvp => "nbvp",
            StrategyKind::Proposed => "proposed",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = match s {
            "rrt_star_optimistic" => "rrt_opt",
            "rrt_star_conservative" => "rrt_cons",
            other => other,
        };
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}` (expected none, random, rrt_opt, rrt_cons, nbvp or proposed)"))
    }
}

/// Uniform sample in the ball of `radius` around `center`.
pub(crate) fn sample_in_ball(
    rng: &mut impl Rng,
    center: &Vector3<f64>,
    radius: f64,
) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
            rng.random_range(-1.0..=1.0),
        );
        if v.norm_squared() <= 1.0 {
            return center + v * radius;
        }
    }
}
