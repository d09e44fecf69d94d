//! Conservative local trajectory optimization for micro-aerial vehicles in
//! unknown cluttered environments, with intermediate goal selection to
//! escape local minima and a forest simulation benchmark.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod camera;
pub mod goal_selection;
pub mod poly_spline;
pub mod sim;
pub mod traj_opt;
pub mod voxel_map;

pub use camera::{CameraModel, DepthImage};
pub use voxel_map::{MapConfig, MapError, UnknownSpacePolicy, VoxelMap};
