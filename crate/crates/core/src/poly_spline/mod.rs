//! Piecewise polynomial splines parameterized by their junction derivatives.
//!
//! A segment of order `N` has `N + 1` coefficients per dimension. The mapping
//! matrix `A` takes those coefficients to the derivatives of orders
//! `0..=(N - 1) / 2` at both segment ends, so a spline is fully described by
//! the derivatives at its `S + 1` nodes. Node derivatives split into a fixed
//! set (boundary conditions) and a free set (optimization variables).

mod cost;
mod export;
mod layout;
mod mapping;
mod spline;
mod timing;

pub use cost::DerivativeCostMatrices;
pub use export::{SegmentExport, SplineExport};
pub use layout::{SampleBasis, SplineLayout};
pub use mapping::{build_mapping, derivative_row, Mapping};
pub use spline::{PolynomialSegment, PolynomialSpline};
pub use timing::allocate_segment_times;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("polynomial order must be odd, got {0}")]
    EvenOrder(usize),
    #[error("segment duration {0} is too small or not finite")]
    DegenerateSegment(f64),
    #[error("time {t} outside [0, {total}]")]
    OutOfRange { t: f64, total: f64 },
    #[error("derivative order {order} exceeds the maximum {max}")]
    DerivativeOrder { order: usize, max: usize },
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("spline needs at least one segment")]
    Empty,
}

pub const DEFAULT_ORDER: usize = 9;
pub const DEFAULT_SEGMENTS: usize = 3;
/// Jerk.
pub const DEFAULT_COST_DERIVATIVE: usize = 3;
