//! Divergence-free fields in the plane that exchange the first and the last
//! cube of an array while leaving the cubes in between in place.
//!
//! The field is piecewise affine in space and constant on four time
//! intervals. Its pieces are convex polygons built from half-plane
//! inequalities; on shared boundaries it vanishes.

mod certify;
mod field;
mod geometry;
mod integrate;

pub use certify::{
    bump_battery, check_points, discrete_swap_l2, l1l2_norm, verify_swap_map, weak_divergence, weak_divergence_residual, Bump,
    SwapReport,
};
pub use field::{build_swap_field, rotation_pieces, shear_field, shear_pieces, FrameParams, Phase, Piece, PiecewiseField, Velocity};
pub use geometry::{Affine, HalfPlane, Point, Polygon};
pub use integrate::{integrate_time1_map, time1_image, FlowTrace, IntegratorStats};
