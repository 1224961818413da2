//! Geodesics, foot-point projections and constant-distance offsets of convex
//! surfaces, with the numerical experiments built on them.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod experiments;
pub mod geodesics;
pub mod numerics;
pub mod ode;
pub mod planar;
pub mod projection;
pub mod surface;
