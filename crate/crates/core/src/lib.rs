//! Cut finite elements for the heat equation on the unit interval, with a
//! stationary background mesh and an overlapping mesh that jumps between
//! time slabs.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod linalg;
pub mod operators;
pub mod quadrature;
pub mod space;
pub mod timestepping;

pub use error::{Error, Result};
