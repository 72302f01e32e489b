//! Numerical laboratory for complex Finsler metrics on rank-2 holomorphic
//! bundles over one-dimensional Kähler bases.
//!
//! A metric is stored as `G = e^u · h(v, v)` with `h` Hermitian and `u` a
//! function on the projectivized bundle. Every pointwise quantity is read off
//! from derivatives of `log G` at the section `v = (1, w)` or `v = (w, 1)` of
//! the fiber chart in use.

// `!(x > 0.0)` rejects NaN on purpose, and tensor code keeps explicit index
// loops so that it reads like the index notation it implements.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod checks;
pub mod config;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod expr;
pub mod fiber;
pub mod finsler;
pub mod flow;
pub mod functionals;
pub mod geometry_base;
pub mod jet;
pub mod lab;
pub mod linalg;
pub mod path;
pub mod quad;
pub mod spectral;
pub mod variation;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Bundle rank. Every tensor routine is written for this value.
pub const RANK: usize = 2;
