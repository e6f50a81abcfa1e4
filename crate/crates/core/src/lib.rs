//! Turnpike analysis for linear-quadratic control of damping-free oscillator
//! chains.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod beam;
pub mod config;
pub mod error;
pub mod lq_solver;
pub mod model;
pub(crate) mod quadrature;
pub mod spectral;
pub mod static_opt;
pub mod turnpike;

pub use error::{Error, Result};
