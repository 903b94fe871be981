//! Numerics for the generalized fractional linear birth-death process.

// NaN-rejecting domain checks are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod error;
pub mod laplace;
pub mod operators;
pub mod quadrature;
pub mod simulator;
pub mod special;
pub mod summation;

pub use error::{Error, Result};
