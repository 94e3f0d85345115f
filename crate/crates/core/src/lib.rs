//! Canonical and microcanonical thermodynamics of classical separable
//! Hamiltonians with a few degrees of freedom, and the excited-state
//! singularities their stationary points induce in the level density.
//!
//! Units are natural throughout: `hbar = k_B = 1`, `T = 1 / beta`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod finite_diff;
pub mod quadrature;
pub mod special;

pub mod canonical;
pub mod density;
pub mod esqpt;
pub mod microcanonical;
pub mod potential;
pub mod scenario;

pub use error::{Error, Result};
