//! Discrete subordination of the simple random walk on `Z^d`.
//!
//! Given a Bernstein function `ψ`, the subordinated walk `S_ψ` jumps by
//! running the simple walk for a random number of steps with law
//! `c(ψ, ·)`. This crate computes those step laws, the renewal sequence
//! of the step counts, the Green function of `S_ψ`, discrete capacities, and
//! uses them to decide whether lattice sets (axes, hyperplanes, cones,
//! thorns) are massive, i.e. hit with probability one from everywhere.
//!
//! Data-parallel loops go through [`exec`]; build without the default
//! `parallel` feature for a purely sequential library.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernstein;
pub mod capacity;
pub mod conv;
pub mod error;
pub mod exec;
pub mod green;
pub mod hpseries;
pub mod massiveness;
pub mod montecarlo;
pub mod renewal;
pub mod simplex;
pub mod special;
pub mod walk_kernel;

pub use error::{Error, Result};
