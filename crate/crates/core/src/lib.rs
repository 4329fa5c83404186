//! Numerical toolkit for the doubly coupled cubic Schrödinger system
//!
//! ```text
//! −Δu + u = μ₁u³ + βuv² − κv
//! −Δv + v = μ₂v³ + βu²v − κu
//! ```
//!
//! on radially symmetric ℝᴺ (N = 1, 2, 3): the scalar ground state ω,
//! the synchronized branches built from it, the weighted eigenvalue
//! problem that locates bifurcation points, Nehari-manifold ground states
//! and pseudo-arclength continuation of the bifurcating branches.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod branches;
pub mod cli;
pub mod config;
pub mod continuation;
pub mod error;
pub mod ground_state;
pub mod linalg;
pub mod mesh;
pub mod nehari;
pub mod spectrum;
pub mod system;
pub mod verify;

pub use error::{Result, SchroError};
