//! Numerical tools for gravitationally induced decoherence.
//!
//! * [`units`]: physical constants and the handful of units used at I/O boundaries.
//! * [`mass`]: rigid mass distributions (boxes, spheres, voxel grids) and superposed pairs.
//! * [`dp`]: the reduction energy Δ and reduction time τ_d, by direct integration
//!   (voxel sums, Monte Carlo) and by the small-displacement expansion for cubes.
//! * [`decoherence`]: two-branch master equation and its stochastic unravelling.
//! * [`sn`]: Schrödinger–Newton solver (Poisson, split-step evolution, ground states,
//!   N-branch effective potentials with or without the self term).
//! * [`com`]: two-particle evolution showing center-of-mass decoupling.
//! * [`acceptance`]: the end-to-end acceptance checks, shared by the test suite and the CLI.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod com;
pub mod decoherence;
pub mod dp;
pub mod error;
pub mod mass;
pub mod quadrature;
pub mod sn;
pub mod units;

pub use error::{Error, Result};
pub use units::PhysicalConstants;
