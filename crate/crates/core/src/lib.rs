//! Cooperative range-based localization for wireless sensor networks.
//!
//! Nodes estimate their positions from noisy pairwise ranges and a handful of
//! anchors with known coordinates. The crate provides:
//!
//! - [`netmodel`]: networks, ranging noise, file format and node mobility.
//! - [`objective`]: the least-squares range cost and its convex envelope.
//! - [`localsolver`]: per-node subproblem solvers used by the ADMM x-update.
//! - [`admm`]: the synchronous distributed engine, with relaxed, non-convex
//!   and hybrid (relaxed first, non-convex after local convergence) variants.
//! - [`evaluation`]: RMSE, the Cramer-Rao bound, a centralized Nesterov
//!   baseline on the relaxed cost and run summaries.
//! - [`experiment`]: static, sweep and tracking studies built on the above.
//!
//! Positions are stored as [`Point`] (a 3-vector); in 2-D networks the third
//! coordinate is identically zero.

pub mod admm;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod localsolver;
pub mod netmodel;
pub mod objective;
pub mod scenarios;

pub use error::{Error, Result};
pub use netmodel::{Network, Point};
