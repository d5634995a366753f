//! Data-driven secondary frequency regulation for two AC grids coupled by an
//! LCC HVDC link.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: SVD, pseudo-inverse, matrix exponential/logarithm and the
//!   Riccati solver.
//! - [`plant`]: the linear small-signal truth plant (swing equations,
//!   gas-turbine governors, dc link with droop and inertia-emulation loops).
//! - [`sysid`]: observer/Kalman filter identification followed by the
//!   eigensystem realization algorithm.
//! - [`control`]: the LQG regulator designed on the identified model and the
//!   conventional PI baselines.
//! - [`harness`]: scenarios, metrics, comparison tables and file outputs used
//!   by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod harness;
pub mod numerics;
pub mod plant;
pub mod signal;
pub mod statespace;
pub mod sysid;

pub use numerics::Matrix;
pub use signal::SignalRecord;
pub use statespace::{StateSpace, TimeDomain};
