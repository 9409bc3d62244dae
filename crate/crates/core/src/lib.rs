//! K-invariant graphical mean curvature flow in warped products `_r G/K × I`
//! over rank-one compact symmetric spaces.
//!
//! The flow of a K-invariant graph reduces to a degenerate parabolic
//! equation for a single profile `û(x, t)` on `[0, L]` with Neumann
//! conditions at both ends. This crate discretizes that equation by the
//! method of lines, integrates it with RK4, and checks runs against slice
//! barriers and the gradient bounds behind the long-time existence results.
//!
//! - [`space`]: root data of `S^n`, `CP^{n/2}`, `HP^{n/4}`, `OP^2`.
//! - [`warp`]: warping functions and checks of their structural conditions.
//! - [`geometry`]: profile derivatives, graph angle, mean curvature, and the
//!   right-hand side of the reduced flow.
//! - [`flow`]: time integration with event detection.
//! - [`compare`]: slice ODEs, gradient certificates, run verification.
//! - [`cli`]: JSON configuration and the `wmcf` subcommands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod compare;
pub mod flow;
pub mod format;
pub mod geometry;
pub mod space;
pub mod warp;

pub use compare::{
    bound_theorem_a, bound_theorem_b, solve_slice, verify_trajectory, Scenario, SliceState,
    VerificationReport,
};
pub use flow::{initial_constant, initial_cosine, run, stable_dt, step, FlowEvent, SolverConfig, Trajectory};
pub use geometry::{derive, mean_curvature, reduced_rhs, rhs_curvature_consistency, Profile, ProfileDerived};
pub use space::{SpaceKind, SymmetricSpace};
pub use warp::{check_theorem_a, check_theorem_b, ConditionReport, WarpingFunction};
