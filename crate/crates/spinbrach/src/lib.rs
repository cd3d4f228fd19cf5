//! Time-optimal control of a spin-1 magnetic moment in a field of fixed
//! magnitude.
//!
//! The field direction is the only control; the evolution speed is set by
//! the fixed level splitting `delta_omega` between adjacent `m` levels
//! (internally the propagator angle advances as `omega * t` with
//! `omega = delta_omega / 2`). The crate provides:
//!
//! * [`spin`] — spin-1 operators, field directions, normalized states and
//!   their global-phase-free canonical form;
//! * [`propagator`] — the closed-form rotation propagator, an independent
//!   spectral route to the same unitary, and analytic trajectories from the
//!   `m = -1` and `m = 0` basis states;
//! * [`reachability`] — which targets a fixed-magnitude field can reach from
//!   `m = -1`, with quantified violations and an explicit field witness;
//! * [`brachistochrone`] — arrival times, minimal times, the transverse
//!   phase-alignment angle, numeric first-hitting times and a deterministic
//!   direction-grid optimizer, all compared against the two-level quantum
//!   speed limit;
//! * [`subspace`] — projection residuals measuring how far a trajectory
//!   leaves the plane spanned by the initial and final states;
//! * [`verify`] — the self-checking suite behind `spinbrach verify` and the
//!   acceptance tests.

pub mod brachistochrone;
pub mod error;
pub mod propagator;
pub mod reachability;
pub mod spin;
pub mod subspace;
pub mod verify;

pub use brachistochrone::{
    alignment_alpha, arrival_time_minus, arrival_time_zero, first_hitting_time, grid_hitting_scan,
    minimal_time_minus, optimize_field, solve_example2, speed_limit_bound, AlignmentAngle,
    GridNode, GridScan, SolveMethod, SolveResult,
};
pub use num_complex::Complex64;
pub use error::{Error, Result};
pub use propagator::{
    analytic_state_minus, analytic_state_zero, closed_form_propagator, evolve, sample_trajectory,
    scalar_exp_identity, spectral_propagator, Propagator, Trajectory,
};
pub use reachability::{classify_target, modulus_conditions, ReachabilityReport};
pub use spin::{
    spin_matrices, spin_projection, CanonicalState, FieldDirection, SpinMatrix, StateVector,
};
pub use subspace::{
    orthonormal_span, projection_residual, trajectory_residual_profile, ResidualProfile, SpanBasis,
};
pub use verify::{run_verification, Check, CheckStatus, VerifyOptions, VerifyReport};
