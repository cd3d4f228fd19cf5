//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Everything that can go wrong when driving the library with invalid
/// parameters or when a target is out of reach of the numeric search.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A state amplitude or an angle was NaN or infinite.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// State vectors must arrive normalized to better than `tol`; they are
    /// re-normalized exactly on construction.
    #[error("state norm {norm} deviates from 1 by more than {tol}")]
    NotNormalized { norm: f64, tol: f64 },

    /// Polar angle of a field direction must lie in `[0, pi]`.
    #[error("polar angle {theta} outside [0, pi]")]
    InvalidTheta { theta: f64 },

    /// The scalar exponential identity only holds for eigenvalues -1, 0, +1.
    #[error("eigenvalue scalar {lambda} outside {{-1, 0, 1}}")]
    InvalidEigenvalueScalar { lambda: i32 },

    /// Iterative Hermitian diagonalization failed to converge. Does not
    /// happen for the (well-conditioned) spin projections this crate builds.
    #[error("hermitian eigendecomposition did not converge")]
    DiagonalizationFailed,

    /// No arrival time exists: the target modulus exceeds what the chosen
    /// polar angle can reach (`sin^2(theta) < a_mod`).
    #[error("no arrival time: sin^2(theta) = {sin_sq_theta:.6} is below the target modulus {a_mod:.6}")]
    NoArrivalTime { a_mod: f64, sin_sq_theta: f64 },

    /// Target modulus must lie in `[0, 1]`.
    #[error("target modulus {a_mod} outside [0, 1]")]
    InvalidModulus { a_mod: f64 },

    /// The alignment angle is only defined for `omega*t` strictly inside
    /// `(0, 2*pi)`; at the endpoints the transverse amplitude vanishes and
    /// its phase is meaningless.
    #[error("alignment angle undefined: omega*t = {omega_t} outside (0, 2*pi)")]
    AlignmentDomain { omega_t: f64 },

    /// Decision tolerances must be strictly positive (and < 1 to be useful).
    #[error("tolerance {tol} outside (0, 1)")]
    InvalidTolerance { tol: f64 },

    /// Span construction needs two non-parallel states.
    #[error("initial and final states are parallel; the span is one-dimensional")]
    DegenerateSpan,

    /// The direction grid search finished without any node reaching the
    /// target; `best_infidelity` is the closest approach seen.
    #[error("no grid node reaches the target within t_max; best infidelity {best_infidelity:.3e}")]
    UnreachableBySearch { best_infidelity: f64 },

    /// Grid searches need a minimum resolution to be meaningful.
    #[error("grid {n_theta}x{n_phi} too small; need at least 8 nodes per axis")]
    GridTooSmall { n_theta: usize, n_phi: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
