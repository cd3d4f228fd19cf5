//! Projection residuals: how far a trajectory leaves the two-dimensional
//! subspace spanned by its initial and final states.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagator::Trajectory;
use crate::spin::StateVector;

/// States closer than this in infidelity are treated as parallel, making
/// the requested span one-dimensional and therefore rejected.
const PARALLEL_TOL: f64 = 1e-12;

/// Orthonormal basis `(e1, e2)` of the plane spanned by two states, with
/// `e1` equal to the first state.
#[derive(Debug, Clone)]
pub struct SpanBasis {
    e1: StateVector,
    e2: StateVector,
}

impl SpanBasis {
    pub fn e1(&self) -> &StateVector {
        &self.e1
    }

    pub fn e2(&self) -> &StateVector {
        &self.e2
    }
}

/// Gram-Schmidt basis of `span{psi_i, psi_f}`: `e1 = psi_i`,
/// `e2 = normalize(psi_f - <e1|psi_f> e1)`.
///
/// Fails with [`Error::DegenerateSpan`] when the states are parallel
/// (fidelity above `1 - 1e-12`).
pub fn orthonormal_span(psi_i: &StateVector, psi_f: &StateVector) -> Result<SpanBasis> {
    if psi_i.fidelity(psi_f) >= 1.0 - PARALLEL_TOL {
        return Err(Error::DegenerateSpan);
    }
    let overlap = psi_i.inner_product(psi_f);
    let raw = psi_f.as_vector() - psi_i.as_vector() * overlap;
    let norm = raw.norm();
    // norm^2 = 1 - |<psi_i|psi_f>|^2 > PARALLEL_TOL by the gate above.
    let e2 = StateVector::from_vector(raw.unscale(norm)).expect("orthogonal complement is normalizable");
    Ok(SpanBasis { e1: psi_i.clone(), e2 })
}

/// Norm of the component of `psi` outside the span:
/// `sqrt(1 - |<e1|psi>|^2 - |<e2|psi>|^2)`, clamped into `[0, 1]`.
///
/// 0 means `psi` lies in the plane, 1 means it is orthogonal to it. The
/// value is insensitive to global phases of `psi` and of the basis.
pub fn projection_residual(psi: &StateVector, basis: &SpanBasis) -> f64 {
    let in_plane = basis.e1.fidelity(psi) + basis.e2.fidelity(psi);
    (1.0 - in_plane).clamp(0.0, 1.0).sqrt()
}

/// Residuals of every sample of a trajectory against a span, with the
/// maximum and the (earliest) time where it is attained.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualProfile {
    samples: Vec<(f64, f64)>,
    max_residual: f64,
    argmax_t: f64,
}

impl ResidualProfile {
    /// `(t, residual)` pairs, in trajectory order.
    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    /// Earliest sample time attaining [`Self::max_residual`].
    pub fn argmax_t(&self) -> f64 {
        self.argmax_t
    }
}

/// Residual of every trajectory sample against the span.
pub fn trajectory_residual_profile(trajectory: &Trajectory, basis: &SpanBasis) -> ResidualProfile {
    let samples: Vec<(f64, f64)> = trajectory
        .samples()
        .iter()
        .map(|(t, state)| (*t, projection_residual(state, basis)))
        .collect();
    let (argmax_t, max_residual) = samples
        .iter()
        .fold((samples[0].0, f64::NEG_INFINITY), |(bt, br), &(t, r)| {
            if r > br { (t, r) } else { (bt, br) }
        });
    ResidualProfile { samples, max_residual, argmax_t }
}
