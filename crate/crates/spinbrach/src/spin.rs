//! Spin-1 operator algebra and state-vector plumbing.
//!
//! Everything works in the eigenbasis of `s_z` with the fixed component
//! ordering `(m = +1, m = 0, m = -1)`: index 0 is the highest weight. Spin
//! matrices are dimensionless (`hbar = 1`), so `s_x^2 + s_y^2 + s_z^2 = 2 I`
//! and `[s_x, s_y] = i s_z`.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};

/// 3x3 complex matrix acting on spin-1 amplitudes.
pub type SpinMatrix = Matrix3<C64>;

/// Input states may deviate from unit norm by at most this much before
/// construction fails; inside the crate states are kept normalized exactly.
pub const NORM_INPUT_TOL: f64 = 1e-9;

/// Components with modulus below this threshold carry no usable phase; the
/// canonical form treats them as zero when picking its phase reference.
pub const PHASE_REFERENCE_EPS: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The spin-1 matrices `(s_x, s_y, s_z)` in the `s_z` eigenbasis.
pub fn spin_matrices() -> (SpinMatrix, SpinMatrix, SpinMatrix) {
    let f = std::f64::consts::FRAC_1_SQRT_2;
    let sx = SpinMatrix::new(
        ZERO, c(f, 0.0), ZERO,
        c(f, 0.0), ZERO, c(f, 0.0),
        ZERO, c(f, 0.0), ZERO,
    );
    let sy = SpinMatrix::new(
        ZERO, c(0.0, -f), ZERO,
        c(0.0, f), ZERO, c(0.0, -f),
        ZERO, c(0.0, f), ZERO,
    );
    let sz = SpinMatrix::new(
        ONE, ZERO, ZERO,
        ZERO, ZERO, ZERO,
        ZERO, ZERO, -ONE,
    );
    (sx, sy, sz)
}

/// Unit direction of the magnetic field, parameterized by the polar angle
/// `theta` (from the `+z` axis) and azimuth `phi`.
///
/// `theta` must lie in `[0, pi]`; `phi` is wrapped into `[0, 2*pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldDirection {
    theta: f64,
    phi: f64,
}

impl FieldDirection {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::NonFinite { context: "field direction angles" });
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::InvalidTheta { theta });
        }
        Ok(Self { theta, phi: phi.rem_euclid(std::f64::consts::TAU) })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Cartesian unit vector `(sin t cos p, sin t sin p, cos t)`.
    pub fn unit_vector(&self) -> Vector3<f64> {
        let (st, ct) = (self.theta.sin(), self.theta.cos());
        let (sp, cp) = (self.phi.sin(), self.phi.cos());
        Vector3::new(st * cp, st * sp, ct)
    }
}

/// Projection `n . s` of the spin onto a field direction.
///
/// Hermitian and traceless with eigenvalues `{-1, 0, +1}`; it satisfies its
/// own characteristic identity `(n.s)^3 = n.s`.
pub fn spin_projection(dir: &FieldDirection) -> SpinMatrix {
    let n = dir.unit_vector();
    let f = std::f64::consts::FRAC_1_SQRT_2;
    // (n_x - i n_y)/sqrt(2) couples m -> m+1; its conjugate couples m -> m-1.
    let upper = c(n.x * f, -n.y * f);
    let lower = upper.conj();
    SpinMatrix::new(
        c(n.z, 0.0), upper, ZERO,
        lower, ZERO, upper,
        ZERO, lower, c(-n.z, 0.0),
    )
}

/// Normalized spin-1 amplitude triple in the `(m=+1, m=0, m=-1)` basis.
///
/// Construction rejects non-finite input and norms further than
/// [`NORM_INPUT_TOL`] from 1, then renormalizes exactly, so every value of
/// this type has unit norm up to machine precision.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vector3<C64>);

impl StateVector {
    pub fn new(c0: C64, c1: C64, c2: C64) -> Result<Self> {
        Self::from_vector(Vector3::new(c0, c1, c2))
    }

    pub fn from_vector(v: Vector3<C64>) -> Result<Self> {
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { context: "state components" });
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > NORM_INPUT_TOL {
            return Err(Error::NotNormalized { norm, tol: NORM_INPUT_TOL });
        }
        Ok(Self(v.unscale(norm)))
    }

    /// Basis state with `m = +1` (index 0).
    pub fn sz_plus() -> Self {
        Self(Vector3::new(ONE, ZERO, ZERO))
    }

    /// Basis state with `m = 0` (index 1).
    pub fn sz_zero() -> Self {
        Self(Vector3::new(ZERO, ONE, ZERO))
    }

    /// Basis state with `m = -1` (index 2).
    pub fn sz_minus() -> Self {
        Self(Vector3::new(ZERO, ZERO, ONE))
    }

    pub fn components(&self) -> [C64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }

    pub fn as_vector(&self) -> &Vector3<C64> {
        &self.0
    }

    /// Re-normalizing constructor for amplitudes produced by unitary
    /// evolution; debug-checks that the drift really was at rounding level.
    pub(crate) fn renormalized(v: Vector3<C64>) -> Self {
        let norm = v.norm();
        debug_assert!((norm - 1.0).abs() < 1e-12, "unitary evolution drifted: norm {norm}");
        Self(v.unscale(norm))
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Hermitian inner product, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &Self) -> C64 {
        self.0.dotc(&other.0)
    }

    /// `|<self|other>|^2`; insensitive to global phases of either state.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner_product(other).norm_sqr()
    }

    /// Strip the global phase: moduli plus the phases of components 1 and 2
    /// relative to the first component of modulus >= [`PHASE_REFERENCE_EPS`].
    pub fn canonicalize(&self) -> CanonicalState {
        let comps = self.components();
        let reference = comps
            .iter()
            .find(|z| z.norm() >= PHASE_REFERENCE_EPS)
            .map_or(0.0, |z| z.arg());
        let moduli = [comps[0].norm(), comps[1].norm(), comps[2].norm()];
        let rel = |z: &C64| {
            if z.norm() >= PHASE_REFERENCE_EPS {
                wrap_two_pi(z.arg() - reference)
            } else {
                0.0
            }
        };
        CanonicalState { moduli, relative_phases: [rel(&comps[1]), rel(&comps[2])] }
    }
}

/// Wrap an angle into `[0, 2*pi)`.
pub(crate) fn wrap_two_pi(angle: f64) -> f64 {
    let w = angle.rem_euclid(std::f64::consts::TAU);
    // rem_euclid can return 2*pi itself when rounding up from just below.
    if w >= std::f64::consts::TAU { 0.0 } else { w }
}

/// Global-phase-free description of a state: component moduli and the two
/// relative phases `(arg c1 - arg ref, arg c2 - arg ref)` in `[0, 2*pi)`.
///
/// Components below [`PHASE_REFERENCE_EPS`] get relative phase 0 by
/// convention. [`CanonicalState::reconstruct`] rebuilds the state up to one
/// overall unit-modulus factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanonicalState {
    moduli: [f64; 3],
    relative_phases: [f64; 2],
}

impl CanonicalState {
    pub fn moduli(&self) -> [f64; 3] {
        self.moduli
    }

    pub fn relative_phases(&self) -> [f64; 2] {
        self.relative_phases
    }

    /// Representative with the phase reference rotated to zero.
    pub fn reconstruct(&self) -> StateVector {
        let phase = |p: f64| C64::from_polar(1.0, p);
        StateVector::renormalized(Vector3::new(
            c(self.moduli[0], 0.0),
            phase(self.relative_phases[0]) * self.moduli[1],
            phase(self.relative_phases[1]) * self.moduli[2],
        ))
    }
}
