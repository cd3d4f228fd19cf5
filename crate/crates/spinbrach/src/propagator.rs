//! Propagators for a spin-1 in a static field of fixed magnitude, by two
//! independent routes, plus analytic trajectories from the `m = -1` and
//! `m = 0` basis states.
//!
//! With the field along the unit vector `n` the evolution operator depends
//! only on the dimensionless angle `omega * t` and on `M = n . s`:
//!
//! ```text
//! U(omega t) = I - 2 sin^2(omega t / 2) M^2 - i sin(omega t) M
//! ```
//!
//! which follows from `M^3 = M`. The closed form above is the production
//! path; [`spectral_propagator`] rebuilds the same unitary by numerically
//! diagonalizing `M` and exponentiating its eigenvalues, and exists purely
//! as an independent cross-check.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::spin::{spin_projection, FieldDirection, SpinMatrix, StateVector};

const I_UNIT: C64 = C64::new(0.0, 1.0);

/// Above this magnitude the propagator angle is reduced modulo `2*pi`
/// before any trigonometry, trading sub-ulp phase coherence for bounded
/// arguments. Below it the angle is used as given.
const ANGLE_REDUCTION_LIMIT: f64 = 1e6;

fn reduced_angle(omega_t: f64) -> f64 {
    if omega_t.abs() > ANGLE_REDUCTION_LIMIT {
        omega_t.rem_euclid(std::f64::consts::TAU)
    } else {
        omega_t
    }
}

/// Unitary evolution operator for a fixed field direction and dimensionless
/// duration `omega_t`, together with the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    matrix: SpinMatrix,
    omega_t: f64,
    direction: FieldDirection,
}

impl Propagator {
    pub fn matrix(&self) -> &SpinMatrix {
        &self.matrix
    }

    pub fn omega_t(&self) -> f64 {
        self.omega_t
    }

    pub fn direction(&self) -> &FieldDirection {
        &self.direction
    }

    /// Apply to a state; the result is re-normalized to absorb rounding.
    pub fn apply(&self, psi: &StateVector) -> StateVector {
        StateVector::renormalized(&self.matrix * psi.as_vector())
    }

    /// Largest entry of `U^dagger U - I`; zero for an exact unitary.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.matrix.adjoint() * self.matrix;
        (gram - SpinMatrix::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `|det U|`; 1 for an exact unitary.
    pub fn det_modulus(&self) -> f64 {
        self.matrix.determinant().norm()
    }
}

/// Build the propagator from the closed form
/// `I - 2 sin^2(omega t / 2) M^2 - i sin(omega t) M`.
pub fn closed_form_propagator(dir: &FieldDirection, omega_t: f64) -> Propagator {
    let angle = reduced_angle(omega_t);
    let m = spin_projection(dir);
    let m2 = m * m;
    let s2 = (angle / 2.0).sin().powi(2);
    let s = angle.sin();
    let matrix = SpinMatrix::identity() - m2 * C64::new(2.0 * s2, 0.0) - m * C64::new(0.0, s);
    Propagator { matrix, omega_t, direction: *dir }
}

/// Rebuild the propagator spectrally: diagonalize `M = n . s`, exponentiate
/// the (real) eigenvalues as `exp(-i lambda omega t)`, and recompose.
///
/// Deliberately shares no algebra with [`closed_form_propagator`]; used to
/// cross-check it. Fails only if the iterative eigensolver does not
/// converge, which does not happen for these Hermitian inputs.
pub fn spectral_propagator(dir: &FieldDirection, omega_t: f64) -> Result<Propagator> {
    let angle = reduced_angle(omega_t);
    let m = spin_projection(dir);
    let eigen = m
        .try_symmetric_eigen(f64::EPSILON, 4096)
        .ok_or(Error::DiagonalizationFailed)?;
    let phases = Vector3::new(
        (-I_UNIT * eigen.eigenvalues[0] * angle).exp(),
        (-I_UNIT * eigen.eigenvalues[1] * angle).exp(),
        (-I_UNIT * eigen.eigenvalues[2] * angle).exp(),
    );
    let q = eigen.eigenvectors;
    let matrix = q * Matrix3::from_diagonal(&phases) * q.adjoint();
    Ok(Propagator { matrix, omega_t, direction: *dir })
}

/// Scalar form of the same resummation: for `lambda` in `{-1, 0, 1}`,
///
/// ```text
/// exp(lambda x) = (1 - lambda)(1 + lambda)
///               + (lambda/2)(lambda + 1) exp(x)
///               + (lambda/2)(lambda - 1) exp(-x)
/// ```
///
/// Any other `lambda` is rejected.
pub fn scalar_exp_identity(lambda: i32, x: C64) -> Result<C64> {
    if !matches!(lambda, -1 | 0 | 1) {
        return Err(Error::InvalidEigenvalueScalar { lambda });
    }
    let l = lambda as f64;
    Ok(C64::new((1.0 - l) * (1.0 + l), 0.0)
        + x.exp() * (0.5 * l * (l + 1.0))
        + (-x).exp() * (0.5 * l * (l - 1.0)))
}

/// Evolve `psi` for time `t` under a field along `dir` with level splitting
/// `2 * omega`. Callers are expected to pass `omega > 0` and `t >= 0`.
pub fn evolve(psi: &StateVector, dir: &FieldDirection, omega: f64, t: f64) -> StateVector {
    debug_assert!(omega > 0.0, "omega must be positive");
    debug_assert!(t >= 0.0, "time must be non-negative");
    closed_form_propagator(dir, omega * t).apply(psi)
}

/// State reached from the `m = -1` basis state, written out analytically:
///
/// ```text
/// ( -e^{-2 i phi} sin^2(theta) sin^2(omega t / 2),
///   e^{-i phi} sin(theta) [ sqrt(2) cos(theta) sin^2(omega t / 2)
///                           - (i / sqrt(2)) sin(omega t) ],
///   1 - (1 + cos^2(theta)) sin^2(omega t / 2) + i cos(theta) sin(omega t) )
/// ```
pub fn analytic_state_minus(theta: f64, phi: f64, omega_t: f64) -> StateVector {
    let angle = reduced_angle(omega_t);
    let s2 = (angle / 2.0).sin().powi(2);
    let s = angle.sin();
    let (st, ct) = (theta.sin(), theta.cos());
    let e_m_phi = C64::from_polar(1.0, -phi);
    let c0 = -(e_m_phi * e_m_phi) * (st * st * s2);
    let c1 = e_m_phi
        * C64::new(
            std::f64::consts::SQRT_2 * ct * st * s2,
            -st * s * std::f64::consts::FRAC_1_SQRT_2,
        );
    let c2 = C64::new(1.0 - (1.0 + ct * ct) * s2, ct * s);
    StateVector::renormalized(Vector3::new(c0, c1, c2))
}

/// Depth of the excursion away from the `m = 0` basis state,
/// `gamma = sin^2(theta) sin^2(omega t / 2)`, and the complex transverse
/// amplitude `z` with `|z|^2 = 2 gamma (1 - gamma)`.
pub(crate) fn zero_case_gamma_z(theta: f64, phi: f64, omega_t: f64) -> (f64, C64) {
    let angle = reduced_angle(omega_t);
    let s2 = (angle / 2.0).sin().powi(2);
    let (st, ct) = (theta.sin(), theta.cos());
    let gamma = st * st * s2;
    let z = C64::from_polar(1.0, phi)
        * C64::new(2.0 * ct * st * s2, -st * angle.sin())
        * std::f64::consts::FRAC_1_SQRT_2;
    (gamma, z)
}

/// State reached from the `m = 0` basis state: `(-conj(z), 1 - 2 gamma, z)`
/// with `gamma` and `z` as in `zero_case_gamma_z`.
pub fn analytic_state_zero(theta: f64, phi: f64, omega_t: f64) -> StateVector {
    let (gamma, z) = zero_case_gamma_z(theta, phi, omega_t);
    StateVector::renormalized(Vector3::new(-z.conj(), C64::new(1.0 - 2.0 * gamma, 0.0), z))
}

/// Uniformly sampled evolution under a fixed field.
///
/// Sample times are strictly increasing; every state is normalized. Each
/// sample is propagated directly from `t = 0` (no step chaining), so late
/// samples are exactly as accurate as early ones.
#[derive(Debug, Clone)]
pub struct Trajectory {
    samples: Vec<(f64, StateVector)>,
    direction: FieldDirection,
    omega: f64,
}

impl Trajectory {
    pub fn samples(&self) -> &[(f64, StateVector)] {
        &self.samples
    }

    pub fn direction(&self) -> &FieldDirection {
        &self.direction
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn last_state(&self) -> &StateVector {
        &self.samples.last().expect("trajectory is never empty").1
    }
}

/// Sample the evolution of `psi_i` at `n_samples` uniform times covering
/// `[0, t_end]` inclusive.
///
/// Panics if `n_samples < 2`, `t_end <= 0` or `omega <= 0`.
pub fn sample_trajectory(
    psi_i: &StateVector,
    dir: &FieldDirection,
    omega: f64,
    t_end: f64,
    n_samples: usize,
) -> Trajectory {
    assert!(n_samples >= 2, "need at least two samples, got {n_samples}");
    assert!(t_end > 0.0 && t_end.is_finite(), "t_end must be positive and finite");
    assert!(omega > 0.0, "omega must be positive");
    let last = (n_samples - 1) as f64;
    let samples = (0..n_samples)
        .map(|k| {
            let t = t_end * (k as f64) / last;
            (t, evolve(psi_i, dir, omega, t))
        })
        .collect();
    Trajectory { samples, direction: *dir, omega }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};

    const ZERO: C64 = C64::new(0.0, 0.0);
    const ONE: C64 = C64::new(1.0, 0.0);

    fn dir(theta: f64, phi: f64) -> FieldDirection {
        FieldDirection::new(theta, phi).unwrap()
    }

    fn max_entry_diff(a: &SpinMatrix, b: &SpinMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn state_diff(a: &StateVector, b: [C64; 3]) -> f64 {
        a.components()
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn closed_form_at_zero_angle_is_identity() {
        let u = closed_form_propagator(&dir(1.1, 0.4), 0.0);
        assert!(max_entry_diff(u.matrix(), &SpinMatrix::identity()) < 1e-15);
    }

    #[test]
    fn closed_form_half_turn_about_z() {
        // Field along +z for angle pi: diag(-1, 1, -1).
        let u = closed_form_propagator(&dir(0.0, 0.0), PI);
        let expected = SpinMatrix::from_diagonal(&Vector3::new(-ONE, ONE, -ONE));
        assert!(max_entry_diff(u.matrix(), &expected) < 1e-15);
    }

    #[test]
    fn both_routes_give_quarter_turn_phases_about_z() {
        // Angle pi/2 about +z multiplies the m = +1, 0, -1 amplitudes by
        // exp(-i pi/2), 1, exp(+i pi/2).
        let expected =
            SpinMatrix::from_diagonal(&Vector3::new(C64::new(0.0, -1.0), ONE, C64::new(0.0, 1.0)));
        let closed = closed_form_propagator(&dir(0.0, 0.0), FRAC_PI_2);
        assert!(max_entry_diff(closed.matrix(), &expected) < 1e-15);
        let spectral = spectral_propagator(&dir(0.0, 0.0), FRAC_PI_2).unwrap();
        assert!(max_entry_diff(spectral.matrix(), &expected) < 1e-12);
    }

    #[test]
    fn spectral_full_turn_is_identity() {
        let u = spectral_propagator(&dir(FRAC_PI_2, 0.0), TAU).unwrap();
        assert!(max_entry_diff(u.matrix(), &SpinMatrix::identity()) < 1e-12);
    }

    #[test]
    fn routes_agree_and_are_unitary_for_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        for _ in 0..200 {
            let d = dir(rng.gen_range(0.0..=PI), rng.gen_range(0.0..TAU));
            let omega_t = rng.gen_range(0.0..4.0 * PI);
            let closed = closed_form_propagator(&d, omega_t);
            let spectral = spectral_propagator(&d, omega_t).unwrap();
            assert!(
                max_entry_diff(closed.matrix(), spectral.matrix()) < 1e-12,
                "routes disagree at theta={} phi={} omega_t={}",
                d.theta(),
                d.phi(),
                omega_t
            );
            assert!(closed.unitarity_defect() < 1e-12);
            assert!(spectral.unitarity_defect() < 1e-12);
            assert!((closed.det_modulus() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn group_law_and_periodicity() {
        let d = dir(1.0, 2.0);
        let u_sum = closed_form_propagator(&d, 2.2);
        let u_prod = closed_form_propagator(&d, 1.3).matrix() * closed_form_propagator(&d, 0.9).matrix();
        assert!(max_entry_diff(&u_prod, u_sum.matrix()) < 1e-14);
        let u = closed_form_propagator(&d, 0.7);
        let u_shift = closed_form_propagator(&d, 0.7 + TAU);
        assert!(max_entry_diff(u.matrix(), u_shift.matrix()) < 1e-14);
    }

    #[test]
    fn large_angles_are_reduced() {
        let d = dir(0.9, 5.1);
        let big = 1.0e7_f64;
        let reduced = big.rem_euclid(TAU);
        assert_eq!(
            closed_form_propagator(&d, big).matrix(),
            closed_form_propagator(&d, reduced).matrix()
        );
    }

    #[test]
    fn scalar_identity_is_exact_on_valid_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        for _ in 0..100 {
            let x = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            assert_eq!(scalar_exp_identity(0, x).unwrap(), ONE);
            assert!((scalar_exp_identity(1, x).unwrap() - x.exp()).norm() < 1e-13);
            assert!((scalar_exp_identity(-1, x).unwrap() - (-x).exp()).norm() < 1e-13);
        }
        assert!(matches!(
            scalar_exp_identity(2, ONE),
            Err(Error::InvalidEigenvalueScalar { lambda: 2 })
        ));
    }

    #[test]
    fn evolve_at_zero_time_echoes_the_state() {
        let psi = StateVector::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8), ZERO).unwrap();
        let out = evolve(&psi, &dir(0.3, 1.2), 1.0, 0.0);
        assert!(state_diff(&out, psi.components()) < 1e-15);
    }

    #[test]
    fn equatorial_half_turn_sends_m_minus_to_m_plus() {
        // theta = pi/2, phi = 0, omega t = pi: the m = -1 state maps to
        // (-1, 0, 0), i.e. the m = +1 state up to sign.
        let out = evolve(&StateVector::sz_minus(), &dir(FRAC_PI_2, 0.0), 1.0, PI);
        assert!(state_diff(&out, [-ONE, ZERO, ZERO]) < 1e-15);
        assert!((out.fidelity(&StateVector::sz_plus()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn analytic_minus_matches_frozen_values() {
        // Quarter turn on the equator from m = -1.
        let s = analytic_state_minus(FRAC_PI_2, 0.0, FRAC_PI_2);
        let expected = [
            C64::new(-0.5, 0.0),
            C64::new(0.0, -FRAC_1_SQRT_2),
            C64::new(0.5, 0.0),
        ];
        assert!(state_diff(&s, expected) < 1e-15);
        // Zero angle leaves the basis state alone.
        assert!(state_diff(&analytic_state_minus(1.0, 2.0, 0.0), [ZERO, ZERO, ONE]) < 1e-15);
        // Half turn reproduces the evolve() endpoint above.
        assert!(state_diff(&analytic_state_minus(FRAC_PI_2, 0.0, PI), [-ONE, ZERO, ZERO]) < 1e-15);
    }

    #[test]
    fn analytic_zero_matches_frozen_values() {
        assert!(state_diff(&analytic_state_zero(0.7, 0.1, 0.0), [ZERO, ONE, ZERO]) < 1e-15);
        let s = analytic_state_zero(FRAC_PI_2, FRAC_PI_2, FRAC_PI_2);
        let expected = [C64::new(-FRAC_1_SQRT_2, 0.0), ZERO, C64::new(FRAC_1_SQRT_2, 0.0)];
        assert!(state_diff(&s, expected) < 1e-15);
        let s = analytic_state_zero(FRAC_PI_2, FRAC_PI_2, PI / 4.0);
        let expected = [C64::new(-0.5, 0.0), C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.5, 0.0)];
        assert!(state_diff(&s, expected) < 1e-12);
    }

    #[test]
    fn analytic_states_agree_with_direct_evolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        for _ in 0..200 {
            let theta = rng.gen_range(0.0..=PI);
            let phi = rng.gen_range(0.0..TAU);
            let omega_t = rng.gen_range(0.0..TAU);
            let d = dir(theta, phi);
            let evolved_minus = evolve(&StateVector::sz_minus(), &d, 1.0, omega_t);
            assert!(state_diff(&evolved_minus, analytic_state_minus(theta, phi, omega_t).components()) < 1e-13);
            let evolved_zero = evolve(&StateVector::sz_zero(), &d, 1.0, omega_t);
            assert!(state_diff(&evolved_zero, analytic_state_zero(theta, phi, omega_t).components()) < 1e-13);
        }
    }

    #[test]
    fn transverse_amplitude_identity() {
        // |z|^2 = 2 gamma (1 - gamma) ties the excursion depth to the
        // transverse amplitude.
        let mut rng = ChaCha8Rng::seed_from_u64(505);
        for _ in 0..500 {
            let (gamma, z) =
                zero_case_gamma_z(rng.gen_range(0.0..=PI), rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU));
            assert!((z.norm_sqr() - 2.0 * gamma * (1.0 - gamma)).abs() < 1e-14);
        }
    }

    #[test]
    fn trajectory_sampling_covers_endpoints_uniformly() {
        let traj = sample_trajectory(&StateVector::sz_minus(), &dir(FRAC_PI_2, 0.0), 1.0, PI, 5);
        let times: Vec<f64> = traj.samples().iter().map(|(t, _)| *t).collect();
        assert_eq!(times.len(), 5);
        assert_eq!(times[0], 0.0);
        assert!((times[4] - PI).abs() < 1e-15);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert!(state_diff(&traj.samples()[0].1, [ZERO, ZERO, ONE]) < 1e-15);
        for (_, s) in traj.samples() {
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
        // End of the half-turn: the m = +1 target up to phase.
        assert!((traj.last_state().fidelity(&StateVector::sz_plus()) - 1.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "at least two samples")]
    fn trajectory_needs_two_samples() {
        sample_trajectory(&StateVector::sz_minus(), &dir(1.0, 0.0), 1.0, 1.0, 1);
    }
}
