//! Cross-module property tests over randomized controls and states.

use proptest::prelude::*;
use spinbrach::{
    analytic_state_minus, analytic_state_zero, arrival_time_minus, classify_target,
    closed_form_propagator, evolve, first_hitting_time, modulus_conditions, orthonormal_span,
    projection_residual, sample_trajectory, spectral_propagator, speed_limit_bound,
    FieldDirection, StateVector,
};
use std::f64::consts::{PI, TAU};

fn angles() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0..=PI, 0.0..TAU, 0.0..TAU)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The closed-form propagator and the eigendecomposition route agree,
    /// and both are unitary.
    #[test]
    fn propagator_routes_agree((theta, phi, omega_t) in angles()) {
        let dir = FieldDirection::new(theta, phi).unwrap();
        let closed = closed_form_propagator(&dir, omega_t);
        let spectral = spectral_propagator(&dir, omega_t).unwrap();
        let diff = (closed.matrix() - spectral.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max);
        prop_assert!(diff < 1e-12, "routes differ by {diff}");
        prop_assert!(closed.unitarity_defect() < 1e-12);
    }

    /// Every state generated by the closed-form evolution from the m = -1
    /// basis state obeys the modulus law and is classified reachable.
    #[test]
    fn generated_states_are_reachable((theta, phi, omega_t) in angles()) {
        let psi = analytic_state_minus(theta, phi, omega_t);
        let (r_b, r_c) = modulus_conditions(&psi.canonicalize());
        prop_assert!(r_b < 1e-12 && r_c < 1e-12);
        let report = classify_target(&psi, 2.0, 1e-9).unwrap();
        prop_assert!(report.reachable, "residual = {}", report.phase_residual);
        prop_assert!(report.phase_residual < 1e-9);
    }

    /// The closed-form trajectory from the m = -1 state matches direct
    /// propagator application at every sampled instant.
    #[test]
    fn analytic_states_match_direct_evolution((theta, phi, omega_t) in angles()) {
        let dir = FieldDirection::new(theta, phi).unwrap();
        let via_matrix = evolve(&StateVector::sz_minus(), &dir, 1.0, omega_t);
        let via_formula = analytic_state_minus(theta, phi, omega_t);
        prop_assert!(via_matrix.fidelity(&via_formula) > 1.0 - 1e-12);
        let via_matrix = evolve(&StateVector::sz_zero(), &dir, 1.0, omega_t);
        let via_formula = analytic_state_zero(theta, phi, omega_t);
        prop_assert!(via_matrix.fidelity(&via_formula) > 1.0 - 1e-12);
    }

    /// The first-component modulus reached at the analytic arrival time is
    /// the modulus that was asked for.
    #[test]
    fn arrival_time_reaches_the_requested_modulus(
        theta in 0.3..(PI - 0.3),
        frac in 0.01..0.99_f64,
    ) {
        let a = frac * theta.sin().powi(2);
        let t = arrival_time_minus(a, theta, 2.0).unwrap();
        let psi = analytic_state_minus(theta, 0.0, t); // omega = 1
        let reached = psi.components()[0].norm();
        prop_assert!((reached - a).abs() < 1e-12);
    }

    /// A scanned hitting time never beats the two-level speed limit.
    #[test]
    fn hitting_never_beats_the_speed_limit((theta, phi, omega_t) in angles()) {
        let dir = FieldDirection::new(theta, phi).unwrap();
        let target = analytic_state_minus(theta, phi, omega_t);
        let bound = speed_limit_bound(&StateVector::sz_minus(), &target, 2.0);
        if let Some(t) =
            first_hitting_time(&StateVector::sz_minus(), &target, &dir, 1.0, 1e-9, TAU)
        {
            prop_assert!(t >= bound - 1e-9, "t = {t}, bound = {bound}");
        }
    }

    /// Residual and in-span weight decompose every trajectory sample.
    #[test]
    fn residual_decomposition_is_complete((theta, phi, omega_t) in angles()) {
        prop_assume!(omega_t > 0.1);
        let dir = FieldDirection::new(theta, phi).unwrap();
        let psi_i = StateVector::sz_minus();
        let psi_f = StateVector::sz_plus();
        let basis = orthonormal_span(&psi_i, &psi_f).unwrap();
        let trajectory = sample_trajectory(&psi_i, &dir, 1.0, omega_t, 17);
        for (_, psi) in trajectory.samples() {
            let r = projection_residual(psi, &basis);
            let in_span = psi.fidelity(basis.e1()) + psi.fidelity(basis.e2());
            prop_assert!((r * r + in_span - 1.0).abs() < 1e-12);
        }
    }
}
