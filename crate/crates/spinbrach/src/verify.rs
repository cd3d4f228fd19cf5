//! Self-contained verification suite.
//!
//! Runs every headline claim of the toolkit as a named, tolerance-bearing
//! check: oracle equivalence of the two propagator constructions, the
//! worked minimal-time examples, the reachability law, analytic-versus-
//! numeric time agreement, optimizer correctness, the subspace diagnostic,
//! and the conservation laws. All randomness is seeded, so a report is a
//! pure function of its options.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};

use num_complex::Complex64 as C64;

use crate::brachistochrone::{
    arrival_time_minus, arrival_time_zero, first_hitting_time, grid_hitting_scan,
    minimal_time_minus, optimize_field, solve_example2, speed_limit_bound,
};
use crate::propagator::{
    analytic_state_minus, closed_form_propagator, sample_trajectory, scalar_exp_identity,
    spectral_propagator,
};
use crate::reachability::{classify_target, modulus_conditions};
use crate::spin::{FieldDirection, StateVector};
use crate::subspace::{orthonormal_span, trajectory_residual_profile};

/// Outcome of a single check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Passed,
    Failed,
    /// Measured and reported, but deliberately not graded.
    Info,
}

/// One named check with its yardstick and what was actually measured.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// Index of the headline claim this check belongs to (1..=10).
    pub criterion: u8,
    /// Where the expected value comes from: "analytic", "exact identity",
    /// "independent oracle", "grid search", or "measured".
    pub source: &'static str,
    pub expected: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub status: CheckStatus,
    pub detail: String,
}

/// Full report: the checks in execution order plus the overall verdict.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    /// True iff every graded (non-informational) check passed.
    pub passed: bool,
}

impl VerifyReport {
    pub fn counts(&self) -> (usize, usize, usize) {
        let passed = self.checks.iter().filter(|c| c.status == CheckStatus::Passed).count();
        let failed = self.checks.iter().filter(|c| c.status == CheckStatus::Failed).count();
        let info = self.checks.iter().filter(|c| c.status == CheckStatus::Info).count();
        (passed, failed, info)
    }
}

/// Suite configuration.
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Level spacing; defaults to 2 so omega = 1.
    pub delta_omega: f64,
    /// Trajectory samples for the subspace checks.
    pub samples: usize,
    /// Direction grid for the search-based checks.
    pub grid: (usize, usize),
    /// When set, replaces the tolerance of the pure numeric-agreement
    /// checks (oracle equivalence, scalar identity, moduli law,
    /// conservation laws). Search-resolution checks keep their own
    /// tolerances, which state resolutions rather than noise floors.
    pub tolerance_override: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { delta_omega: 2.0, samples: 1001, grid: (181, 360), tolerance_override: None }
    }
}

/// Decision tolerance used by the searches inside the suite.
const DECISION_TOL: f64 = 1e-9;

struct Suite {
    options: VerifyOptions,
    checks: Vec<Check>,
}

impl Suite {
    fn graded(
        &mut self,
        name: &str,
        criterion: u8,
        source: &'static str,
        expected: f64,
        measured: f64,
        tolerance: f64,
        pass: bool,
        detail: String,
    ) {
        self.checks.push(Check {
            name: name.to_owned(),
            criterion,
            source,
            expected,
            measured,
            tolerance,
            status: if pass { CheckStatus::Passed } else { CheckStatus::Failed },
            detail,
        });
    }

    /// Graded check of the common shape "measured deviation stays within
    /// tolerance", with the tolerance subject to the override.
    fn deviation(
        &mut self,
        name: &str,
        criterion: u8,
        source: &'static str,
        expected: f64,
        measured: f64,
        default_tol: f64,
        detail: String,
    ) {
        let tolerance = self.options.tolerance_override.unwrap_or(default_tol);
        let pass = (measured - expected).abs() <= tolerance;
        self.graded(name, criterion, source, expected, measured, tolerance, pass, detail);
    }

    fn info(
        &mut self,
        name: &str,
        criterion: u8,
        expected: f64,
        measured: f64,
        detail: String,
    ) {
        self.checks.push(Check {
            name: name.to_owned(),
            criterion,
            source: "measured",
            expected,
            measured,
            tolerance: f64::NAN,
            status: CheckStatus::Info,
            detail,
        });
    }
}

fn random_direction(rng: &mut ChaCha8Rng) -> FieldDirection {
    FieldDirection::new(rng.gen_range(0.0..=PI), rng.gen_range(0.0..TAU))
        .expect("sampled angles are in range")
}

fn random_state(rng: &mut ChaCha8Rng) -> StateVector {
    loop {
        let raw = nalgebra::Vector3::new(
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        );
        let norm = raw.norm();
        if norm > 1e-3 {
            return StateVector::from_vector(raw.unscale(norm)).expect("normalized by construction");
        }
    }
}

fn max_entry_diff(a: &crate::spin::SpinMatrix, b: &crate::spin::SpinMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Run the whole suite. Panics only on internal failures that make the
/// report itself meaningless (e.g. the spectral oracle refusing a matrix).
pub fn run_verification(options: &VerifyOptions) -> VerifyReport {
    let mut suite = Suite { options: options.clone(), checks: Vec::new() };
    let delta_omega = options.delta_omega;
    let omega = delta_omega / 2.0;

    // --- Criterion 1: the two propagator constructions agree. -------------
    {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut max_diff = 0.0_f64;
        let mut max_defect = 0.0_f64;
        for _ in 0..1000 {
            let dir = random_direction(&mut rng);
            let omega_t = rng.gen_range(0.0..4.0 * PI);
            let closed = closed_form_propagator(&dir, omega_t);
            let spectral = spectral_propagator(&dir, omega_t)
                .expect("spin projection is always diagonalizable");
            max_diff = max_diff.max(max_entry_diff(closed.matrix(), spectral.matrix()));
            max_defect = max_defect.max(closed.unitarity_defect());
            max_defect = max_defect.max(spectral.unitarity_defect());
        }
        suite.deviation(
            "propagator_oracle_equivalence",
            1,
            "independent oracle",
            0.0,
            max_diff,
            1e-12,
            "max entrywise difference between the closed-form propagator and an \
             eigendecomposition-based construction over 1000 random controls"
                .into(),
        );
        suite.deviation(
            "propagator_unitarity",
            1,
            "exact identity",
            0.0,
            max_defect,
            1e-12,
            "max entrywise deviation of U^dagger U from the identity for both \
             constructions over the same 1000 controls"
                .into(),
        );
    }

    // --- Criterion 2: three-eigenvalue scalar exponential identity. -------
    {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut max_diff = 0.0_f64;
        for _ in 0..100 {
            let x = C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            for lambda in [-1, 0, 1] {
                let via_identity =
                    scalar_exp_identity(lambda, x).expect("lambda is in the supported set");
                let direct = (x * lambda as f64).exp();
                max_diff = max_diff.max((via_identity - direct).norm());
            }
        }
        suite.deviation(
            "scalar_exponential_identity",
            2,
            "exact identity",
            0.0,
            max_diff,
            1e-13,
            "finite exponential-interpolation identity for eigenvalues {-1, 0, 1} \
             against the direct complex exponential on 100 random arguments"
                .into(),
        );
    }

    // --- Criterion 3: full transfer between extreme basis states. ---------
    let psi_i1 = StateVector::sz_minus();
    let psi_f1 = StateVector::sz_plus();
    {
        let t_max = 4.0 * PI / omega;
        let scan = grid_hitting_scan(&psi_i1, &psi_f1, delta_omega, options.grid, DECISION_TOL, t_max)
            .expect("default grid is valid");
        let mut worst_theta_dev = 0.0_f64;
        let mut hit_nodes = 0usize;
        let mut best_time = f64::INFINITY;
        for (i, &theta) in scan.thetas().iter().enumerate() {
            for j in 0..scan.phis().len() {
                if let Some(t) = scan.hit(i, j) {
                    hit_nodes += 1;
                    worst_theta_dev = worst_theta_dev.max((theta - FRAC_PI_2).abs());
                    best_time = best_time.min(t);
                }
            }
        }
        suite.graded(
            "example1_theta_uniqueness",
            3,
            "grid search",
            0.0,
            worst_theta_dev,
            1e-12,
            hit_nodes > 0 && worst_theta_dev <= 1e-12,
            format!(
                "all {hit_nodes} grid nodes reaching the target lie on the equator; \
                 measured value is the largest polar deviation among them"
            ),
        );
        let expected_t = 2.0 * PI / delta_omega;
        let rel = (best_time - expected_t).abs() / expected_t;
        suite.graded(
            "example1_optimal_time",
            3,
            "analytic",
            expected_t,
            best_time,
            1e-6,
            best_time.is_finite() && rel <= 1e-6,
            "best grid hitting time against the analytic minimal time for full \
             transfer (tolerance is relative)"
                .into(),
        );
        let analytic_t = minimal_time_minus(1.0, delta_omega).expect("modulus 1 is valid");
        let bound = speed_limit_bound(&psi_i1, &psi_f1, delta_omega);
        suite.graded(
            "example1_speed_limit_factor",
            3,
            "exact identity",
            0.0,
            analytic_t - 2.0 * bound,
            0.0,
            analytic_t == 2.0 * bound,
            "the analytic minimal time for full transfer equals exactly twice the \
             two-level speed limit, as a bit-level floating-point identity"
                .into(),
        );
    }

    // --- Criterion 4: the optimal full-transfer trajectory leaves the span.
    {
        let dir = FieldDirection::new(FRAC_PI_2, 0.0).expect("equator is valid");
        let t_end = 2.0 * PI / delta_omega;
        let trajectory = sample_trajectory(&psi_i1, &dir, omega, t_end, options.samples);
        let basis = orthonormal_span(&psi_i1, &psi_f1).expect("distinct basis states");
        let profile = trajectory_residual_profile(&trajectory, &basis);
        suite.graded(
            "example1_span_departure",
            4,
            "analytic",
            FRAC_1_SQRT_2,
            profile.max_residual(),
            1e-9,
            (profile.max_residual() - FRAC_1_SQRT_2).abs() <= 1e-9,
            "largest out-of-span amplitude along the optimal full-transfer \
             trajectory; the midpoint puts exactly half the probability outside \
             the span of the endpoints"
                .into(),
        );
    }

    // --- Criterion 5: the transverse-target example saturates the bound. --
    {
        let solution = solve_example2(delta_omega, FRAC_PI_2).expect("equator is admissible");
        let expected_t = PI / delta_omega;
        suite.graded(
            "example2_minimal_time",
            5,
            "analytic",
            expected_t,
            solution.t_star,
            1e-9,
            (solution.t_star - expected_t).abs() <= 1e-9,
            "equatorial arrival time at the equal-weight transverse target".into(),
        );
        suite.graded(
            "example2_phase_alignment",
            5,
            "analytic",
            1.0,
            solution.fidelity_achieved,
            1e-10,
            solution.fidelity_achieved >= 1.0 - 1e-10,
            "choosing the azimuth as the terminal alignment angle lands the \
             trajectory on the target (fidelity must reach 1 - 1e-10)"
                .into(),
        );
        suite.graded(
            "example2_speed_limit_saturation",
            5,
            "analytic",
            0.0,
            (solution.t_star - solution.speed_limit).abs(),
            1e-12,
            (solution.t_star - solution.speed_limit).abs() <= 1e-12,
            "the equatorial arrival time meets the two-level speed limit exactly"
                .into(),
        );
    }

    // --- Criterion 6: the modulus law and structural rejection. -----------
    {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut worst = 0.0_f64;
        for _ in 0..500 {
            let psi = analytic_state_minus(
                rng.gen_range(0.0..=PI),
                rng.gen_range(0.0..TAU),
                rng.gen_range(0.0..TAU),
            );
            let (r_b, r_c) = modulus_conditions(&psi.canonicalize());
            worst = worst.max(r_b).max(r_c);
        }
        suite.deviation(
            "reachability_moduli_law",
            6,
            "analytic",
            0.0,
            worst,
            1e-12,
            "largest violation of the two modulus constraints over 500 states \
             generated by the closed-form evolution"
                .into(),
        );

        let mut rejected = 0usize;
        let mut classified_unreachable = 0usize;
        while rejected < 500 {
            let psi = random_state(&mut rng);
            let (r_b, r_c) = modulus_conditions(&psi.canonicalize());
            if r_b.max(r_c) > 1e-3 {
                rejected += 1;
                let report = classify_target(&psi, delta_omega, DECISION_TOL)
                    .expect("tolerance is valid");
                if !report.reachable && report.witness.is_none() {
                    classified_unreachable += 1;
                }
            }
        }
        suite.graded(
            "reachability_rejection",
            6,
            "analytic",
            500.0,
            classified_unreachable as f64,
            0.0,
            classified_unreachable == 500,
            "500 random states violating the modulus law by more than 1e-3 must \
             all be classified unreachable"
                .into(),
        );
    }

    // --- Criterion 7: analytic arrival times match numeric hitting times. -
    {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t_max = 2.0 * PI / omega;
        let mut worst_rel = 0.0_f64;
        for _ in 0..100 {
            let theta = rng.gen_range(0.3..PI - 0.3);
            let sin_sq = theta.sin().powi(2);
            let a = rng.gen_range(0.05..0.95 * sin_sq);
            let phi = rng.gen_range(0.0..TAU);
            let t_analytic =
                arrival_time_minus(a, theta, delta_omega).expect("modulus below sin^2(theta)");
            let dir = FieldDirection::new(theta, phi).expect("angles in range");
            let target = analytic_state_minus(theta, phi, omega * t_analytic);
            let t_numeric =
                first_hitting_time(&psi_i1, &target, &dir, omega, DECISION_TOL, t_max)
                    .expect("target generated on the trajectory");
            worst_rel = worst_rel.max((t_numeric - t_analytic).abs() / t_analytic);
        }
        suite.graded(
            "hitting_time_agreement_minus",
            7,
            "analytic",
            0.0,
            worst_rel,
            1e-9,
            worst_rel <= 1e-9,
            "worst relative disagreement between the closed-form arrival time \
             from the m = -1 state and the scanned first hitting time over 100 \
             random (modulus, polar angle) draws"
                .into(),
        );

        let psi_i2 = StateVector::sz_zero();
        let target2 = crate::brachistochrone::example2_target();
        let mut worst_rel = 0.0_f64;
        for k in 0..20 {
            let lo = FRAC_PI_2 / 2.0 + 0.03;
            let hi = 3.0 * FRAC_PI_2 / 2.0 - 0.03;
            let theta = lo + (hi - lo) * (k as f64) / 19.0;
            let t_analytic =
                arrival_time_zero(theta, delta_omega).expect("angle is admissible");
            let alpha = crate::brachistochrone::alignment_alpha(theta, omega * t_analytic)
                .expect("arrival angle is interior");
            let dir = FieldDirection::new(theta, crate::spin::wrap_two_pi(alpha.value))
                .expect("angles in range");
            let t_numeric =
                first_hitting_time(&psi_i2, &target2, &dir, omega, DECISION_TOL, t_max)
                    .expect("aligned azimuth reaches the target");
            worst_rel = worst_rel.max((t_numeric - t_analytic).abs() / t_analytic);
        }
        suite.graded(
            "hitting_time_agreement_zero",
            7,
            "analytic",
            0.0,
            worst_rel,
            1e-9,
            worst_rel <= 1e-9,
            "worst relative disagreement between the closed-form arrival time \
             from the m = 0 state and the scanned first hitting time over 20 \
             admissible polar angles"
                .into(),
        );
    }

    // --- Criterion 8: grid optimizer recovers the equator, respects bound.
    {
        let mut worst_theta_dev = 0.0_f64;
        let mut worst_margin = f64::INFINITY;
        for a in [0.25_f64, 0.5, 1.0] {
            let omega_t = 2.0 * a.sqrt().asin();
            let target = analytic_state_minus(FRAC_PI_2, 0.0, omega_t);
            let solution = optimize_field(&psi_i1, &target, delta_omega, options.grid, DECISION_TOL)
                .expect("equatorial targets are reachable");
            worst_theta_dev = worst_theta_dev.max((solution.theta_star - FRAC_PI_2).abs());
            worst_margin = worst_margin.min(solution.t_star - solution.speed_limit);
        }
        let grid_step = PI / (options.grid.0 - 1) as f64;
        suite.graded(
            "optimizer_theta_recovery",
            8,
            "grid search",
            0.0,
            worst_theta_dev,
            grid_step,
            worst_theta_dev <= grid_step,
            "largest polar-angle miss of the grid optimizer on three equatorial \
             targets; tolerance is one grid step"
                .into(),
        );
        suite.graded(
            "optimizer_speed_limit_bound",
            8,
            "analytic",
            0.0,
            worst_margin,
            1e-9,
            worst_margin >= -1e-9,
            "smallest margin of optimizer time over the two-level speed limit; \
             must never be below -1e-9"
                .into(),
        );
    }

    // --- Criterion 9: subspace diagnostic for the transverse-target example.
    {
        let psi_i2 = StateVector::sz_zero();
        let target2 = crate::brachistochrone::example2_target();
        let basis = orthonormal_span(&psi_i2, &target2).expect("distinct states");

        let optimal = solve_example2(delta_omega, FRAC_PI_2).expect("equator is admissible");
        let dir = FieldDirection::new(FRAC_PI_2, optimal.phi_star).expect("angles in range");
        let trajectory = sample_trajectory(&psi_i2, &dir, omega, optimal.t_star, options.samples);
        let profile = trajectory_residual_profile(&trajectory, &basis);
        suite.info(
            "example2_subspace_optimal",
            9,
            0.0,
            profile.max_residual(),
            format!(
                "measured max out-of-span amplitude of the equatorial optimal \
                 trajectory; {} the claim that the evolution leaves the span of \
                 its endpoints (informational, not graded)",
                if profile.max_residual() > 0.01 { "supports" } else { "contradicts" }
            ),
        );

        let theta_off = 2.0 * PI / 5.0;
        let off = solve_example2(delta_omega, theta_off).expect("angle is admissible");
        let dir = FieldDirection::new(theta_off, off.phi_star).expect("angles in range");
        let trajectory = sample_trajectory(&psi_i2, &dir, omega, off.t_star, options.samples);
        let profile = trajectory_residual_profile(&trajectory, &basis);
        suite.graded(
            "example2_subspace_off_optimal",
            9,
            "measured",
            0.01,
            profile.max_residual(),
            0.0,
            profile.max_residual() > 0.01,
            "off the equator the alignment angle drifts with time, so the \
             trajectory must leave the span measurably (threshold, not a \
             tolerance: measured must exceed expected)"
                .into(),
        );
    }

    // --- Criterion 10: conservation laws. ---------------------------------
    {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut worst_norm = 0.0_f64;
        for _ in 0..20 {
            let dir = random_direction(&mut rng);
            let psi0 = random_state(&mut rng);
            let t_end = rng.gen_range(0.1..4.0 * PI / omega);
            for k in 0..101 {
                let t = t_end * (k as f64) / 100.0;
                let propagator = closed_form_propagator(&dir, omega * t);
                let raw = propagator.matrix() * psi0.as_vector();
                worst_norm = worst_norm.max((raw.norm() - 1.0).abs());
            }
        }
        suite.deviation(
            "trajectory_norm_conservation",
            10,
            "exact identity",
            0.0,
            worst_norm,
            1e-12,
            "largest norm drift of un-renormalized evolved states across 20 \
             random trajectories of 101 samples each"
                .into(),
        );

        let mut worst_group = 0.0_f64;
        let mut worst_period = 0.0_f64;
        for _ in 0..200 {
            let dir = random_direction(&mut rng);
            let (a1, a2) = (rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU));
            let combined = closed_form_propagator(&dir, a1 + a2);
            let product = closed_form_propagator(&dir, a1).matrix()
                * closed_form_propagator(&dir, a2).matrix();
            worst_group = worst_group.max(max_entry_diff(combined.matrix(), &product));
            let shifted = closed_form_propagator(&dir, a1 + TAU);
            worst_period = worst_period.max(max_entry_diff(
                closed_form_propagator(&dir, a1).matrix(),
                shifted.matrix(),
            ));
        }
        suite.deviation(
            "propagator_group_law",
            10,
            "exact identity",
            0.0,
            worst_group,
            1e-12,
            "U(a+b) versus U(a) U(b), max entrywise difference over 200 random \
             cases"
                .into(),
        );
        suite.deviation(
            "propagator_periodicity",
            10,
            "exact identity",
            0.0,
            worst_period,
            1e-12,
            "U(a + 2*pi) versus U(a), max entrywise difference over 200 random \
             cases"
                .into(),
        );
    }

    let passed = suite.checks.iter().all(|c| c.status != CheckStatus::Failed);
    VerifyReport { checks: suite.checks, passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_suite_passes() {
        // A reduced grid keeps this unit test fast; the full default grid is
        // exercised by the acceptance suite.
        let options = VerifyOptions { grid: (19, 36), samples: 201, ..VerifyOptions::default() };
        let report = run_verification(&options);
        let (passed, failed, info) = report.counts();
        for check in &report.checks {
            assert!(
                check.status != CheckStatus::Failed,
                "check {} failed: expected {}, measured {}, tolerance {}: {}",
                check.name,
                check.expected,
                check.measured,
                check.tolerance,
                check.detail
            );
        }
        assert!(report.passed);
        assert_eq!(info, 1, "exactly one informational check");
        assert_eq!(passed + failed + info, report.checks.len());
        // All ten headline criteria are represented.
        for criterion in 1..=10 {
            assert!(
                report.checks.iter().any(|c| c.criterion == criterion),
                "criterion {criterion} has no check"
            );
        }
    }

    #[test]
    fn tightened_tolerance_fails_oracle_equivalence() {
        let options = VerifyOptions {
            grid: (19, 36),
            samples: 201,
            tolerance_override: Some(1e-17),
            ..VerifyOptions::default()
        };
        let report = run_verification(&options);
        assert!(!report.passed);
        let oracle = report
            .checks
            .iter()
            .find(|c| c.name == "propagator_oracle_equivalence")
            .expect("check exists");
        assert_eq!(oracle.status, CheckStatus::Failed);
        assert_eq!(oracle.tolerance, 1e-17);
    }
}
