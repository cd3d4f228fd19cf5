//! Arrival times and time-optimal field directions.
//!
//! A fixed-magnitude field advances every trajectory at the same angular
//! rate, so "fastest" reduces to "smallest rotation angle": the analytic
//! arrival times below follow from the closed-form trajectories, and the
//! numeric routines rediscover them by scanning real evolutions. Everything
//! is measured against the two-level quantum speed limit
//! `(2 / delta_omega) * arccos |<psi_i|psi_f>|`, which no control of this
//! kind can beat.

use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagator::evolve;
use crate::spin::{spin_projection, wrap_two_pi, FieldDirection, StateVector};

const I_UNIT: C64 = C64::new(0.0, 1.0);

/// Number of uniform intervals in a hitting-time scan (nodes = intervals + 1,
/// so simple fractions of a period land exactly on nodes).
const SCAN_INTERVALS: usize = 4096;

/// A scan node registers a dip only below `max(tol, BRACKET_FLOOR)`; the
/// floor keeps narrow dips visible even at very tight tolerances.
const BRACKET_FLOOR: f64 = 1e-6;

/// Hitting times are refined down to `1e-12 / omega`.
const TIME_RESOLUTION: f64 = 1e-12;

/// Relative slack accepted on closed domain boundaries such as
/// `sin^2(theta) = a_mod` before declaring the arrival unreachable.
const BOUNDARY_SLACK: f64 = 1e-12;

fn check_modulus(a_mod: f64) -> Result<()> {
    if !a_mod.is_finite() {
        return Err(Error::NonFinite { context: "target modulus" });
    }
    if !(0.0..=1.0).contains(&a_mod) {
        return Err(Error::InvalidModulus { a_mod });
    }
    Ok(())
}

/// Arrival time at a target with first-component modulus `a_mod`, reached
/// from the `m = -1` basis state with polar angle `theta`:
/// `(4 / delta_omega) * arcsin(sqrt(a_mod) / sin(theta))`.
///
/// The boundary `sin^2(theta) = a_mod` is accepted (quarter-period arcsine);
/// below it there is no arrival and the call fails.
pub fn arrival_time_minus(a_mod: f64, theta: f64, delta_omega: f64) -> Result<f64> {
    check_modulus(a_mod)?;
    debug_assert!(delta_omega > 0.0, "delta_omega must be positive");
    if a_mod == 0.0 {
        return Ok(0.0);
    }
    let sin_sq_theta = theta.sin().powi(2);
    let ratio_sq = a_mod / sin_sq_theta;
    if ratio_sq > 1.0 + BOUNDARY_SLACK {
        return Err(Error::NoArrivalTime { a_mod, sin_sq_theta });
    }
    Ok(4.0 / delta_omega * ratio_sq.sqrt().min(1.0).asin())
}

/// Minimum of [`arrival_time_minus`] over the polar angle, attained on the
/// equator: `(4 / delta_omega) * arcsin(sqrt(a_mod))`.
pub fn minimal_time_minus(a_mod: f64, delta_omega: f64) -> Result<f64> {
    check_modulus(a_mod)?;
    debug_assert!(delta_omega > 0.0, "delta_omega must be positive");
    Ok(4.0 / delta_omega * a_mod.sqrt().asin())
}

/// Arrival time from the `m = 0` basis state at the equal-weight transverse
/// target: `(4 / delta_omega) * arcsin(1 / (sqrt(2) sin(theta)))`, defined
/// for `sin(theta) >= 1/sqrt(2)` (boundary included).
pub fn arrival_time_zero(theta: f64, delta_omega: f64) -> Result<f64> {
    debug_assert!(delta_omega > 0.0, "delta_omega must be positive");
    let sin_sq_theta = theta.sin().powi(2);
    // The excursion depth gamma = sin^2(theta) sin^2(omega t / 2) must
    // reach 1/2, so sin^2(theta) plays against a modulus of 1/2.
    let ratio_sq = 0.5 / sin_sq_theta;
    if ratio_sq > 1.0 + BOUNDARY_SLACK {
        return Err(Error::NoArrivalTime { a_mod: 0.5, sin_sq_theta });
    }
    Ok(4.0 / delta_omega * ratio_sq.sqrt().min(1.0).asin())
}

/// Phase of the transverse amplitude `z = |z| e^{i(phi - alpha)}` of the
/// `m = 0` trajectory, resolved into the correct quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlignmentAngle {
    /// `atan2(cos(omega t / 2), cos(theta) sin(omega t / 2))`, in `(-pi, pi]`.
    pub value: f64,
    /// Both atan2 arguments vanished (equator at half turn, where `z = 0`);
    /// `value` is then a bare convention.
    pub degenerate: bool,
}

/// Alignment angle `alpha` with `tan(alpha) = cos(omega t / 2) /
/// (cos(theta) sin(omega t / 2))`, quadrant fixed by the two-argument
/// arctangent so the transverse amplitude keeps a non-negative modulus.
///
/// Only defined for `omega_t` strictly inside `(0, 2*pi)`: at the endpoints
/// the transverse amplitude vanishes identically and has no phase.
pub fn alignment_alpha(theta: f64, omega_t: f64) -> Result<AlignmentAngle> {
    if !(omega_t > 0.0 && omega_t < std::f64::consts::TAU) {
        return Err(Error::AlignmentDomain { omega_t });
    }
    let (sin_half, cos_half) = (omega_t / 2.0).sin_cos();
    let y = cos_half;
    let x = theta.cos() * sin_half;
    let degenerate = y.abs() < 1e-12 && x.abs() < 1e-12;
    Ok(AlignmentAngle { value: y.atan2(x), degenerate })
}

/// How a [`SolveResult`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveMethod {
    #[serde(rename = "analytic")]
    Analytic,
    #[serde(rename = "grid+refine")]
    GridRefine,
}

/// A direction-grid node whose refined hitting time ties the optimum.
#[derive(Debug, Clone, Serialize)]
pub struct GridNode {
    pub theta_index: usize,
    pub phi_index: usize,
    pub theta: f64,
    pub phi: f64,
    pub hitting_time: f64,
}

/// Optimal control and its quality measures.
#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub theta_star: f64,
    pub phi_star: f64,
    pub t_star: f64,
    /// Fidelity actually reached at `t_star`, measured by direct evolution.
    pub fidelity_achieved: f64,
    /// Two-level quantum speed limit for the same pair of states; always
    /// `<= t_star` up to numeric slack.
    pub speed_limit: f64,
    pub method: SolveMethod,
    /// All grid nodes whose hitting time ties the best within a relative
    /// `1e-6`, making degeneracies (for example a free azimuth) visible.
    /// Empty for analytic solves.
    pub near_optimal_nodes: Vec<GridNode>,
}

/// Time-optimal field for steering the `m = 0` basis state into the
/// equal-weight transverse target `(-1, 0, 1)/sqrt(2)`, solved analytically
/// for a given polar angle: the arrival time comes from
/// [`arrival_time_zero`] and the azimuth from [`alignment_alpha`], so the
/// transverse amplitude arrives real and the match is exact. The returned
/// fidelity is re-measured by direct evolution.
pub fn solve_example2(delta_omega: f64, theta: f64) -> Result<SolveResult> {
    assert!(delta_omega > 0.0, "delta_omega must be positive");
    let t_star = arrival_time_zero(theta, delta_omega)?;
    let omega = delta_omega / 2.0;
    let alpha = alignment_alpha(theta, omega * t_star)?;
    let phi_star = wrap_two_pi(alpha.value);
    let dir = FieldDirection::new(theta, phi_star)?;
    let psi_i = StateVector::sz_zero();
    let psi_f = example2_target();
    let reached = evolve(&psi_i, &dir, omega, t_star);
    Ok(SolveResult {
        theta_star: theta,
        phi_star,
        t_star,
        fidelity_achieved: reached.fidelity(&psi_f),
        speed_limit: speed_limit_bound(&psi_i, &psi_f, delta_omega),
        method: SolveMethod::Analytic,
        near_optimal_nodes: Vec::new(),
    })
}

/// The equal-weight transverse target `(-1, 0, 1) / sqrt(2)`.
pub(crate) fn example2_target() -> StateVector {
    let f = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::new(C64::new(-f, 0.0), C64::new(0.0, 0.0), C64::new(f, 0.0))
        .expect("target is normalized")
}

/// Two-level quantum speed limit `(2 / delta_omega) * arccos |<psi_i|psi_f>|`:
/// the shortest time any fixed-magnitude control of this strength needs to
/// connect the two states.
pub fn speed_limit_bound(psi_i: &StateVector, psi_f: &StateVector, delta_omega: f64) -> f64 {
    debug_assert!(delta_omega > 0.0, "delta_omega must be positive");
    let overlap = psi_i.inner_product(psi_f).norm().min(1.0);
    2.0 / delta_omega * overlap.acos()
}

/// Overlap of `psi_f` with the evolving state as a tiny trig polynomial:
/// `<psi_f|psi(t)> = d0 - 2 sin^2(wt/2) d2 - i sin(wt) d1` with
/// `d_k = <psi_f| M^k |psi_i>`. Same closed form as the propagator, just
/// pre-contracted so time scans cost a couple of flops per sample.
struct OverlapPoly {
    d0: C64,
    d1: C64,
    d2: C64,
}

impl OverlapPoly {
    fn new(psi_i: &StateVector, psi_f: &StateVector, dir: &FieldDirection) -> Self {
        let m = spin_projection(dir);
        let w1: Vector3<C64> = m * psi_i.as_vector();
        let w2: Vector3<C64> = m * w1;
        OverlapPoly {
            d0: psi_f.as_vector().dotc(psi_i.as_vector()),
            d1: psi_f.as_vector().dotc(&w1),
            d2: psi_f.as_vector().dotc(&w2),
        }
    }

    fn infidelity(&self, sin_sq_half: f64, sin_full: f64) -> f64 {
        let overlap = self.d0 - self.d2 * (2.0 * sin_sq_half) - I_UNIT * self.d1 * sin_full;
        (1.0 - overlap.norm_sqr()).max(0.0)
    }

    fn infidelity_at_angle(&self, omega_t: f64) -> f64 {
        let (sh, ch) = (omega_t / 2.0).sin_cos();
        self.infidelity(sh * sh, 2.0 * sh * ch)
    }

    /// d/d(omega_t) of the infidelity, in closed form. Near a fidelity-1 dip
    /// the infidelity itself is quadratic and drowns in roundoff, while its
    /// derivative crosses zero with O(1) slope — root-finding on it locates
    /// dips far more precisely than comparison-based minimization.
    fn infidelity_derivative(&self, omega_t: f64) -> f64 {
        let (s, c) = omega_t.sin_cos();
        let overlap = self.d0 - self.d2 * (1.0 - c) - I_UNIT * self.d1 * s;
        let rate = -self.d2 * s - I_UNIT * self.d1 * c;
        -2.0 * (overlap.conj() * rate).re
    }
}

/// Golden-section minimizer; deterministic, no derivatives.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, resolution: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while b - a > resolution && iterations < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    0.5 * (a + b)
}

/// Localize the dip inside `[lo, hi]` and return `(time, infidelity)`.
/// Prefers bisection on the closed-form infidelity derivative (accurate to
/// the time resolution even when the dip bottoms out below roundoff) and
/// falls back to golden-section when the bracket carries no sign change.
fn refine_dip(poly: &OverlapPoly, omega: f64, lo: f64, hi: f64) -> (f64, f64) {
    let resolution = TIME_RESOLUTION / omega;
    let d_lo = poly.infidelity_derivative(omega * lo);
    let d_hi = poly.infidelity_derivative(omega * hi);
    let t_dip = if d_lo <= 0.0 && d_hi >= 0.0 {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            if b - a <= resolution {
                break;
            }
            let mid = 0.5 * (a + b);
            if poly.infidelity_derivative(omega * mid) <= 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    } else {
        golden_min(|t| poly.infidelity_at_angle(omega * t), lo, hi, resolution)
    };
    (t_dip, poly.infidelity_at_angle(omega * t_dip))
}

/// Core of the hitting-time search. Returns the refined time of the first
/// dip that reaches `tol` (if any) and the smallest infidelity seen anywhere
/// in the scan. `table`, when given, holds `(sin^2(wt/2), sin(wt))` for the
/// scan nodes and lets grid searches share one trig table.
fn hitting_scan(
    poly: &OverlapPoly,
    omega: f64,
    tol: f64,
    t_max: f64,
    table: Option<&[(f64, f64)]>,
) -> (Option<f64>, f64) {
    let n = SCAN_INTERVALS;
    let threshold = tol.max(BRACKET_FLOOR);
    let node_time = |k: usize| t_max * (k as f64) / (n as f64);
    let node_infidelity = |k: usize| match table {
        Some(tab) => {
            let (s2, s) = tab[k];
            poly.infidelity(s2, s)
        }
        None => poly.infidelity_at_angle(omega * node_time(k)),
    };

    let mut best = f64::INFINITY;
    let mut k = 0usize;
    while k <= n {
        let f = node_infidelity(k);
        if f < best {
            best = f;
        }
        if f > threshold {
            k += 1;
            continue;
        }
        // t = 0 can only be beaten by itself.
        if k == 0 && f <= tol {
            return (Some(0.0), best);
        }
        // A dip's below-threshold region usually spans several nodes.
        // Collect the whole run, then refine each of its local minima in
        // time order; the first one reaching tol is the hitting time.
        let run_start = k;
        let mut run = vec![f];
        let mut run_end = k;
        while run_end < n {
            let f_next = node_infidelity(run_end + 1);
            if f_next < best {
                best = f_next;
            }
            if f_next > threshold {
                break;
            }
            run_end += 1;
            run.push(f_next);
        }
        for i in 0..run.len() {
            let left_ok = i == 0 || run[i] <= run[i - 1];
            let right_ok = i + 1 == run.len() || run[i] <= run[i + 1];
            if !(left_ok && right_ok) {
                continue;
            }
            let node = run_start + i;
            let lo = node_time(node.saturating_sub(1));
            let hi = node_time((node + 1).min(n));
            let (t_dip, f_dip) = refine_dip(poly, omega, lo, hi);
            if f_dip < best {
                best = f_dip;
            }
            if f_dip <= tol {
                return (Some(t_dip), best);
            }
        }
        k = run_end + 1;
    }
    (None, best)
}

/// Earliest time in `[0, t_max]` at which evolving `psi_i` along `dir`
/// matches `psi_f` to infidelity `tol`, refined to a time resolution of
/// `1e-12 / omega`. Returns `None` when no scan node ever drops below
/// `max(tol, 1e-6)`.
pub fn first_hitting_time(
    psi_i: &StateVector,
    psi_f: &StateVector,
    dir: &FieldDirection,
    omega: f64,
    tol: f64,
    t_max: f64,
) -> Option<f64> {
    assert!(omega > 0.0, "omega must be positive");
    assert!(t_max > 0.0 && t_max.is_finite(), "t_max must be positive and finite");
    assert!(tol > 0.0, "tol must be positive");
    let poly = OverlapPoly::new(psi_i, psi_f, dir);
    hitting_scan(&poly, omega, tol, t_max, None).0
}

/// Hitting times of every node of a deterministic direction grid:
/// `n_theta` polar nodes covering `[0, pi]` inclusive and `n_phi` azimuth
/// nodes covering `[0, 2*pi)`.
#[derive(Debug, Clone)]
pub struct GridScan {
    thetas: Vec<f64>,
    phis: Vec<f64>,
    hits: Vec<Option<f64>>,
    best_infidelity: f64,
    t_max: f64,
}

impl GridScan {
    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Smallest infidelity seen across all nodes and scan times.
    pub fn best_infidelity(&self) -> f64 {
        self.best_infidelity
    }

    pub fn hit(&self, theta_index: usize, phi_index: usize) -> Option<f64> {
        self.hits[theta_index * self.phis.len() + phi_index]
    }

    /// Best node by hitting time; ties resolve to the smaller polar index,
    /// then the smaller azimuth index.
    pub fn best(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.thetas.len() {
            for j in 0..self.phis.len() {
                if let Some(t) = self.hit(i, j) {
                    if best.map_or(true, |(_, _, tb)| t < tb) {
                        best = Some((i, j, t));
                    }
                }
            }
        }
        best
    }

    /// Nodes tying the best hitting time within a relative `1e-6`.
    pub fn near_optimal_nodes(&self) -> Vec<GridNode> {
        let Some((_, _, t_best)) = self.best() else {
            return Vec::new();
        };
        let window = 1e-6 * t_best + 1e-12;
        let mut nodes = Vec::new();
        for i in 0..self.thetas.len() {
            for j in 0..self.phis.len() {
                if let Some(t) = self.hit(i, j) {
                    if t - t_best <= window {
                        nodes.push(GridNode {
                            theta_index: i,
                            phi_index: j,
                            theta: self.thetas[i],
                            phi: self.phis[j],
                            hitting_time: t,
                        });
                    }
                }
            }
        }
        nodes
    }
}

/// Run the hitting-time search on every node of an `n_theta` x `n_phi`
/// direction grid. Nodes are independent and evaluated in parallel; results
/// are reduced in index order, so the outcome does not depend on threading.
pub fn grid_hitting_scan(
    psi_i: &StateVector,
    psi_f: &StateVector,
    delta_omega: f64,
    grid: (usize, usize),
    tol: f64,
    t_max: f64,
) -> Result<GridScan> {
    let (n_theta, n_phi) = grid;
    if n_theta < 8 || n_phi < 8 {
        return Err(Error::GridTooSmall { n_theta, n_phi });
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidTolerance { tol });
    }
    assert!(delta_omega > 0.0, "delta_omega must be positive");
    assert!(t_max > 0.0 && t_max.is_finite(), "t_max must be positive and finite");
    let omega = delta_omega / 2.0;

    let thetas: Vec<f64> = (0..n_theta)
        .map(|i| i as f64 / (n_theta - 1) as f64 * std::f64::consts::PI)
        .collect();
    let phis: Vec<f64> = (0..n_phi)
        .map(|j| j as f64 / n_phi as f64 * std::f64::consts::TAU)
        .collect();

    // One trig table shared by every node of the scan.
    let table: Vec<(f64, f64)> = (0..=SCAN_INTERVALS)
        .map(|k| {
            let angle = omega * (t_max * (k as f64) / (SCAN_INTERVALS as f64));
            let (sh, ch) = (angle / 2.0).sin_cos();
            (sh * sh, 2.0 * sh * ch)
        })
        .collect();

    let per_node: Vec<(Option<f64>, f64)> = (0..n_theta * n_phi)
        .into_par_iter()
        .map(|idx| {
            let dir = FieldDirection::new(thetas[idx / n_phi], phis[idx % n_phi])
                .expect("grid angles are in range");
            let poly = OverlapPoly::new(psi_i, psi_f, &dir);
            hitting_scan(&poly, omega, tol, t_max, Some(&table))
        })
        .collect();

    let best_infidelity = per_node.iter().map(|(_, f)| *f).fold(f64::INFINITY, f64::min);
    let hits = per_node.into_iter().map(|(hit, _)| hit).collect();
    Ok(GridScan { thetas, phis, hits, best_infidelity, t_max })
}

/// Time-optimal field direction by deterministic grid search over
/// `[0, pi] x [0, 2*pi)` followed by coordinate descent, scanning times up
/// to `t_max = 4 * pi / omega`.
///
/// Fails with [`Error::UnreachableBySearch`] (carrying the closest approach)
/// when no grid node reaches the target.
pub fn optimize_field(
    psi_i: &StateVector,
    psi_f: &StateVector,
    delta_omega: f64,
    grid: (usize, usize),
    tol: f64,
) -> Result<SolveResult> {
    let omega = delta_omega / 2.0;
    let t_max = 4.0 * std::f64::consts::PI / omega;
    let scan = grid_hitting_scan(psi_i, psi_f, delta_omega, grid, tol, t_max)?;
    let Some((best_i, best_j, scan_time)) = scan.best() else {
        return Err(Error::UnreachableBySearch { best_infidelity: scan.best_infidelity() });
    };

    let mut theta = scan.thetas()[best_i];
    let mut phi = scan.phis()[best_j];
    let mut t_star = scan_time;
    let mut step_theta = std::f64::consts::PI / (grid.0 - 1) as f64;
    let mut step_phi = std::f64::consts::TAU / grid.1 as f64;

    let hitting_at = |theta: f64, phi: f64| -> Option<f64> {
        let dir = FieldDirection::new(theta, phi).ok()?;
        first_hitting_time(psi_i, psi_f, &dir, omega, tol, t_max)
    };

    // Coordinate descent with shrinking steps; only strict improvements
    // move, so ties (e.g. a free azimuth) stay at the grid node.
    for _ in 0..64 {
        let mut improved = false;
        for candidate in [theta - step_theta, theta + step_theta] {
            if !(0.0..=std::f64::consts::PI).contains(&candidate) {
                continue;
            }
            if let Some(t) = hitting_at(candidate, phi) {
                if t < t_star {
                    theta = candidate;
                    t_star = t;
                    improved = true;
                }
            }
        }
        for candidate in [phi - step_phi, phi + step_phi] {
            let wrapped = wrap_two_pi(candidate);
            if let Some(t) = hitting_at(theta, wrapped) {
                if t < t_star {
                    phi = wrapped;
                    t_star = t;
                    improved = true;
                }
            }
        }
        if !improved {
            step_theta /= 2.0;
            step_phi /= 2.0;
        }
    }

    let dir = FieldDirection::new(theta, phi).expect("descent keeps angles in range");
    let fidelity_achieved = evolve(psi_i, &dir, omega, t_star).fidelity(psi_f);
    Ok(SolveResult {
        theta_star: theta,
        phi_star: phi,
        t_star,
        fidelity_achieved,
        speed_limit: speed_limit_bound(psi_i, psi_f, delta_omega),
        method: SolveMethod::GridRefine,
        near_optimal_nodes: scan.near_optimal_nodes(),
    })
}
