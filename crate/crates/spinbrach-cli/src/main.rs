//! `spinbrach` — command-line driver for the spin-1 fixed-magnitude
//! time-optimal control toolkit.
//!
//! Subcommands: `solve` (grid optimizer), `evolve` (single state), and
//! `trajectory` (time series) for forward problems, `reach` for the
//! reachable-set decision, and `verify` for the full self-checking suite.
//!
//! Exit codes: 0 success, 1 input error, 2 target unreachable by the grid
//! search, 3 target structurally unreachable, 4 verification failure.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};
use spinbrach::{
    classify_target, evolve, optimize_field, orthonormal_span, projection_residual,
    run_verification, sample_trajectory, CheckStatus, Complex64, FieldDirection, SpanBasis,
    StateVector, VerifyOptions, VerifyReport,
};
use std::fmt::Write as _;
use std::process::ExitCode;

const EXIT_INPUT: u8 = 1;
const EXIT_UNREACHABLE_SEARCH: u8 = 2;
const EXIT_UNREACHABLE_STRUCTURAL: u8 = 3;
const EXIT_VERIFY_FAILED: u8 = 4;

/// Decision tolerance used when `--tolerance` is not given.
const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "spinbrach",
    version,
    about = "Time-optimal control of a spin-1 moment in a magnetic field of fixed magnitude"
)]
struct Cli {
    #[command(flatten)]
    config: ConfigOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigOpts {
    /// Level spacing between the outer energy levels; the propagator phase
    /// advances as (delta_omega / 2) * t.
    #[arg(long, global = true, default_value_t = 2.0)]
    delta_omega: f64,

    /// Fidelity decision tolerance for solve/reach; for verify it overrides
    /// the numeric-agreement tolerances instead.
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Number of uniformly spaced trajectory samples (including endpoints).
    #[arg(long, global = true, default_value_t = 1001)]
    samples: usize,

    /// Direction grid as THETA,PHI node counts.
    #[arg(long, global = true, value_parser = parse_grid, default_value = "181,360")]
    grid: (usize, usize),

    /// Output format. Defaults: JSON everywhere, except trajectory (CSV)
    /// and verify (plain-text table).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Find the time-optimal field direction steering PSI_I to PSI_F.
    Solve {
        /// Initial state spec: inline JSON `{"components":[[re,im],...]}`
        /// or a path to a file containing one.
        psi_i: String,
        /// Final state spec (same format).
        psi_f: String,
    },
    /// Evolve PSI_I under the field DIRECTION for a time TIME.
    Evolve {
        /// Initial state spec.
        psi_i: String,
        /// Direction spec: inline JSON {"theta":...,"phi":...} or a file path.
        direction: String,
        /// Evolution time.
        #[arg(allow_negative_numbers = true)]
        time: f64,
        /// Also report the residual outside the span of PSI_I and STATE.
        #[arg(long, value_name = "STATE")]
        span_final: Option<String>,
        /// Interpret direction angles as degrees instead of radians.
        #[arg(long)]
        degrees: bool,
    },
    /// Print the sampled trajectory of PSI_I under DIRECTION up to T_END.
    Trajectory {
        /// Initial state spec.
        psi_i: String,
        /// Direction spec.
        direction: String,
        /// End of the sampled time window (> 0).
        #[arg(allow_negative_numbers = true)]
        t_end: f64,
        /// Add a residual column: distance outside the span of PSI_I and STATE.
        #[arg(long, value_name = "STATE")]
        span_final: Option<String>,
        /// Interpret direction angles as degrees instead of radians.
        #[arg(long)]
        degrees: bool,
    },
    /// Decide whether PSI_F is reachable from the m = -1 basis state.
    Reach {
        /// Target state spec.
        psi_f: String,
    },
    /// Run the complete self-verification suite.
    Verify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{err}");
            return ExitCode::SUCCESS;
        }
        // Flag misuse is an input error: report it on the contract's code.
        Err(err) => {
            eprint!("{err}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    configure_threads()?;
    validate_config(&cli.config)?;
    let cfg = &cli.config;
    match cli.command {
        Command::Solve { psi_i, psi_f } => cmd_solve(cfg, &psi_i, &psi_f),
        Command::Evolve { psi_i, direction, time, span_final, degrees } => {
            cmd_evolve(cfg, &psi_i, &direction, time, span_final.as_deref(), degrees)
        }
        Command::Trajectory { psi_i, direction, t_end, span_final, degrees } => {
            cmd_trajectory(cfg, &psi_i, &direction, t_end, span_final.as_deref(), degrees)
        }
        Command::Reach { psi_f } => cmd_reach(cfg, &psi_f),
        Command::Verify => cmd_verify(cfg),
    }
}

/// Honor `SPINBRACH_THREADS`: a positive value caps the worker pool, while
/// 0, empty, or unset keeps the implementation default.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("SPINBRACH_THREADS") else {
        return Ok(());
    };
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Ok(());
    }
    let n: usize = trimmed
        .parse()
        .map_err(|_| format!("SPINBRACH_THREADS: '{raw}' is not a non-negative integer"))?;
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("SPINBRACH_THREADS: {e}"))
}

fn validate_config(cfg: &ConfigOpts) -> Result<(), String> {
    if !(cfg.delta_omega.is_finite() && cfg.delta_omega > 0.0) {
        return Err(format!("--delta-omega: {} must be positive and finite", cfg.delta_omega));
    }
    if let Some(tol) = cfg.tolerance {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(format!("--tolerance: {tol} outside (0, 1)"));
        }
    }
    if cfg.samples < 2 {
        return Err(format!("--samples: need at least 2, got {}", cfg.samples));
    }
    if cfg.grid.0 < 8 || cfg.grid.1 < 8 {
        return Err(format!(
            "--grid: {}x{} too small; need at least 8 nodes per axis",
            cfg.grid.0, cfg.grid.1
        ));
    }
    Ok(())
}

fn parse_grid(raw: &str) -> Result<(usize, usize), String> {
    let (t, p) = raw
        .split_once(',')
        .ok_or_else(|| format!("expected THETA,PHI node counts, got '{raw}'"))?;
    let n_theta =
        t.trim().parse::<usize>().map_err(|e| format!("theta node count '{t}': {e}"))?;
    let n_phi = p.trim().parse::<usize>().map_err(|e| format!("phi node count '{p}': {e}"))?;
    Ok((n_theta, n_phi))
}

// ---------------------------------------------------------------------------
// Input specs
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct StateSpec {
    components: [[f64; 2]; 3],
}

#[derive(Deserialize)]
struct DirectionSpec {
    theta: f64,
    phi: f64,
}

/// A spec argument is inline JSON when it starts with `{`, otherwise a path.
fn read_spec(field: &str, raw: &str) -> Result<String, String> {
    if raw.trim_start().starts_with('{') {
        Ok(raw.to_owned())
    } else {
        std::fs::read_to_string(raw).map_err(|e| format!("{field}: cannot read '{raw}': {e}"))
    }
}

fn parse_state(field: &str, raw: &str) -> Result<StateVector, String> {
    let text = read_spec(field, raw)?;
    let spec: StateSpec = serde_json::from_str(&text).map_err(|e| format!("{field}: {e}"))?;
    let [c0, c1, c2] = spec.components.map(|[re, im]| Complex64::new(re, im));
    StateVector::new(c0, c1, c2).map_err(|e| format!("{field}: {e}"))
}

fn parse_direction(field: &str, raw: &str, degrees: bool) -> Result<FieldDirection, String> {
    let text = read_spec(field, raw)?;
    let spec: DirectionSpec = serde_json::from_str(&text).map_err(|e| format!("{field}: {e}"))?;
    let (theta, phi) = if degrees {
        (spec.theta.to_radians(), spec.phi.to_radians())
    } else {
        (spec.theta, spec.phi)
    };
    FieldDirection::new(theta, phi).map_err(|e| format!("{field}: {e}"))
}

fn parse_span_basis(
    psi_i: &StateVector,
    span_final: Option<&str>,
) -> Result<Option<SpanBasis>, String> {
    let Some(raw) = span_final else {
        return Ok(None);
    };
    let state = parse_state("span-final", raw)?;
    orthonormal_span(psi_i, &state).map(Some).map_err(|e| format!("span-final: {e}"))
}

// ---------------------------------------------------------------------------
// Output rendering
// ---------------------------------------------------------------------------

/// Components in the same `[[re,im],...]` shape the input specs use, so any
/// printed state can be fed straight back in.
fn components_value(state: &StateVector) -> Value {
    let comps: Vec<[f64; 2]> = state.components().iter().map(|z| [z.re, z.im]).collect();
    json!(comps)
}

fn to_pretty(value: &impl serde::Serialize) -> Result<String, String> {
    serde_json::to_string_pretty(value).map_err(|e| e.to_string())
}

/// Reject `--format csv` for the JSON-only commands.
fn require_json(cfg: &ConfigOpts, command: &str) -> Result<(), String> {
    if cfg.format == Some(Format::Csv) {
        return Err(format!("--format: csv is not supported for {command}; use json"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_solve(cfg: &ConfigOpts, psi_i_raw: &str, psi_f_raw: &str) -> Result<ExitCode, String> {
    require_json(cfg, "solve")?;
    let psi_i = parse_state("psi_i", psi_i_raw)?;
    let psi_f = parse_state("psi_f", psi_f_raw)?;
    let tol = cfg.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    match optimize_field(&psi_i, &psi_f, cfg.delta_omega, cfg.grid, tol) {
        Ok(result) => {
            let mut report = serde_json::to_value(&result).map_err(|e| e.to_string())?;
            report["t_star_delta_omega"] = json!(result.t_star * cfg.delta_omega);
            report["speed_limit_delta_omega"] = json!(result.speed_limit * cfg.delta_omega);
            report["t_star_over_speed_limit"] = json!(result.t_star / result.speed_limit);
            println!("{}", to_pretty(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Err(spinbrach::Error::UnreachableBySearch { best_infidelity }) => {
            eprintln!(
                "target unreachable by search: best infidelity {best_infidelity:.3e} \
                 (moduli violating the reachability law cannot be fixed by a longer scan)"
            );
            Ok(ExitCode::from(EXIT_UNREACHABLE_SEARCH))
        }
        Err(e) => Err(e.to_string()),
    }
}

fn cmd_evolve(
    cfg: &ConfigOpts,
    psi_i_raw: &str,
    dir_raw: &str,
    time: f64,
    span_final: Option<&str>,
    degrees: bool,
) -> Result<ExitCode, String> {
    require_json(cfg, "evolve")?;
    if !time.is_finite() {
        return Err(format!("time: {time} is not finite"));
    }
    let psi_i = parse_state("psi_i", psi_i_raw)?;
    let dir = parse_direction("direction", dir_raw, degrees)?;
    let basis = parse_span_basis(&psi_i, span_final)?;
    let omega = cfg.delta_omega / 2.0;
    let state = evolve(&psi_i, &dir, omega, time);
    let mut report = json!({
        "t": time,
        "omega_t": omega * time,
        "t_delta_omega": time * cfg.delta_omega,
        "direction": {"theta": dir.theta(), "phi": dir.phi()},
        "components": components_value(&state),
    });
    if let Some(basis) = &basis {
        report["residual"] = json!(projection_residual(&state, basis));
    }
    println!("{}", to_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_trajectory(
    cfg: &ConfigOpts,
    psi_i_raw: &str,
    dir_raw: &str,
    t_end: f64,
    span_final: Option<&str>,
    degrees: bool,
) -> Result<ExitCode, String> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(format!("t_end: {t_end} must be positive and finite"));
    }
    let psi_i = parse_state("psi_i", psi_i_raw)?;
    let dir = parse_direction("direction", dir_raw, degrees)?;
    let basis = parse_span_basis(&psi_i, span_final)?;
    let omega = cfg.delta_omega / 2.0;
    let trajectory = sample_trajectory(&psi_i, &dir, omega, t_end, cfg.samples);
    let last = trajectory.last_state().clone();
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::with_capacity(trajectory.samples().len() * 220);
            out.push_str("t,omega_t,re0,im0,re1,im1,re2,im2,fidelity_final");
            if basis.is_some() {
                out.push_str(",residual");
            }
            out.push('\n');
            for (t, psi) in trajectory.samples() {
                let c = psi.components();
                let _ = write!(
                    out,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    t,
                    omega * t,
                    c[0].re,
                    c[0].im,
                    c[1].re,
                    c[1].im,
                    c[2].re,
                    c[2].im,
                    psi.fidelity(&last),
                );
                if let Some(basis) = &basis {
                    let _ = write!(out, ",{:.16e}", projection_residual(psi, basis));
                }
                out.push('\n');
            }
            print!("{out}");
        }
        Format::Json => {
            let rows: Vec<Value> = trajectory
                .samples()
                .iter()
                .map(|(t, psi)| {
                    let mut row = json!({
                        "t": t,
                        "omega_t": omega * t,
                        "components": components_value(psi),
                        "fidelity_final": psi.fidelity(&last),
                    });
                    if let Some(basis) = &basis {
                        row["residual"] = json!(projection_residual(psi, basis));
                    }
                    row
                })
                .collect();
            let report = json!({
                "direction": {"theta": dir.theta(), "phi": dir.phi()},
                "delta_omega": cfg.delta_omega,
                "t_end": t_end,
                "t_end_delta_omega": t_end * cfg.delta_omega,
                "rows": rows,
            });
            println!("{}", to_pretty(&report)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_reach(cfg: &ConfigOpts, psi_f_raw: &str) -> Result<ExitCode, String> {
    require_json(cfg, "reach")?;
    let target = parse_state("psi_f", psi_f_raw)?;
    let tol = cfg.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let report = classify_target(&target, cfg.delta_omega, tol).map_err(|e| e.to_string())?;
    let mut value = serde_json::to_value(&report).map_err(|e| e.to_string())?;
    if let Some((theta, phi, omega_t)) = report.witness {
        let t = 2.0 * omega_t / cfg.delta_omega;
        value["witness"] = json!({
            "theta": theta,
            "phi": phi,
            "omega_t": omega_t,
            "t": t,
            "t_delta_omega": t * cfg.delta_omega,
        });
    }
    println!("{}", to_pretty(&value)?);
    Ok(if report.reachable {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_UNREACHABLE_STRUCTURAL)
    })
}

fn cmd_verify(cfg: &ConfigOpts) -> Result<ExitCode, String> {
    if cfg.format == Some(Format::Csv) {
        return Err("--format: csv is not supported for verify; use json".into());
    }
    let options = VerifyOptions {
        delta_omega: cfg.delta_omega,
        samples: cfg.samples,
        grid: cfg.grid,
        tolerance_override: cfg.tolerance,
    };
    let report = run_verification(&options);
    match cfg.format {
        Some(Format::Json) => println!("{}", to_pretty(&report)?),
        _ => print_verify_table(&report),
    }
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VERIFY_FAILED) })
}

fn print_verify_table(report: &VerifyReport) {
    for check in &report.checks {
        match check.status {
            CheckStatus::Info => println!(
                "INFO criterion {:>2}  {:<34} measured {:e} ({})",
                check.criterion, check.name, check.measured, check.detail
            ),
            status => println!(
                "{} criterion {:>2}  {:<34} expected {:e} [{}]  measured {:e}  tolerance {:e}",
                if status == CheckStatus::Passed { "PASS" } else { "FAIL" },
                check.criterion,
                check.name,
                check.expected,
                check.source,
                check.measured,
                check.tolerance,
            ),
        }
    }
    let (passed, failed, info) = report.counts();
    println!(
        "{} graded checks: {} passed, {} failed; {} informational",
        passed + failed,
        passed,
        failed,
        info
    );
}
