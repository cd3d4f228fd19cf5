//! End-to-end acceptance gate: runs the full verification suite at its
//! default settings (181 x 360 direction grid, 1001 trajectory samples) and
//! requires every graded check to pass at its stated tolerance.
//!
//! Run with `--nocapture` to see one line per headline criterion.

use spinbrach::{run_verification, CheckStatus, VerifyOptions};

#[test]
fn full_suite_passes_at_default_settings() {
    let report = run_verification(&VerifyOptions::default());

    let mut all_pass = true;
    for criterion in 1..=10u8 {
        let checks: Vec<_> =
            report.checks.iter().filter(|c| c.criterion == criterion).collect();
        assert!(!checks.is_empty(), "criterion {criterion} has no checks");
        let failed: Vec<&str> = checks
            .iter()
            .filter(|c| c.status == CheckStatus::Failed)
            .map(|c| c.name.as_str())
            .collect();
        let verdict = if failed.is_empty() { "PASS" } else { "FAIL" };
        let names: Vec<String> = checks
            .iter()
            .map(|c| {
                let tag = match c.status {
                    CheckStatus::Passed => "",
                    CheckStatus::Failed => " [FAILED]",
                    CheckStatus::Info => " [info]",
                };
                format!("{}{}", c.name, tag)
            })
            .collect();
        println!("criterion {criterion:2}: {verdict} — {}", names.join(", "));
        if !failed.is_empty() {
            all_pass = false;
        }
    }

    for check in &report.checks {
        assert!(
            check.status != CheckStatus::Failed,
            "check {} failed: expected {:e}, measured {:e}, tolerance {:e} — {}",
            check.name,
            check.expected,
            check.measured,
            check.tolerance,
            check.detail,
        );
    }
    assert!(all_pass && report.passed, "verification report did not pass");

    // The subspace diagnostic for the transverse-target example is reported
    // but deliberately ungraded.
    let info: Vec<_> = report
        .checks
        .iter()
        .filter(|c| c.status == CheckStatus::Info)
        .collect();
    assert_eq!(info.len(), 1);
    assert_eq!(info[0].name, "example2_subspace_optimal");
}
