//! Acceptance suite: one test per criterion, each printing its pass/fail
//! line (visible with `--nocapture`; cargo's own per-test lines mirror the
//! verdicts). The criteria, tolerances and sample counts live in
//! `spectral_spde::acceptance`.

use spectral_spde::acceptance::{self, CriterionOutcome};

fn check(outcome: spectral_spde::Result<CriterionOutcome>) {
    let outcome = outcome.expect("criterion must run to completion");
    println!(
        "criterion {} ({}): {}",
        outcome.id,
        outcome.name,
        if outcome.pass { "PASS" } else { "FAIL" }
    );
    for line in &outcome.lines {
        println!("{line}");
    }
    assert!(outcome.pass, "criterion {} failed", outcome.id);
}

#[test]
fn criterion_1_assumption_suite() {
    check(acceptance::criterion_1_assumption_suite());
}

#[test]
fn criterion_2_ou_oracle() {
    check(acceptance::criterion_2_ou_oracle());
}

#[test]
fn criterion_3_bismut_vs_fd() {
    check(acceptance::criterion_3_bismut_vs_fd());
}

#[test]
fn criterion_4_coupling_identity() {
    check(acceptance::criterion_4_coupling_identity());
}

#[test]
fn criterion_5_girsanov() {
    check(acceptance::criterion_5_girsanov());
}

#[test]
fn criterion_6_energy_identity() {
    check(acceptance::criterion_6_energy_identity());
}

#[test]
fn criterion_7_inequality_suite() {
    check(acceptance::criterion_7_inequality_suite());
}

#[test]
fn criterion_8_determinism() {
    check(acceptance::criterion_8_determinism());
}
