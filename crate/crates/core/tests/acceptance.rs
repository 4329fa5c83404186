//! Acceptance criteria 1–11, one test each. Every test prints a single
//! PASS/FAIL line.

use std::io::Write;

use schro_core::verify::*;

fn report(r: CriterionReport) {
    // straight to the handle: the harness only captures `print!`
    let _ = writeln!(std::io::stdout().lock(), "{}", r.line());
    assert!(r.passed, "criterion {} failed", r.id);
}

#[test]
fn criterion_01_scalar_ground_state_one_dimension() {
    report(criterion_1());
}

#[test]
fn criterion_02_principal_eigenvalue_anchor() {
    report(criterion_2(&[1, 2, 3]));
}

#[test]
fn criterion_03_closed_form_spectrum() {
    report(criterion_3());
}

#[test]
fn criterion_04_bifurcation_roots_closed_form() {
    report(criterion_4());
}

#[test]
fn criterion_05_eigenvalue_monotonicity_and_bounds() {
    report(criterion_5());
}

#[test]
fn criterion_06_synchronized_branch_residuals() {
    report(criterion_6(DEFAULT_SEED));
}

#[test]
fn criterion_07_region_classifier() {
    report(criterion_7());
}

#[test]
fn criterion_08_nehari_ground_state() {
    report(criterion_8(DEFAULT_SEED));
}

#[test]
fn criterion_09_morse_index_jumps() {
    report(criterion_9());
}

#[test]
fn criterion_10_branch_switching_and_positivity() {
    report(criterion_10());
}

#[test]
fn criterion_11_asymptotics_toward_minus_one() {
    report(criterion_11());
}
