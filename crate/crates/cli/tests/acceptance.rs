//! Criteria 1 to 10, one test each. The simulations run once, shared by all
//! tests; the first test to get there prints one PASS/FAIL line per criterion.

use schwarz_contact::acceptance::{run_acceptance, Criterion};
use std::io::Write;
use std::sync::OnceLock;

fn results() -> &'static [Criterion] {
    static RESULTS: OnceLock<Vec<Criterion>> = OnceLock::new();
    RESULTS.get_or_init(|| {
        let r = run_acceptance();
        // straight to the stderr handle so the harness does not capture it
        let mut err = std::io::stderr().lock();
        for c in &r {
            let _ = writeln!(err, "{}", c.line());
        }
        r
    })
}

fn criterion(id: usize) {
    let c = results().iter().find(|c| c.id == id).expect("criteria 1..=10");
    assert!(c.passed(), "{}", c.line());
}

#[test]
fn criterion_01_oracle_events() {
    criterion(1);
}

#[test]
fn criterion_02_position_accuracy() {
    criterion(2);
}

#[test]
fn criterion_03_energy_conservation() {
    criterion(3);
}

#[test]
fn criterion_04_kinetic_potential() {
    criterion(4);
}

#[test]
fn criterion_05_iteration_counts() {
    criterion(5);
}

#[test]
fn criterion_06_mesh_convergence() {
    criterion(6);
}

#[test]
fn criterion_07_explicit_chatter() {
    criterion(7);
}

#[test]
fn criterion_08_implicit_chatter() {
    criterion(8);
}

#[test]
fn criterion_09_property_suites() {
    criterion(9);
}

#[test]
fn criterion_10_mixed_time_steps() {
    criterion(10);
}
