//! One test per acceptance criterion. Fixtures are shared across tests and
//! built on first use; each test prints a single PASS/FAIL line.
//!
//! Run with `cargo test -p boltzgap-core --test acceptance -- --nocapture`.

use boltzgap_core::acceptance::Suite;
use std::io::Write;
use std::sync::OnceLock;

const SEED: u64 = 20_240_611;

fn suite() -> &'static Suite {
    static SUITE: OnceLock<Suite> = OnceLock::new();
    SUITE.get_or_init(|| Suite::new(SEED).expect("presets are valid"))
}

fn check(id: usize) {
    let r = suite().criterion(id);
    // Straight to the handle so the line shows even when libtest captures output.
    writeln!(std::io::stdout().lock(), "{}", r.line()).unwrap();
    assert!(r.pass, "{}", r.line());
}

#[test]
fn criterion_01_gap_bound() {
    check(1);
}

#[test]
fn criterion_02_null_space() {
    check(2);
}

#[test]
fn criterion_03_conservation_and_h_theorem() {
    check(3);
}

#[test]
fn criterion_04_rate_equals_gap() {
    check(4);
}

#[test]
fn criterion_05_eigenvector_transfer() {
    check(5);
}

#[test]
fn criterion_06_delta_approximation() {
    check(6);
}

#[test]
fn criterion_07_semigroup_decay() {
    check(7);
}

#[test]
fn criterion_08_resolvent_bounds() {
    check(8);
}

#[test]
fn criterion_09_povzner_and_moments() {
    check(9);
}

#[test]
fn criterion_10_grid_honesty() {
    check(10);
}
