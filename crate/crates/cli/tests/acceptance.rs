//! Runs every acceptance criterion and prints one PASS/FAIL line each.
//!
//! Criterion 3 (Gaussian refinement of `exp(-x^2)`) does not hold: the
//! target is itself one of the network's Gaussians, so every grid fit is
//! exact up to the linear solve and the errors sit at the solver's noise
//! floor instead of decreasing. It is listed in `KNOWN_FAILURES`; any other
//! failure, or criterion 3 starting to pass, fails this test.

use std::collections::BTreeSet;

use compo_approx_lab::config::{ExperimentConfig, Preset};
use compo_approx_lab::verify::{run_verify, VerifyConfig};

const KNOWN_FAILURES: [u32; 1] = [3];

#[test]
fn acceptance_suite() {
    let cfg = VerifyConfig::defaults(Preset::Reduced);
    let out = run_verify(&cfg, |r| println!("{}", r.line())).expect("suite runs to completion");
    assert_eq!(out.results.len(), 10);
    let failed: BTreeSet<u32> = out.failed().into_iter().collect();
    let known: BTreeSet<u32> = KNOWN_FAILURES.into_iter().collect();
    println!("failed criteria: {failed:?}, known failures: {known:?}");
    assert_eq!(failed, known);
}
