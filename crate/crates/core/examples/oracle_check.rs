//! Randomized equivalence of the convolution core against the dense frame
//! convolution (below threshold) and the scalar per-event simulator (with
//! thresholds, leak and lower bounds), plus a broken subject that the suite
//! must reject.

use evsoc::oracle::{self, OracleConfig};

fn main() {
    let trials = std::env::args().nth(1).and_then(|t| t.parse().ok()).unwrap_or(200);
    let cfg = OracleConfig { trials, seed: 1, ..Default::default() };

    for report in [
        oracle::check_linearity(&cfg, oracle::core_membrane),
        oracle::check_thresholded(&cfg, oracle::core_spikes),
    ] {
        println!("{}: {}/{} exact", report.name, report.passed, report.trials);
        assert!(report.ok(), "{:?}", report.counterexample);
    }

    let broken = oracle::check_linearity(&cfg, oracle::off_by_one_membrane);
    let ce = broken.counterexample.expect("off-by-one sweep is detected");
    println!("off-by-one sweep rejected at trial {} (seed {}): {}", ce.trial, ce.seed, ce.description);
}
