//! Sliding-window readout over a scripted spike schedule: per-tick averages
//! as exact fractions, threshold flags and the latched arg-max class.

use evsoc::readout::{Readout, ReadoutConfig, ReadoutMode};

fn main() {
    let mut cfg = ReadoutConfig::new(4, ReadoutMode::MovingAverage(3));
    cfg.thresholds = Some(vec![2, 2, 2, 2]);
    let mut readout = Readout::new(cfg);

    // spikes per class in each tick interval
    let schedule = [[3, 0, 1, 0], [3, 0, 4, 0], [0, 6, 4, 0], [0, 0, 0, 0], [0, 0, 0, 9]];
    for bin in schedule {
        for (class, &n) in bin.iter().enumerate() {
            for _ in 0..n {
                readout.accumulate(class as u16).expect("class in range");
            }
        }
        let out = readout.on_tick();
        let values: Vec<String> = out.numerators.iter().map(|n| format!("{n}/{}", out.denominator)).collect();
        println!(
            "tick {}: bin {:?} -> [{}] over {:?} max {}",
            out.tick,
            bin,
            values.join(", "),
            out.over_threshold,
            out.max_class
        );
        assert_eq!(readout.latched(), &out);
    }
    assert!(readout.accumulate(7).is_err());
    println!("dropped out-of-range spikes: {}", readout.dropped());
}
