//! Latency along chains of 3x3 layers and neuron-unit utilization under
//! synthetic loads.

use evsoc::config::{parse_topology, TopologyOptions};
use evsoc::sim::{account_throughput, deepest_path, estimate_latency, TimingModel, UpdateLoad};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let timing = TimingModel::default();
    let options = TopologyOptions { same_padding: true, ..Default::default() };
    for layers in 0..=9 {
        let mut topo = String::from("32x32x2");
        for _ in 0..layers {
            topo.push_str("-4C3");
        }
        if layers == 0 {
            println!("0 layers: {:.1} ns", timing.latency_for_layers(0));
            continue;
        }
        let net = parse_topology(&topo, options)?;
        let path = deepest_path(&net).expect("chain reaches the readout");
        println!("{layers} layer(s): {:.1} ns", estimate_latency(&net, &timing, &path)?);
    }

    // pooling leaves latency unchanged
    let pooled = parse_topology("32x32x2-4C3-P2-4C3", options)?;
    let path = deepest_path(&pooled).expect("chain reaches the readout");
    println!("2 layers with pooling: {:.1} ns", estimate_latency(&pooled, &timing, &path)?);

    println!("capacity {:.3e} updates/s per core", timing.core_capacity());
    for updates in [0u64, 15_000_000, 30_000_000, 31_000_000] {
        let report = account_throughput(&UpdateLoad::single(0, updates, 1e9), &timing);
        let c = report.cores[0];
        let delay = c.queue_delay_ns.map_or("unbounded".to_string(), |d| format!("{d:.1} ns"));
        println!(
            "{updates:>10} updates/s: utilization {:.4}, queueing {delay}{}",
            c.utilization,
            if c.saturated { ", saturated" } else { "" }
        );
    }
    Ok(())
}
