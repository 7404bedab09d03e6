//! Runs a synthetic 128x128 stream through the four-layer smoke network:
//! 2x pooling, a 48x48 region of interest, merged polarity, three
//! convolution cores and a fully connected core into the readout.

use std::time::Instant;

use evsoc::config::{load_network, validate_network};
use evsoc::io::synthetic_stream;
use evsoc::router::RouteTable;
use evsoc::sim::{account_throughput, update_load, SimOptions, Simulator, TickSchedule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/smoke.json");
    let net = load_network(config)?;
    let report = validate_network(&net, &net.effective_profile());
    assert!(report.is_ok(), "{report}");

    let events = synthetic_stream(1, 100_000, 128, 128, 5);
    let options = SimOptions { seed: 7, record_trace: false, ..Default::default() };
    let ticks = TickSchedule::readout(10_000).with_leak(1_000);

    let start = Instant::now();
    let (outputs, trace) = Simulator::new(&net, &options)?.run(&events, &ticks)?;
    let elapsed = start.elapsed();

    let s = &trace.summary;
    println!("{} input events in {:.2?}", s.input_events, elapsed);
    println!("preproc passed {} dropped {}", s.preproc_passed, s.preproc_dropped);
    for (id, c) in &s.cores {
        println!("core{id}: {} events in, {} updates, {} spikes", c.events_in, c.updates(), c.spikes);
    }
    println!("readout spikes {}", s.readout_spikes);
    println!("router deliveries {}", s.ledger.total_deliveries());
    println!("ledger conserved: {}", s.ledger.is_conserved(&RouteTable::from_config(&net)));

    if let Some(last) = outputs.last() {
        let values: Vec<String> = (0..last.numerators.len()).map(|c| format!("{:.2}", last.value(c))).collect();
        println!("last readout (tick {}): [{}] -> class {}", last.tick, values.join(", "), last.max_class);
    }
    let util = account_throughput(&update_load(s), &Default::default());
    for c in &util.cores {
        println!("core{} utilization {:.5}", c.core, c.utilization);
    }
    Ok(())
}
