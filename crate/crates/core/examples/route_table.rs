//! Star-router wiring: a diamond network where two cores share a destination
//! through channel shifts, the event ledger after a run, and the checks that
//! reject colliding shifts and cycles.

use evsoc::config::{validate_network, Contents, Destination, LayerConfig, NetworkConfig};
use evsoc::event::Port;
use evsoc::io::synthetic_stream;
use evsoc::preproc::{PreprocConfig, Roi};
use evsoc::readout::{ReadoutConfig, ReadoutMode};
use evsoc::router::RouteTable;
use evsoc::sim::{SimOptions, Simulator, TickSchedule};

fn layer(core: u8, c: u32, f: u32) -> LayerConfig {
    let mut l = LayerConfig::conv(core, c, f, (32, 32), (3, 3), 40).with_padding(1, 1);
    l.weights = Some(Contents::Random { random: [-10, 30] });
    l
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut net = NetworkConfig {
        preproc: PreprocConfig {
            roi: Some(Roi::new(0, 0, 32, 32)),
            destinations: vec![Destination::new(Port::Core(0), 0), Destination::new(Port::Core(1), 0)],
            monitor_tap: true,
            ..Default::default()
        },
        layers: vec![
            layer(0, 2, 4).with_destination(Port::Core(2), 0),
            layer(1, 2, 4).with_destination(Port::Core(2), 4),
            layer(2, 8, 4).with_destination(Port::Readout, 0),
        ],
        readout: Some(ReadoutConfig::new(4, ReadoutMode::BinCount)),
        profile: None,
    };
    let table = RouteTable::from_config(&net);
    print!("{table}");
    println!("{}", validate_network(&net, &net.effective_profile()));

    let events: Vec<_> = synthetic_stream(5, 20_000, 128, 128, 10).into_iter().filter(|e| e.x < 32 && e.y < 32).collect();
    let (_, trace) = Simulator::new(&net, &SimOptions { record_trace: false, ..Default::default() })?
        .run(&events, &TickSchedule::readout(10_000))?;
    let ledger = &trace.summary.ledger;
    for (port, n) in &ledger.emitted {
        println!("{port:<8} emitted {n:>6}, delivered {:>6}", ledger.delivered.get(port).copied().unwrap_or(0));
    }
    println!("conserved: {}", ledger.is_conserved(&table));

    net.layers[1].destinations[0].shift = 2;
    print!("{}", validate_network(&net, &net.effective_profile()));
    net.layers[1].destinations[0].shift = 4;
    net.layers[2].destinations.push(Destination::new(Port::Core(0), 0));
    print!("{}", validate_network(&net, &net.effective_profile()));
    Ok(())
}
