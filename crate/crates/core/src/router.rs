//! Star-topology unicast router between the pre-processor, the cores, the
//! readout and the monitor port.

use std::collections::BTreeMap;
use std::fmt;

use crate::config::{Destination, NetworkConfig};
use crate::event::{FeatureEvent, Port};

/// Destinations of every source port.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RouteTable {
    routes: BTreeMap<Port, Vec<Destination>>,
}

/// A payload handed to its destination port, header removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub source: Port,
    pub port: Port,
    pub payload: FeatureEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("routing fault: {sender} sent {event:?} to {header:?}, which is not one of its destinations")]
pub struct RoutingFault {
    pub sender: Port,
    pub header: Option<Port>,
    pub event: FeatureEvent,
}

/// A cycle in the port graph, listed from its lowest port.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("network is not feed-forward: cycle {}", fmt_cycle(.0))]
pub struct Cycle(pub Vec<Port>);

fn fmt_cycle(ports: &[Port]) -> String {
    let mut names: Vec<String> = ports.iter().map(|p| p.to_string()).collect();
    if let Some(first) = ports.first() {
        names.push(first.to_string());
    }
    names.join(" -> ")
}

impl RouteTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the table from the wiring of a network. The monitor tap, when
    /// enabled, is an extra destination of the pre-processor.
    pub fn from_config(net: &NetworkConfig) -> Self {
        let mut table = Self::new();
        let mut pre = net.preproc.destinations.clone();
        if net.preproc.monitor_tap {
            pre.push(Destination::new(Port::Monitor, 0));
        }
        table.set(Port::Preproc, pre);
        for layer in &net.layers {
            table.set(layer.port(), layer.destinations.clone());
        }
        table
    }

    pub fn set(&mut self, source: Port, destinations: Vec<Destination>) {
        self.routes.insert(source, destinations);
    }

    pub fn add(&mut self, source: Port, destination: Destination) {
        self.routes.entry(source).or_default().push(destination);
    }

    pub fn destinations(&self, source: Port) -> &[Destination] {
        self.routes.get(&source).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn fanout(&self, source: Port) -> usize {
        self.destinations(source).len()
    }

    pub fn sources(&self) -> impl Iterator<Item = Port> + '_ {
        self.routes.keys().copied()
    }

    /// Dispatches one headed event from `source`.
    pub fn route(&self, source: Port, e: FeatureEvent) -> Result<Delivery, RoutingFault> {
        match e.dest {
            Some(port) if self.destinations(source).iter().any(|d| d.target == port) => {
                Ok(Delivery { source, port, payload: e.payload() })
            }
            header => Err(RoutingFault { sender: source, header, event: e }),
        }
    }

    /// Accepts iff the port graph has no cycle.
    pub fn check_feedforward(&self) -> Result<(), Cycle> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Fresh,
            Open,
            Done,
        }
        let mut marks: BTreeMap<Port, Mark> = BTreeMap::new();
        for start in self.sources() {
            if marks.get(&start).copied().unwrap_or(Mark::Fresh) != Mark::Fresh {
                continue;
            }
            // iterative DFS keeping the open path
            let mut path: Vec<(Port, usize)> = vec![(start, 0)];
            marks.insert(start, Mark::Open);
            while let Some(&mut (node, ref mut next)) = path.last_mut() {
                let dests = self.destinations(node);
                if *next == dests.len() {
                    marks.insert(node, Mark::Done);
                    path.pop();
                    continue;
                }
                let target = dests[*next].target;
                *next += 1;
                match marks.get(&target).copied().unwrap_or(Mark::Fresh) {
                    Mark::Fresh => {
                        marks.insert(target, Mark::Open);
                        path.push((target, 0));
                    }
                    Mark::Open => {
                        let from = path.iter().position(|&(p, _)| p == target).expect("open node is on path");
                        let mut cycle: Vec<Port> = path[from..].iter().map(|&(p, _)| p).collect();
                        let lowest = cycle.iter().enumerate().min_by_key(|&(_, p)| *p).map(|(i, _)| i).unwrap_or(0);
                        cycle.rotate_left(lowest);
                        return Err(Cycle(cycle));
                    }
                    Mark::Done => {}
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for RouteTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:<10} {:>6}", "source", "dest", "shift")?;
        for (source, dests) in &self.routes {
            if dests.is_empty() {
                writeln!(f, "{:<10} {:<10} {:>6}", source.to_string(), "-", "-")?;
            }
            for d in dests {
                writeln!(f, "{:<10} {:<10} {:>6}", source.to_string(), d.target.to_string(), d.shift)?;
            }
        }
        Ok(())
    }
}

/// Event bookkeeping used to check conservation through the router.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct EventLedger {
    /// Logical events emitted per source, before fan-out.
    pub emitted: BTreeMap<Port, u64>,
    /// Successful deliveries per source.
    pub delivered: BTreeMap<Port, u64>,
    /// Deliveries per destination port.
    pub received: BTreeMap<Port, u64>,
    pub faults: u64,
}

impl EventLedger {
    pub fn record_emission(&mut self, source: Port) {
        self.record_emissions(source, 1);
    }

    pub fn record_emissions(&mut self, source: Port, n: u64) {
        *self.emitted.entry(source).or_default() += n;
    }

    pub fn record_delivery(&mut self, d: &Delivery) {
        *self.delivered.entry(d.source).or_default() += 1;
        *self.received.entry(d.port).or_default() += 1;
    }

    pub fn total_deliveries(&self) -> u64 {
        self.delivered.values().sum()
    }

    /// Every source delivered exactly `emitted x fan-out` events and nothing faulted.
    pub fn is_conserved(&self, table: &RouteTable) -> bool {
        self.faults == 0
            && self.emitted.iter().all(|(src, &n)| {
                self.delivered.get(src).copied().unwrap_or(0) == n * table.fanout(*src) as u64
            })
            && self.delivered.keys().all(|src| self.emitted.contains_key(src))
    }
}
