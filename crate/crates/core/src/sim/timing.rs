//! Affine latency model and neuron-unit throughput accounting.
//!
//! Latency of one event through a route is a fixed pipeline overhead plus a
//! constant per convolution core on the route. Pooling and routing hops that
//! do not enter a core add nothing. Throughput treats each core's neuron
//! units as a deterministic single-server queue (M/D/1).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::event::Port;
use crate::router::RouteTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingModel {
    pub fixed_pipeline_overhead_ns: f64,
    pub per_layer_latency_ns: f64,
    /// Time one neuron unit spends on a single read-add-check-write.
    pub neuron_unit_service_time_ns: f64,
    pub units_per_core: u32,
}

impl Default for TimingModel {
    fn default() -> Self {
        Self {
            fixed_pipeline_overhead_ns: 1357.5,
            per_layer_latency_ns: 222.5,
            neuron_unit_service_time_ns: 33.3,
            units_per_core: 1,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TimingError {
    #[error("timing profile: {0}")]
    Io(#[from] std::io::Error),
    #[error("timing profile: {0}")]
    Json(#[from] serde_json::Error),
    #[error("timing profile: {field} must be {bound}, got {value}")]
    Range { field: &'static str, value: f64, bound: &'static str },
}

impl TimingModel {
    pub fn from_json(text: &str) -> Result<Self, TimingError> {
        let model: Self = serde_json::from_str(text)?;
        model.check()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TimingError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn check(&self) -> Result<(), TimingError> {
        let fields = [
            ("fixed_pipeline_overhead_ns", self.fixed_pipeline_overhead_ns),
            ("per_layer_latency_ns", self.per_layer_latency_ns),
            ("neuron_unit_service_time_ns", self.neuron_unit_service_time_ns),
        ];
        for (field, value) in fields {
            if !(value.is_finite() && value >= 0.0) {
                return Err(TimingError::Range { field, value, bound: "finite and >= 0" });
            }
        }
        if self.units_per_core == 0 {
            return Err(TimingError::Range { field: "units_per_core", value: 0.0, bound: ">= 1" });
        }
        Ok(())
    }

    /// Latency through a route that enters `cores` convolution cores.
    pub fn latency_for_layers(&self, cores: usize) -> f64 {
        self.fixed_pipeline_overhead_ns + self.per_layer_latency_ns * cores as f64
    }

    /// Updates per second one core can absorb.
    pub fn core_capacity(&self) -> f64 {
        f64::from(self.units_per_core) * 1e9 / self.neuron_unit_service_time_ns
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error("empty path")]
    Empty,
    #[error("{0} is not configured")]
    UnknownPort(Port),
    #[error("{from} does not route to {to}")]
    NotAnEdge { from: Port, to: Port },
    #[error("{0} appears twice on the path")]
    Repeated(Port),
}

fn check_path(net: &NetworkConfig, table: &RouteTable, path: &[Port]) -> Result<(), PathError> {
    if path.is_empty() {
        return Err(PathError::Empty);
    }
    for (i, &port) in path.iter().enumerate() {
        if let Port::Core(id) = port {
            if net.layer(id).is_none() {
                return Err(PathError::UnknownPort(port));
            }
        }
        if path[..i].contains(&port) {
            return Err(PathError::Repeated(port));
        }
    }
    for pair in path.windows(2) {
        if !table.destinations(pair[0]).iter().any(|d| d.target == pair[1]) {
            return Err(PathError::NotAnEdge { from: pair[0], to: pair[1] });
        }
    }
    Ok(())
}

/// Latency in nanoseconds of one event along `path`, a route through the
/// configured port graph.
pub fn estimate_latency(net: &NetworkConfig, timing: &TimingModel, path: &[Port]) -> Result<f64, PathError> {
    check_path(net, &RouteTable::from_config(net), path)?;
    Ok(timing.latency_for_layers(path.iter().filter(|p| p.is_core()).count()))
}

/// The route from the pre-processor to the readout through the most cores.
/// `None` when the readout is unreachable.
pub fn deepest_path(net: &NetworkConfig) -> Option<Vec<Port>> {
    fn walk(table: &RouteTable, node: Port, memo: &mut BTreeMap<Port, Option<Vec<Port>>>) -> Option<Vec<Port>> {
        if node == Port::Readout {
            return Some(vec![Port::Readout]);
        }
        if let Some(hit) = memo.get(&node) {
            return hit.clone();
        }
        // guard against cycles in unvalidated input
        memo.insert(node, None);
        let best = table
            .destinations(node)
            .iter()
            .filter_map(|d| walk(table, d.target, memo))
            .max_by_key(|p| p.len())
            .map(|mut p| {
                p.insert(0, node);
                p
            });
        memo.insert(node, best.clone());
        best
    }
    walk(&RouteTable::from_config(net), Port::Preproc, &mut BTreeMap::new())
}

/// Updates delivered to each core's neuron units over a span of simulated time.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct UpdateLoad {
    pub duration_ns: f64,
    pub updates: BTreeMap<u8, u64>,
}

impl UpdateLoad {
    pub fn single(core: u8, updates: u64, duration_ns: f64) -> Self {
        Self { duration_ns, updates: BTreeMap::from([(core, updates)]) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoreUtilization {
    pub core: u8,
    pub updates: u64,
    pub busy_ns: f64,
    /// Offered updates per second.
    pub offered_rate: f64,
    pub utilization: f64,
    /// Mean wait before service; `None` once the queue is unstable.
    pub queue_delay_ns: Option<f64>,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputReport {
    pub duration_ns: f64,
    pub capacity_per_core: f64,
    pub cores: Vec<CoreUtilization>,
}

impl ThroughputReport {
    pub fn any_saturated(&self) -> bool {
        self.cores.iter().any(|c| c.saturated)
    }

    pub fn core(&self, id: u8) -> Option<&CoreUtilization> {
        self.cores.iter().find(|c| c.core == id)
    }
}

/// Per-core busy time, utilization and queueing delay of a load.
pub fn account_throughput(load: &UpdateLoad, timing: &TimingModel) -> ThroughputReport {
    let units = f64::from(timing.units_per_core.max(1));
    let s = timing.neuron_unit_service_time_ns;
    let capacity = timing.core_capacity();
    let cores = load
        .updates
        .iter()
        .map(|(&core, &updates)| {
            let busy_ns = updates as f64 * s / units;
            let (offered_rate, utilization) = if load.duration_ns > 0.0 {
                (updates as f64 * 1e9 / load.duration_ns, busy_ns / load.duration_ns)
            } else if updates == 0 {
                (0.0, 0.0)
            } else {
                (f64::INFINITY, f64::INFINITY)
            };
            let queue_delay_ns = (utilization < 1.0).then(|| utilization * s / (2.0 * (1.0 - utilization)));
            CoreUtilization {
                core,
                updates,
                busy_ns,
                offered_rate,
                utilization,
                queue_delay_ns,
                saturated: offered_rate > capacity,
            }
        })
        .collect();
    ThroughputReport { duration_ns: load.duration_ns, capacity_per_core: capacity, cores }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_topology, TopologyOptions};

    fn chain(layers: usize) -> NetworkConfig {
        let mut topo = String::from("32x32x2");
        for _ in 0..layers {
            topo.push_str("-2C3");
        }
        let mut net = parse_topology(&topo, TopologyOptions { same_padding: true, ..Default::default() }).unwrap();
        net.readout = None;
        net
    }

    fn path(layers: u8) -> Vec<Port> {
        let mut p = vec![Port::Preproc];
        p.extend((0..layers).map(Port::Core));
        p.push(Port::Readout);
        p
    }

    #[test]
    fn calibration_points() {
        let t = TimingModel::default();
        assert_eq!(estimate_latency(&chain(1), &t, &path(1)).unwrap(), 1580.0);
        assert_eq!(estimate_latency(&chain(9), &t, &path(9)).unwrap(), 3360.0);
        assert_eq!(estimate_latency(&chain(1), &t, &[Port::Preproc]).unwrap(), 1357.5);
    }

    #[test]
    fn invalid_paths() {
        let t = TimingModel::default();
        let net = chain(2);
        assert_eq!(estimate_latency(&net, &t, &[]), Err(PathError::Empty));
        assert_eq!(
            estimate_latency(&net, &t, &[Port::Preproc, Port::Core(1)]),
            Err(PathError::NotAnEdge { from: Port::Preproc, to: Port::Core(1) })
        );
        assert_eq!(estimate_latency(&net, &t, &[Port::Core(7)]), Err(PathError::UnknownPort(Port::Core(7))));
    }

    #[test]
    fn deepest_path_follows_chain() {
        assert_eq!(deepest_path(&chain(3)), Some(path(3)));
    }

    #[test]
    fn utilization_examples() {
        let t = TimingModel::default();
        let r = account_throughput(&UpdateLoad::single(0, 0, 1e9), &t);
        assert_eq!(r.cores[0].utilization, 0.0);
        assert_eq!(r.cores[0].queue_delay_ns, Some(0.0));

        let r = account_throughput(&UpdateLoad::single(0, 15_000_000, 1e9), &t);
        assert!((r.cores[0].utilization - 0.4995).abs() < 1e-9);

        let r = account_throughput(&UpdateLoad::single(0, 30_000_000, 1e9), &t);
        assert!((r.cores[0].utilization - 1.0).abs() <= 0.01);
        assert!(!r.cores[0].saturated);
        let r = account_throughput(&UpdateLoad::single(0, 30_100_000, 1e9), &t);
        assert!(r.cores[0].saturated);
        assert_eq!(r.cores[0].queue_delay_ns, None);
    }

    #[test]
    fn more_units_lower_utilization() {
        let t = TimingModel { units_per_core: 2, ..Default::default() };
        let r = account_throughput(&UpdateLoad::single(0, 30_000_000, 1e9), &t);
        assert!((r.cores[0].utilization - 0.4995).abs() < 1e-9);
    }

    #[test]
    fn profile_json() {
        let t = TimingModel::from_json(r#"{"per_layer_latency_ns": 100.0}"#).unwrap();
        assert_eq!(t.per_layer_latency_ns, 100.0);
        assert_eq!(t.fixed_pipeline_overhead_ns, 1357.5);
        assert!(TimingModel::from_json(r#"{"units_per_core": 0}"#).is_err());
        assert!(TimingModel::from_json(r#"{"speed": 1}"#).is_err());
    }
}
