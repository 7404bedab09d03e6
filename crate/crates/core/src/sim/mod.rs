//! Reference event-driven execution of a whole network.
//!
//! A single global FIFO holds headed events waiting for the router. Each
//! sensor event or tick is injected at its timestamp and the queue is drained
//! completely before the next injection, so a run is a pure function of the
//! configuration, the memory contents and the input.
//!
//! Ticks fire at positive multiples of their period. Events with `t <= T` are
//! processed before a tick at `T`, and when both schedules land on the same
//! `T` the leak sweep goes first. A leak tick sweeps the cores in ascending
//! id order, draining the queue after each core.

mod timing;
mod trace;

use std::collections::VecDeque;
use std::path::PathBuf;

use crate::config::NetworkConfig;
use crate::conv::{ContentLoader, ConvCore, LoadError};
use crate::event::{FeatureEvent, PixelEvent, Port};
use crate::preproc::{preprocess_single, PreprocConfig};
use crate::readout::{Readout, ReadoutOutput};
use crate::router::RouteTable;

pub use timing::{
    account_throughput, deepest_path, estimate_latency, CoreUtilization, PathError, ThroughputReport, TimingError,
    TimingModel, UpdateLoad,
};
pub use trace::{read_jsonl, RecordKind, SimTrace, TraceRecord, TraceSummary};

/// When leak and readout ticks fire, in microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TickSchedule {
    pub leak_period_us: Option<u64>,
    pub readout_period_us: Option<u64>,
    /// Last instant considered. Defaults to the last event time rounded up to
    /// a whole readout period.
    pub end_us: Option<u64>,
}

impl TickSchedule {
    pub fn readout(period_us: u64) -> Self {
        Self { readout_period_us: Some(period_us), ..Self::default() }
    }

    pub fn with_leak(mut self, period_us: u64) -> Self {
        self.leak_period_us = Some(period_us);
        self
    }

    pub fn until(mut self, end_us: u64) -> Self {
        self.end_us = Some(end_us);
        self
    }

    fn end_for(&self, last_event: Option<u64>) -> u64 {
        if let Some(end) = self.end_us {
            return end;
        }
        match (last_event, self.readout_period_us) {
            (None, _) => 0,
            (Some(t), None) => t,
            (Some(t), Some(p)) => t.div_ceil(p).max(1) * p,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    /// Seed for random memory contents.
    pub seed: u64,
    /// Directory that sidecar weight files are resolved against.
    pub base_dir: PathBuf,
    pub record_trace: bool,
    pub zero_skip: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { seed: 0, base_dir: PathBuf::from("."), record_trace: true, zero_skip: true }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("input event {index} at t={t} precedes t={prev}")]
    Unsorted { index: usize, t: u64, prev: u64 },
    #[error("tick periods must be positive")]
    ZeroPeriod,
}

#[derive(Debug, Clone, Copy)]
struct Work {
    from: Port,
    event: FeatureEvent,
    /// Cores traversed since the sensor; `None` for leak-born events.
    hops: Option<u8>,
}

/// The whole SoC in reference mode.
#[derive(Debug, Clone)]
pub struct Simulator {
    table: RouteTable,
    preproc: PreprocConfig,
    cores: Vec<Option<ConvCore>>,
    readout: Option<Readout>,
    queue: VecDeque<Work>,
    scratch: Vec<FeatureEvent>,
    now: u64,
    record: bool,
    records: Vec<TraceRecord>,
    summary: trace::TraceSummary,
    outputs: Vec<ReadoutOutput>,
}

impl Simulator {
    pub fn new(net: &NetworkConfig, options: &SimOptions) -> Result<Self, SimError> {
        let loader = ContentLoader::new(options.seed).with_base_dir(&options.base_dir);
        let size = net.layers.iter().map(|l| usize::from(l.core_id) + 1).max().unwrap_or(0);
        let mut cores: Vec<Option<ConvCore>> = vec![None; size];
        for layer in &net.layers {
            let mut core = ConvCore::load(layer.clone(), &loader)?;
            core.set_zero_skip(options.zero_skip);
            cores[usize::from(layer.core_id)] = Some(core);
        }
        Ok(Self {
            table: RouteTable::from_config(net),
            preproc: net.preproc.clone(),
            cores,
            readout: net.readout.clone().map(Readout::new),
            queue: VecDeque::new(),
            scratch: Vec::new(),
            now: 0,
            record: options.record_trace,
            records: Vec::new(),
            summary: TraceSummary::default(),
            outputs: Vec::new(),
        })
    }

    pub fn route_table(&self) -> &RouteTable {
        &self.table
    }

    pub fn core(&self, id: u8) -> Option<&ConvCore> {
        self.cores.get(usize::from(id)).and_then(Option::as_ref)
    }

    pub fn core_mut(&mut self, id: u8) -> Option<&mut ConvCore> {
        self.cores.get_mut(usize::from(id)).and_then(Option::as_mut)
    }

    pub fn readout(&self) -> Option<&Readout> {
        self.readout.as_ref()
    }

    pub fn outputs(&self) -> &[ReadoutOutput] {
        &self.outputs
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    #[inline]
    fn log(&mut self, port: Port, kind: RecordKind) {
        if self.record {
            self.records.push(TraceRecord { t: self.now, port, kind });
        }
    }

    fn advance(&mut self, t: u64) {
        self.now = self.now.max(t);
    }

    /// Pre-processes one sensor event and drains everything it causes.
    pub fn inject(&mut self, e: PixelEvent) {
        self.advance(e.t);
        self.summary.input_events += 1;
        self.log(Port::Preproc, RecordKind::Input { x: e.x, y: e.y, p: e.p });
        if e.x >= self.preproc.sensor_width || e.y >= self.preproc.sensor_height || e.p > 1 {
            self.summary.preproc_dropped += 1;
            self.summary.malformed += 1;
            self.log(Port::Preproc, RecordKind::Malformed { c: e.p.into(), x: e.x, y: e.y });
            return;
        }
        let Some(fe) = preprocess_single(e, &self.preproc) else {
            self.summary.preproc_dropped += 1;
            return;
        };
        self.summary.preproc_passed += 1;
        self.summary.ledger.record_emission(Port::Preproc);
        for d in self.table.destinations(Port::Preproc) {
            let event = FeatureEvent::new(fe.c + d.shift, fe.x, fe.y).with_dest(d.target);
            self.queue.push_back(Work { from: Port::Preproc, event, hops: Some(0) });
        }
        self.drain();
    }

    /// Sends a headed event into the router on behalf of `from` and drains.
    pub fn inject_feature(&mut self, from: Port, event: FeatureEvent) {
        self.summary.ledger.record_emission(from);
        self.queue.push_back(Work { from, event, hops: Some(0) });
        self.drain();
    }

    fn drain(&mut self) {
        while let Some(work) = self.queue.pop_front() {
            match self.table.route(work.from, work.event) {
                Err(fault) => {
                    self.summary.ledger.faults += 1;
                    let e = fault.event;
                    self.log(work.from, RecordKind::Fault { header: fault.header, c: e.c, x: e.x, y: e.y });
                }
                Ok(d) => {
                    self.summary.ledger.record_delivery(&d);
                    let e = d.payload;
                    self.log(d.port, RecordKind::Deliver { from: d.source, c: e.c, x: e.x, y: e.y });
                    self.deliver(d.port, e, work.hops);
                }
            }
        }
    }

    fn malformed(&mut self, port: Port, e: FeatureEvent) {
        self.summary.malformed += 1;
        self.log(port, RecordKind::Malformed { c: e.c, x: e.x, y: e.y });
    }

    fn deliver(&mut self, port: Port, e: FeatureEvent, hops: Option<u8>) {
        match port {
            Port::Core(id) => {
                let Some(core) = self.cores.get_mut(usize::from(id)).and_then(Option::as_mut) else {
                    return self.malformed(port, e);
                };
                self.scratch.clear();
                match core.process_into(e, &mut self.scratch) {
                    Ok(spikes) => {
                        self.summary.ledger.record_emissions(port, spikes);
                        let hops = hops.map(|h| h.saturating_add(1));
                        self.queue.extend(self.scratch.drain(..).map(|event| Work { from: port, event, hops }));
                    }
                    Err(_) => self.malformed(port, e),
                }
            }
            Port::Readout => match self.readout.as_mut().map(|r| r.accumulate(e.c)) {
                Some(Ok(())) => {
                    self.summary.readout_spikes += 1;
                    if let Some(h) = hops {
                        *self.summary.hops_to_readout.entry(h).or_default() += 1;
                    }
                }
                _ => {
                    self.summary.readout_dropped += 1;
                    self.malformed(port, e);
                }
            },
            Port::Monitor => self.summary.monitor_events += 1,
            Port::Preproc => self.malformed(port, e),
        }
    }

    /// One leak sweep over every core, ascending id, each drained in turn.
    pub fn leak_tick(&mut self, t: u64) {
        self.advance(t);
        self.summary.leak_ticks += 1;
        for id in 0..self.cores.len() {
            let Some(core) = self.cores[id].as_mut() else { continue };
            if !core.layer().leak_enabled {
                continue;
            }
            let port = Port::Core(id as u8);
            self.scratch.clear();
            let spikes = core.leak_tick_routed(&mut self.scratch);
            self.summary.ledger.record_emissions(port, spikes);
            self.queue.extend(self.scratch.drain(..).map(|event| Work { from: port, event, hops: None }));
            self.log(port, RecordKind::Leak { spikes });
            self.drain();
        }
    }

    /// Samples the readout. `None` when the network has no readout.
    pub fn readout_tick(&mut self, t: u64) -> Option<ReadoutOutput> {
        self.advance(t);
        let out = self.readout.as_mut()?.on_tick();
        self.summary.readout_ticks += 1;
        self.log(Port::Readout, RecordKind::Readout { tick: out.tick, max_class: out.max_class });
        self.outputs.push(out.clone());
        Some(out)
    }

    /// Fires every scheduled tick at or before `limit` (strictly before when
    /// `inclusive` is false) that has not fired yet.
    fn fire_ticks(&mut self, next: &mut [Option<u64>; 2], periods: [Option<u64>; 2], limit: u64, inclusive: bool) {
        loop {
            let due = |t: &Option<u64>| t.filter(|&t| if inclusive { t <= limit } else { t < limit });
            let t = match (due(&next[0]), due(&next[1])) {
                (None, None) => return,
                (a, b) => a.into_iter().chain(b).min().expect("one tick is due"),
            };
            if next[0] == Some(t) {
                self.leak_tick(t);
                next[0] = Some(t + periods[0].expect("leak tick scheduled"));
            }
            if next[1] == Some(t) {
                self.readout_tick(t);
                next[1] = Some(t + periods[1].expect("readout tick scheduled"));
            }
        }
    }

    /// Runs a time-sorted stream under a tick schedule.
    pub fn run(mut self, input: &[PixelEvent], ticks: &TickSchedule) -> Result<(Vec<ReadoutOutput>, SimTrace), SimError> {
        if ticks.leak_period_us == Some(0) || ticks.readout_period_us == Some(0) {
            return Err(SimError::ZeroPeriod);
        }
        if let Some(index) = input.windows(2).position(|w| w[1].t < w[0].t) {
            return Err(SimError::Unsorted { index: index + 1, t: input[index + 1].t, prev: input[index].t });
        }
        let end = ticks.end_for(input.last().map(|e| e.t));
        let periods = [ticks.leak_period_us, ticks.readout_period_us];
        let mut next = periods;
        self.summary.start_us = self.now;
        for &e in input {
            self.fire_ticks(&mut next, periods, e.t.min(end.saturating_add(1)), false);
            self.inject(e);
        }
        self.fire_ticks(&mut next, periods, end, true);
        self.advance(end);
        let outputs = std::mem::take(&mut self.outputs);
        Ok((outputs, self.finish()))
    }

    /// Stops the simulation and hands back its trace and counters.
    pub fn finish(mut self) -> SimTrace {
        self.summary.end_us = self.now;
        self.summary.cores = self
            .cores
            .iter()
            .flatten()
            .map(|c| (c.layer().core_id, *c.stats()))
            .collect();
        SimTrace { records: self.records, summary: self.summary }
    }
}

/// Runs `input` through `net` with default options.
pub fn run(
    net: &NetworkConfig,
    input: &[PixelEvent],
    ticks: &TickSchedule,
) -> Result<(Vec<ReadoutOutput>, SimTrace), SimError> {
    Simulator::new(net, &SimOptions::default())?.run(input, ticks)
}

/// The per-core update load of a finished run.
pub fn update_load(summary: &TraceSummary) -> UpdateLoad {
    UpdateLoad {
        duration_ns: summary.duration_us() as f64 * 1e3,
        updates: summary.cores.iter().map(|(&id, s)| (id, s.updates())).collect(),
    }
}
