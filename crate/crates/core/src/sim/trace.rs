//! Simulation trace: line-delimited JSON records plus summary counters.
//!
//! Each record is one JSON object per line with the fields `t` (µs), `port`,
//! `kind` and kind-specific payload fields. Records appear in processing
//! order, so `t` never decreases.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conv::CoreStats;
use crate::event::Port;
use crate::router::EventLedger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordKind {
    /// A sensor event entering the pre-processor.
    Input { x: u16, y: u16, p: u8 },
    /// A payload handed to `port` by the router.
    Deliver { from: Port, c: u16, x: u16, y: u16 },
    /// An event whose header is not a destination of its source.
    Fault { header: Option<Port>, c: u16, x: u16, y: u16 },
    /// A payload a core or the readout could not accept.
    Malformed { c: u16, x: u16, y: u16 },
    /// A leak sweep on one core and the spikes it produced.
    Leak { spikes: u64 },
    /// A readout sample.
    Readout { tick: u64, max_class: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub port: Port,
    #[serde(flatten)]
    pub kind: RecordKind,
}

/// Counters kept for every run, traced or not.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TraceSummary {
    pub start_us: u64,
    pub end_us: u64,
    pub input_events: u64,
    /// Sensor events that left the pre-processor.
    pub preproc_passed: u64,
    pub preproc_dropped: u64,
    pub cores: BTreeMap<u8, CoreStats>,
    pub ledger: EventLedger,
    pub readout_spikes: u64,
    pub readout_dropped: u64,
    pub monitor_events: u64,
    pub malformed: u64,
    pub leak_ticks: u64,
    pub readout_ticks: u64,
    /// Readout deliveries caused by sensor events, keyed by cores traversed.
    pub hops_to_readout: BTreeMap<u8, u64>,
}

impl TraceSummary {
    pub fn spikes(&self) -> u64 {
        self.cores.values().map(|c| c.spikes).sum()
    }

    pub fn updates(&self) -> u64 {
        self.cores.values().map(CoreStats::updates).sum()
    }

    pub fn duration_us(&self) -> u64 {
        self.end_us.saturating_sub(self.start_us)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    /// Empty when recording was off.
    pub records: Vec<TraceRecord>,
    pub summary: TraceSummary,
}

impl SimTrace {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// SHA-256 of the JSONL encoding, hex encoded.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        self.write_jsonl(HashWriter(&mut hasher)).expect("hashing cannot fail");
        hex::encode(hasher.finalize())
    }
}

struct HashWriter<'a>(&'a mut Sha256);

impl Write for HashWriter<'_> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.update(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Parses JSONL written by [`SimTrace::write_jsonl`].
pub fn read_jsonl(text: &str) -> Result<Vec<TraceRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_line_format() {
        let r = TraceRecord { t: 5, port: Port::Core(1), kind: RecordKind::Deliver { from: Port::Preproc, c: 0, x: 2, y: 3 } };
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"t":5,"port":"core1","kind":"deliver","from":"preproc","c":0,"x":2,"y":3}"#
        );
    }

    #[test]
    fn jsonl_round_trip_and_digest() {
        let trace = SimTrace {
            records: vec![
                TraceRecord { t: 0, port: Port::Preproc, kind: RecordKind::Input { x: 1, y: 2, p: 1 } },
                TraceRecord { t: 0, port: Port::Core(0), kind: RecordKind::Fault { header: None, c: 0, x: 1, y: 2 } },
                TraceRecord { t: 10, port: Port::Readout, kind: RecordKind::Readout { tick: 0, max_class: 3 } },
            ],
            summary: TraceSummary::default(),
        };
        let mut buf = Vec::new();
        trace.write_jsonl(&mut buf).unwrap();
        assert_eq!(read_jsonl(std::str::from_utf8(&buf).unwrap()).unwrap(), trace.records);
        assert_eq!(trace.digest(), hex::encode(Sha256::digest(&buf)));
        assert_eq!(SimTrace::default().digest(), hex::encode(Sha256::digest(b"")));
    }
}
