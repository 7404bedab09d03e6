//! Event words and on-chip port addresses.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Default sensor array width in pixels.
pub const SENSOR_WIDTH: u16 = 128;
/// Default sensor array height in pixels.
pub const SENSOR_HEIGHT: u16 = 128;
/// Number of distinct input feature channels a core can address.
pub const MAX_CHANNELS: u32 = 1024;
/// Number of convolution cores on the chip.
pub const NUM_CORES: u8 = 9;

/// A timestamped sensor event as it leaves the pixel array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelEvent {
    /// Timestamp in microseconds.
    pub t: u64,
    pub x: u16,
    pub y: u16,
    /// Polarity, 0 (OFF) or 1 (ON).
    pub p: u8,
}

impl PixelEvent {
    pub const fn new(t: u64, x: u16, y: u16, p: u8) -> Self {
        Self { t, x, y, p }
    }
}

/// An address-event word travelling between blocks: channel plus coordinate,
/// optionally prefixed with the destination header used by the router.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureEvent {
    pub c: u16,
    pub x: u16,
    pub y: u16,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dest: Option<Port>,
}

impl FeatureEvent {
    pub const fn new(c: u16, x: u16, y: u16) -> Self {
        Self { c, x, y, dest: None }
    }

    pub const fn with_dest(self, dest: Port) -> Self {
        Self { dest: Some(dest), ..self }
    }

    /// The payload with its routing header removed.
    pub const fn payload(self) -> Self {
        Self { dest: None, ..self }
    }
}

/// A router port: every block attached to the star network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Port {
    Preproc,
    Core(u8),
    Readout,
    Monitor,
}

impl Port {
    pub fn is_core(self) -> bool {
        matches!(self, Port::Core(_))
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Port::Preproc => f.write_str("preproc"),
            Port::Core(id) => write!(f, "core{id}"),
            Port::Readout => f.write_str("readout"),
            Port::Monitor => f.write_str("monitor"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown port name {0:?} (expected preproc, coreN, readout or monitor)")]
pub struct ParsePortError(pub String);

impl FromStr for Port {
    type Err = ParsePortError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "preproc" => Ok(Port::Preproc),
            "readout" => Ok(Port::Readout),
            "monitor" => Ok(Port::Monitor),
            _ => s
                .strip_prefix("core")
                .and_then(|n| n.parse::<u8>().ok())
                .map(Port::Core)
                .ok_or_else(|| ParsePortError(s.to_string())),
        }
    }
}

impl Serialize for Port {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Port {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
