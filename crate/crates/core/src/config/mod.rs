//! Network descriptions: per-core layer parameters, their wiring, and the
//! JSON configuration document they are loaded from.
//!
//! The document has four top-level keys: `preproc`, `layers`, `readout`
//! and `profile`. Only `preproc` and `layers` are required. Every field
//! that has a default is filled at parse time, so a parsed
//! [`NetworkConfig`] serializes back into a fully explicit document.

mod profile;
mod topology;
mod validate;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::event::Port;
use crate::preproc::PreprocConfig;
use crate::readout::ReadoutConfig;

pub use profile::{ChipProfile, CoreCapacity, ProfileError, MAX_FANOUT, MAX_FEATURES, MAX_KERNEL};
pub use topology::{parse_topology, TopologyError, TopologyOptions};
pub use validate::{validate_network, Constraint, ValidationReport, Violation};

/// One routing target of a block, with the additive channel offset applied
/// to every event sent there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Destination {
    pub target: Port,
    #[serde(default)]
    pub shift: u16,
}

impl Destination {
    pub const fn new(target: Port, shift: u16) -> Self {
        Self { target, shift }
    }
}

/// What happens to the membrane after a spike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetMode {
    #[default]
    Subtract,
    /// Overwrite the membrane with a fixed value.
    ResetTo(i16),
}

/// Initial contents of a memory: explicit words, a sidecar blob, or seeded
/// random values in an inclusive range. Absent means all zeros.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Contents<T> {
    Values(Vec<T>),
    File { file: String },
    Random { random: [T; 2] },
}

fn default_one() -> u32 {
    1
}

fn default_lower_bound() -> i16 {
    i16::MIN
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Parameters of one convolution core.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub core_id: u8,
    pub in_channels: u32,
    pub out_features: u32,
    pub in_width: u32,
    pub in_height: u32,
    #[serde(default = "default_one")]
    pub kernel_w: u32,
    #[serde(default = "default_one")]
    pub kernel_h: u32,
    #[serde(default = "default_one")]
    pub stride_x: u32,
    #[serde(default = "default_one")]
    pub stride_y: u32,
    #[serde(default)]
    pub pad_x: u32,
    #[serde(default)]
    pub pad_y: u32,
    pub threshold: i16,
    /// Compare with `>` instead of `>=`.
    #[serde(default, skip_serializing_if = "is_false")]
    pub threshold_strict: bool,
    #[serde(default)]
    pub reset: ResetMode,
    #[serde(default = "default_lower_bound")]
    pub lower_bound: i16,
    #[serde(default)]
    pub leak_enabled: bool,
    #[serde(default = "default_one")]
    pub pool_x: u32,
    #[serde(default = "default_one")]
    pub pool_y: u32,
    #[serde(default)]
    pub destinations: Vec<Destination>,
    #[serde(default)]
    pub fc_mode: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Contents<i8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Contents<i16>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Contents<i16>>,
    /// Compressed kernel addresses whose kill bit is set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kernel_kill: Vec<u32>,
    /// Compressed neuron addresses whose kill bit is set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub neuron_kill: Vec<u32>,
    /// Features whose bias word is killed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bias_kill: Vec<u32>,
}

impl LayerConfig {
    /// A convolution layer with every optional field at its default.
    pub fn conv(
        core_id: u8,
        in_channels: u32,
        out_features: u32,
        (in_width, in_height): (u32, u32),
        (kernel_w, kernel_h): (u32, u32),
        threshold: i16,
    ) -> Self {
        Self {
            core_id,
            in_channels,
            out_features,
            in_width,
            in_height,
            kernel_w,
            kernel_h,
            stride_x: 1,
            stride_y: 1,
            pad_x: 0,
            pad_y: 0,
            threshold,
            threshold_strict: false,
            reset: ResetMode::Subtract,
            lower_bound: i16::MIN,
            leak_enabled: false,
            pool_x: 1,
            pool_y: 1,
            destinations: Vec::new(),
            fc_mode: false,
            weights: None,
            bias: None,
            initial_state: None,
            kernel_kill: Vec::new(),
            neuron_kill: Vec::new(),
            bias_kill: Vec::new(),
        }
    }

    /// A fully connected layer over a `channels x width x height` input.
    pub fn fully_connected(
        core_id: u8,
        in_channels: u32,
        (in_width, in_height): (u32, u32),
        out_features: u32,
        threshold: i16,
    ) -> Self {
        Self { fc_mode: true, ..Self::conv(core_id, in_channels, out_features, (in_width, in_height), (1, 1), threshold) }
    }

    pub fn with_stride(mut self, x: u32, y: u32) -> Self {
        self.stride_x = x;
        self.stride_y = y;
        self
    }

    pub fn with_padding(mut self, x: u32, y: u32) -> Self {
        self.pad_x = x;
        self.pad_y = y;
        self
    }

    pub fn with_pooling(mut self, x: u32, y: u32) -> Self {
        self.pool_x = x;
        self.pool_y = y;
        self
    }

    pub fn with_destination(mut self, target: Port, shift: u16) -> Self {
        self.destinations.push(Destination::new(target, shift));
        self
    }

    pub fn port(&self) -> Port {
        Port::Core(self.core_id)
    }

    /// Output neuron grid before pooling. Fully connected layers have a 1x1 grid.
    pub fn output_dims(&self) -> Result<(u32, u32), DimensionError> {
        compute_output_dims(self)
    }

    /// Coordinate space seen by destinations after sum pooling.
    pub fn pooled_output_dims(&self) -> Result<(u32, u32), DimensionError> {
        let (w, h) = self.output_dims()?;
        Ok((w.div_ceil(self.pool_x.max(1)), h.div_ceil(self.pool_y.max(1))))
    }

    /// Flattened input size of a fully connected layer.
    pub fn fc_inputs(&self) -> u64 {
        u64::from(self.in_channels) * u64::from(self.in_width) * u64::from(self.in_height)
    }

    /// Kernel memory words this layer occupies.
    pub fn kernel_words(&self) -> u64 {
        if self.fc_mode {
            self.fc_inputs() * u64::from(self.out_features)
        } else {
            u64::from(self.in_channels)
                * u64::from(self.out_features)
                * u64::from(self.kernel_w)
                * u64::from(self.kernel_h)
        }
    }

    /// Neuron memory words this layer occupies.
    pub fn neuron_words(&self) -> Result<u64, DimensionError> {
        let (w, h) = self.output_dims()?;
        Ok(u64::from(self.out_features) * u64::from(w) * u64::from(h))
    }
}

/// Kernel larger than the padded input along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("kernel {kernel} exceeds padded input {padded} along {axis}")]
pub struct DimensionError {
    pub axis: char,
    pub kernel: u32,
    pub padded: u32,
}

fn output_extent(axis: char, input: u32, kernel: u32, stride: u32, pad: u32) -> Result<u32, DimensionError> {
    let padded = input + 2 * pad;
    if padded < kernel || kernel == 0 {
        return Err(DimensionError { axis, kernel, padded });
    }
    Ok((padded - kernel) / stride.max(1) + 1)
}

/// Output neuron grid size of a convolution:
/// `floor((in + 2*pad - kernel) / stride) + 1` per axis.
pub fn compute_output_dims(layer: &LayerConfig) -> Result<(u32, u32), DimensionError> {
    if layer.fc_mode {
        return Ok((1, 1));
    }
    Ok((
        output_extent('x', layer.in_width, layer.kernel_w, layer.stride_x, layer.pad_x)?,
        output_extent('y', layer.in_height, layer.kernel_h, layer.stride_y, layer.pad_y)?,
    ))
}

/// A complete network: pre-processing, convolution cores and readout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub preproc: PreprocConfig,
    pub layers: Vec<LayerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<ReadoutConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ChipProfile>,
}

impl NetworkConfig {
    pub fn layer(&self, core_id: u8) -> Option<&LayerConfig> {
        self.layers.iter().find(|l| l.core_id == core_id)
    }

    /// The profile embedded in the document, or the default chip.
    pub fn effective_profile(&self) -> ChipProfile {
        self.profile.clone().unwrap_or_default()
    }

    /// Destinations of any block.
    pub fn destinations_of(&self, port: Port) -> &[Destination] {
        match port {
            Port::Preproc => &self.preproc.destinations,
            Port::Core(id) => self.layer(id).map(|l| l.destinations.as_slice()).unwrap_or(&[]),
            Port::Readout | Port::Monitor => &[],
        }
    }

    /// Serializes into the canonical, fully explicit document form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network config is always serializable")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown field `{field}` at line {line}, column {column}")]
    UnknownField { field: String, line: usize, column: usize },
    #[error("invalid document at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("{field} = {value} is out of range (allowed {bound})")]
    OutOfRange { field: String, value: i64, bound: &'static str },
    #[error("profile: {0}")]
    Profile(#[from] ProfileError),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

impl From<serde_json::Error> for ConfigError {
    fn from(err: serde_json::Error) -> Self {
        use serde_json::error::Category;
        let (line, column) = (err.line(), err.column());
        let message = err.to_string();
        match err.classify() {
            Category::Data => match unknown_field_name(&message) {
                Some(field) => ConfigError::UnknownField { field, line, column },
                None => ConfigError::Schema { line, column, message: strip_position(&message) },
            },
            _ => ConfigError::Syntax { line, column, message: strip_position(&message) },
        }
    }
}

fn unknown_field_name(message: &str) -> Option<String> {
    let rest = message.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

fn check_range(field: impl fmt::Display, value: i64, ok: bool, bound: &'static str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::OutOfRange { field: field.to_string(), value, bound })
    }
}

fn check_pool(field: impl fmt::Display, value: u32) -> Result<(), ConfigError> {
    check_range(field, value.into(), matches!(value, 1 | 2 | 4), "{1, 2, 4}")
}

fn check_layer_scalars(i: usize, layer: &LayerConfig) -> Result<(), ConfigError> {
    let f = |name: &str| format!("layers[{i}].{name}");
    check_range(f("in_channels"), layer.in_channels.into(), layer.in_channels >= 1, "1..=1024")?;
    check_range(f("out_features"), layer.out_features.into(), layer.out_features >= 1, "1..=1024")?;
    check_range(f("in_width"), layer.in_width.into(), layer.in_width >= 1, ">= 1")?;
    check_range(f("in_height"), layer.in_height.into(), layer.in_height >= 1, ">= 1")?;
    check_range(f("kernel_w"), layer.kernel_w.into(), layer.kernel_w >= 1, "1..=16")?;
    check_range(f("kernel_h"), layer.kernel_h.into(), layer.kernel_h >= 1, "1..=16")?;
    check_range(f("stride_x"), layer.stride_x.into(), layer.stride_x >= 1, ">= 1")?;
    check_range(f("stride_y"), layer.stride_y.into(), layer.stride_y >= 1, ">= 1")?;
    check_range(f("threshold"), layer.threshold.into(), layer.threshold >= 1, "1..=32767")?;
    check_range(f("lower_bound"), layer.lower_bound.into(), layer.lower_bound <= 0, "-32768..=0")?;
    check_pool(f("pool_x"), layer.pool_x)?;
    check_pool(f("pool_y"), layer.pool_y)?;
    Ok(())
}

fn check_scalars(net: &NetworkConfig) -> Result<(), ConfigError> {
    let pre = &net.preproc;
    check_range("preproc.sensor_width", pre.sensor_width.into(), pre.sensor_width >= 1, ">= 1")?;
    check_range("preproc.sensor_height", pre.sensor_height.into(), pre.sensor_height >= 1, ">= 1")?;
    check_pool("preproc.pool_x", pre.pool_x)?;
    check_pool("preproc.pool_y", pre.pool_y)?;
    if let Some(roi) = &pre.roi {
        check_range("preproc.roi.w", roi.w.into(), (1..=128).contains(&roi.w), "1..=128")?;
        check_range("preproc.roi.h", roi.h.into(), (1..=128).contains(&roi.h), "1..=128")?;
    }
    for (i, layer) in net.layers.iter().enumerate() {
        check_layer_scalars(i, layer)?;
    }
    if let Some(readout) = &net.readout {
        readout.check().map_err(|(field, value, bound)| ConfigError::OutOfRange {
            field: format!("readout.{field}"),
            value,
            bound,
        })?;
    }
    if let Some(profile) = &net.profile {
        profile.check()?;
    }
    Ok(())
}

/// Parses a configuration document, filling every default.
pub fn parse_network_description(text: &str) -> Result<NetworkConfig, ConfigError> {
    let net: NetworkConfig = serde_json::from_str(text)?;
    check_scalars(&net)?;
    Ok(net)
}

/// Reads and parses a configuration document from disk.
pub fn load_network(path: impl AsRef<Path>) -> Result<NetworkConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_network_description(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preproc::PolarityMode;

    const MINIMAL: &str = r#"{
        "preproc": { "destinations": [ { "target": "core0" } ] },
        "layers": [
            { "core_id": 0, "in_channels": 1, "out_features": 1,
              "in_width": 128, "in_height": 128,
              "kernel_w": 1, "kernel_h": 1, "threshold": 1 }
        ]
    }"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let net = parse_network_description(MINIMAL).unwrap();
        assert_eq!(net.layers.len(), 1);
        let layer = &net.layers[0];
        assert_eq!((layer.stride_x, layer.stride_y), (1, 1));
        assert_eq!((layer.pad_x, layer.pad_y), (0, 0));
        assert_eq!((layer.pool_x, layer.pool_y), (1, 1));
        assert_eq!(layer.reset, ResetMode::Subtract);
        assert_eq!(layer.lower_bound, -32768);
        assert!(!layer.fc_mode && !layer.leak_enabled);
        assert_eq!(net.preproc.polarity, PolarityMode::BothChannels);
        assert_eq!(net.preproc.sensor_width, 128);
    }

    #[test]
    fn zero_kernel_is_rejected_with_bound() {
        let text = MINIMAL.replace(r#""kernel_w": 1"#, r#""kernel_w": 0"#);
        match parse_network_description(&text) {
            Err(ConfigError::OutOfRange { field, value, bound }) => {
                assert_eq!(field, "layers[0].kernel_w");
                assert_eq!(value, 0);
                assert_eq!(bound, "1..=16");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_is_reported_with_position() {
        let text = MINIMAL.replace(r#""threshold": 1"#, r#""threshold": 1, "colour": 3"#);
        match parse_network_description(&text) {
            Err(ConfigError::UnknownField { field, line, .. }) => {
                assert_eq!(field, "colour");
                assert_eq!(line, 6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_line_and_column() {
        let err = parse_network_description("{\n  \"preproc\": ,\n}").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn threshold_must_be_positive() {
        let text = MINIMAL.replace(r#""threshold": 1"#, r#""threshold": 0"#);
        assert!(matches!(
            parse_network_description(&text),
            Err(ConfigError::OutOfRange { ref field, .. }) if field == "layers[0].threshold"
        ));
    }

    #[test]
    fn output_dims_examples() {
        let l = LayerConfig::conv(0, 2, 16, (34, 34), (5, 5), 1);
        assert_eq!(compute_output_dims(&l).unwrap(), (30, 30));
        let l = LayerConfig::conv(0, 1, 1, (128, 128), (1, 1), 1);
        assert_eq!(compute_output_dims(&l).unwrap(), (128, 128));
        let l = LayerConfig::conv(0, 1, 1, (4, 4), (3, 3), 1).with_stride(2, 2).with_padding(1, 1);
        assert_eq!(compute_output_dims(&l).unwrap(), (2, 2));
    }

    #[test]
    fn output_dims_underflow() {
        let l = LayerConfig::conv(0, 1, 1, (4, 8), (7, 3), 1);
        assert_eq!(
            compute_output_dims(&l),
            Err(DimensionError { axis: 'x', kernel: 7, padded: 4 })
        );
        assert_eq!(compute_output_dims(&l.with_padding(2, 0)).unwrap(), (2, 6));
    }

    #[test]
    fn reset_mode_and_contents_syntax() {
        let text = MINIMAL.replace(
            r#""threshold": 1"#,
            r#""threshold": 1, "reset": {"reset_to": -4}, "weights": [7], "bias": {"random": [-2, 2]}"#,
        );
        let net = parse_network_description(&text).unwrap();
        assert_eq!(net.layers[0].reset, ResetMode::ResetTo(-4));
        assert_eq!(net.layers[0].weights, Some(Contents::Values(vec![7])));
        assert_eq!(net.layers[0].bias, Some(Contents::Random { random: [-2, 2] }));
    }
}
