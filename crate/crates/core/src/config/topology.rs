//! Builds a chained network from a compact topology string such as
//! `34x34x2-16C5-16C3-P2-8C3-F10`.
//!
//! Grammar, tokens separated by `-`:
//! - `WxHxC` (first token): input width, height and channel count (1 or 2)
//! - `nCk`: convolution with `n` output features and a `k x k` kernel
//! - `Pk`: sum pooling by `k` on the output of the preceding layer
//! - `Fn`: fully connected layer with `n` outputs
//!
//! Layers are placed on consecutive cores starting at core 0, each routed
//! to the next, and the last one to the readout.

use super::{Destination, LayerConfig, NetworkConfig};
use crate::event::Port;
use crate::preproc::{PolarityMode, PreprocConfig, Roi};
use crate::readout::{ReadoutConfig, ReadoutMode, MAX_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopologyOptions {
    pub threshold: i16,
    /// Pad every convolution by `k / 2` so it keeps its input size.
    pub same_padding: bool,
    pub readout_mode: ReadoutMode,
}

impl Default for TopologyOptions {
    fn default() -> Self {
        Self { threshold: 64, same_padding: false, readout_mode: ReadoutMode::MovingAverage(4) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("bad input token {0:?}, expected WxHxC")]
    Input(String),
    #[error("bad layer token {0:?}")]
    Token(String),
    #[error("pooling token {0:?} does not follow a convolution")]
    DanglingPool(String),
    #[error("layer {0:?} follows a fully connected layer")]
    AfterFc(String),
    #[error("kernel of {token:?} does not fit its {width}x{height} input")]
    KernelTooLarge { token: String, width: u32, height: u32 },
    #[error("topology has more layers than cores")]
    TooManyLayers,
    #[error("topology has no layers")]
    Empty,
}

fn parse_number(s: &str, token: &str) -> Result<u32, TopologyError> {
    s.parse().map_err(|_| TopologyError::Token(token.to_string()))
}

/// Parses a topology string into a network with zero weights.
pub fn parse_topology(topology: &str, options: TopologyOptions) -> Result<NetworkConfig, TopologyError> {
    let mut tokens = topology.split('-').map(str::trim);
    let input = tokens.next().unwrap_or_default();
    let dims: Vec<u32> = input
        .split(['x', 'X'])
        .map(|d| d.parse().map_err(|_| TopologyError::Input(input.to_string())))
        .collect::<Result<_, _>>()?;
    let &[width, height, channels] = dims.as_slice() else {
        return Err(TopologyError::Input(input.to_string()));
    };
    if !(1..=2).contains(&channels) || width == 0 || height == 0 || width > 128 || height > 128 {
        return Err(TopologyError::Input(input.to_string()));
    }

    let mut layers: Vec<LayerConfig> = Vec::new();
    let (mut w, mut h, mut c) = (width, height, channels);
    for token in tokens {
        if layers.last().is_some_and(|l| l.fc_mode) {
            return Err(TopologyError::AfterFc(token.to_string()));
        }
        let core_id = u8::try_from(layers.len()).map_err(|_| TopologyError::TooManyLayers)?;
        if let Some(k) = token.strip_prefix(['P', 'p']) {
            let k = parse_number(k, token)?;
            if !matches!(k, 1 | 2 | 4) {
                return Err(TopologyError::Token(token.to_string()));
            }
            let last = layers.last_mut().ok_or_else(|| TopologyError::DanglingPool(token.to_string()))?;
            last.pool_x *= k;
            last.pool_y *= k;
            let (pw, ph) = last.pooled_output_dims().expect("dims checked when the layer was added");
            (w, h) = (pw, ph);
        } else if let Some(n) = token.strip_prefix(['F', 'f']) {
            let n = parse_number(n, token)?;
            layers.push(LayerConfig::fully_connected(core_id, c, (w, h), n, options.threshold));
            (w, h, c) = (1, 1, n);
        } else if let Some((n, k)) = token.split_once(['C', 'c']) {
            let (n, k) = (parse_number(n, token)?, parse_number(k, token)?);
            let pad = if options.same_padding { k / 2 } else { 0 };
            let layer = LayerConfig::conv(core_id, c, n, (w, h), (k, k), options.threshold).with_padding(pad, pad);
            let (ow, oh) = layer
                .output_dims()
                .map_err(|_| TopologyError::KernelTooLarge { token: token.to_string(), width: w, height: h })?;
            layers.push(layer);
            (w, h, c) = (ow, oh, n);
        } else {
            return Err(TopologyError::Token(token.to_string()));
        }
    }
    if layers.is_empty() {
        return Err(TopologyError::Empty);
    }
    if layers.len() > usize::from(crate::event::NUM_CORES) {
        return Err(TopologyError::TooManyLayers);
    }

    let n = layers.len();
    for i in 0..n {
        let next = if i + 1 < n { Port::Core(layers[i + 1].core_id) } else { Port::Readout };
        layers[i].destinations.push(Destination::new(next, 0));
    }

    let classes = layers[n - 1].out_features.min(u32::from(MAX_CLASSES)) as u8;
    let preproc = PreprocConfig {
        roi: Some(Roi::new(0, 0, width as u16, height as u16)),
        polarity: if channels == 2 { PolarityMode::BothChannels } else { PolarityMode::Merged },
        destinations: vec![Destination::new(Port::Core(0), 0)],
        ..Default::default()
    };
    Ok(NetworkConfig {
        preproc,
        layers,
        readout: Some(ReadoutConfig::new(classes, options.readout_mode)),
        profile: None,
    })
}
