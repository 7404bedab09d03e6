//! The spiking convolution core.
//!
//! An incoming `{c, x, y}` event is padded, swept over the kernel and
//! neuron spaces, turned into `{weight, neuron}` pairs (zero and killed
//! weights are not forwarded), integrated by the neuron unit, and every
//! resulting spike is decompressed, sum-pooled and sent once per destination
//! with its channel shifted.
//!
//! Output order is deterministic: features outermost, then kernel rows, then
//! kernel columns.

mod address;
mod blob;
mod memory;
mod neuron;
mod sweep;

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Contents, DimensionError, LayerConfig};
use crate::event::FeatureEvent;

pub use address::{compress_neuron_address, decompress_neuron_address, AddressError, KernelDims, NeuronDims};
pub use blob::{Blob, BlobError, BlobKind, BlobWords, BLOB_MAGIC, BLOB_VERSION};
pub use memory::{BiasMemory, KernelMemory, NeuronMemory, UpdateOutcome};
pub use neuron::{integrate, NeuronParams};
pub use sweep::{sweep_targets, SweepError, SynapticTarget};

use sweep::EventSweep;

/// Activity counters of one core.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CoreStats {
    pub events_in: u64,
    /// Weight updates delivered to the neuron unit.
    pub synaptic_updates: u64,
    /// Bias updates delivered to the neuron unit by leak ticks.
    pub bias_updates: u64,
    pub spikes: u64,
    pub zero_skips: u64,
    pub kernel_kills: u64,
    pub neuron_kills: u64,
    pub events_out: u64,
    pub malformed: u64,
}

impl CoreStats {
    /// Total read-modify-write operations of the neuron unit.
    pub fn updates(&self) -> u64 {
        self.synaptic_updates + self.bias_updates
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Dimension(#[from] DimensionError),
    #[error("core {core}: {what} has {actual} words, expected {expected}")]
    Length { core: u8, what: &'static str, expected: usize, actual: usize },
    #[error("core {core}: {what} range [{lo}, {hi}] is empty")]
    Range { core: u8, what: &'static str, lo: i64, hi: i64 },
    #[error("core {core}: {path}: {source}")]
    Blob { core: u8, path: String, source: BlobError },
    #[error("core {core}: {path} holds a {found:?} image, expected {expected:?}")]
    BlobKind { core: u8, path: String, found: BlobKind, expected: BlobKind },
    #[error("core {core}: kill index {index} outside {what} of {len} words")]
    Kill { core: u8, what: &'static str, index: u32, len: usize },
}

/// Resolves [`Contents`] into memory words: sidecar paths are relative to
/// `base_dir` and random contents are drawn from a per-core stream of a
/// seeded generator.
#[derive(Debug, Clone)]
pub struct ContentLoader {
    base_dir: PathBuf,
    seed: u64,
}

impl Default for ContentLoader {
    fn default() -> Self {
        Self::new(0)
    }
}

impl ContentLoader {
    pub fn new(seed: u64) -> Self {
        Self { base_dir: PathBuf::from("."), seed }
    }

    pub fn with_base_dir(mut self, dir: impl AsRef<Path>) -> Self {
        self.base_dir = dir.as_ref().to_path_buf();
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn rng(&self, core: u8, kind: BlobKind) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::from(core) * 3 + kind as u64);
        rng
    }

    fn read_blob(&self, core: u8, file: &str, expected: BlobKind) -> Result<Blob, LoadError> {
        let path = self.base_dir.join(file);
        let blob_err = |source| LoadError::Blob { core, path: path.display().to_string(), source };
        let f = std::fs::File::open(&path).map_err(|e| blob_err(BlobError::Io(e)))?;
        let blob = Blob::read_from(std::io::BufReader::new(f)).map_err(blob_err)?;
        if blob.kind != expected {
            return Err(LoadError::BlobKind { core, path: path.display().to_string(), found: blob.kind, expected });
        }
        Ok(blob)
    }

    fn load_i8(&self, core: u8, contents: &Option<Contents<i8>>, len: usize) -> Result<Vec<i8>, LoadError> {
        let what = "weights";
        let words = match contents {
            None => return Ok(vec![0; len]),
            Some(Contents::Values(v)) => v.clone(),
            Some(Contents::Random { random: [lo, hi] }) => {
                if lo > hi {
                    return Err(LoadError::Range { core, what, lo: (*lo).into(), hi: (*hi).into() });
                }
                let mut rng = self.rng(core, BlobKind::Kernel);
                (0..len).map(|_| rng.gen_range(*lo..=*hi)).collect()
            }
            Some(Contents::File { file }) => match self.read_blob(core, file, BlobKind::Kernel)?.words {
                BlobWords::I8(w) => w,
                BlobWords::I16(_) => unreachable!("kernel blobs decode to i8 words"),
            },
        };
        if words.len() != len {
            return Err(LoadError::Length { core, what, expected: len, actual: words.len() });
        }
        Ok(words)
    }

    fn load_i16(
        &self,
        core: u8,
        what: &'static str,
        kind: BlobKind,
        contents: &Option<Contents<i16>>,
        len: usize,
    ) -> Result<Vec<i16>, LoadError> {
        let words = match contents {
            None => return Ok(vec![0; len]),
            Some(Contents::Values(v)) => v.clone(),
            Some(Contents::Random { random: [lo, hi] }) => {
                if lo > hi {
                    return Err(LoadError::Range { core, what, lo: (*lo).into(), hi: (*hi).into() });
                }
                let mut rng = self.rng(core, kind);
                (0..len).map(|_| rng.gen_range(*lo..=*hi)).collect()
            }
            Some(Contents::File { file }) => match self.read_blob(core, file, kind)?.words {
                BlobWords::I16(w) => w,
                BlobWords::I8(_) => unreachable!("bias and neuron blobs decode to i16 words"),
            },
        };
        if words.len() != len {
            return Err(LoadError::Length { core, what, expected: len, actual: words.len() });
        }
        Ok(words)
    }
}

/// Kernel memory shape of a layer. A fully connected layer is a 1x1 kernel
/// whose input channel is the flattened `(c, x, y)` input index.
pub fn kernel_dims(layer: &LayerConfig) -> KernelDims {
    if layer.fc_mode {
        KernelDims { channels: layer.fc_inputs() as u32, features: layer.out_features, height: 1, width: 1 }
    } else {
        KernelDims {
            channels: layer.in_channels,
            features: layer.out_features,
            height: layer.kernel_h,
            width: layer.kernel_w,
        }
    }
}

/// One configured core and its memories.
#[derive(Debug, Clone)]
pub struct ConvCore {
    layer: LayerConfig,
    params: NeuronParams,
    dims: NeuronDims,
    kernel: KernelMemory,
    neurons: NeuronMemory,
    bias: BiasMemory,
    zero_skip: bool,
    stats: CoreStats,
}

impl ConvCore {
    /// A core whose contents resolve against the working directory with seed 0.
    pub fn new(layer: LayerConfig) -> Result<Self, LoadError> {
        Self::load(layer, &ContentLoader::default())
    }

    /// A core with memory contents resolved through `loader`.
    pub fn load(layer: LayerConfig, loader: &ContentLoader) -> Result<Self, LoadError> {
        let (w, h) = layer.output_dims()?;
        let dims = NeuronDims::new(layer.out_features, w, h);
        let kdims = kernel_dims(&layer);
        let core = layer.core_id;
        let weights = loader.load_i8(core, &layer.weights, kdims.len())?;
        let bias = loader.load_i16(core, "bias", BlobKind::Bias, &layer.bias, layer.out_features as usize)?;
        let state = loader.load_i16(core, "initial_state", BlobKind::Neuron, &layer.initial_state, dims.len() as usize)?;
        let mut kernel = KernelMemory::from_words(kdims, weights).expect("length checked by loader");
        let mut neurons = NeuronMemory::from_words(dims, state).expect("length checked by loader");
        let mut bias = BiasMemory::new(bias);
        for &f in &layer.bias_kill {
            if f >= layer.out_features {
                return Err(LoadError::Kill { core, what: "bias memory", index: f, len: layer.out_features as usize });
            }
            bias.kill(f);
        }
        for &k in &layer.kernel_kill {
            if k as usize >= kdims.len() {
                return Err(LoadError::Kill { core, what: "kernel memory", index: k, len: kdims.len() });
            }
            kernel.kill(k as usize);
        }
        for &n in &layer.neuron_kill {
            if n >= dims.len() {
                return Err(LoadError::Kill { core, what: "neuron memory", index: n, len: dims.len() as usize });
            }
            neurons.kill(n);
        }
        neurons.clamp_lower(layer.lower_bound);
        Ok(Self {
            params: NeuronParams::from_layer(&layer),
            layer,
            dims,
            kernel,
            neurons,
            bias,
            zero_skip: true,
            stats: CoreStats::default(),
        })
    }

    pub fn layer(&self) -> &LayerConfig {
        &self.layer
    }

    pub fn neuron_dims(&self) -> NeuronDims {
        self.dims
    }

    pub fn kernel(&self) -> &KernelMemory {
        &self.kernel
    }

    pub fn kernel_mut(&mut self) -> &mut KernelMemory {
        &mut self.kernel
    }

    pub fn neurons(&self) -> &NeuronMemory {
        &self.neurons
    }

    pub fn neurons_mut(&mut self) -> &mut NeuronMemory {
        &mut self.neurons
    }

    pub fn bias(&self) -> &BiasMemory {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut BiasMemory {
        &mut self.bias
    }

    pub fn stats(&self) -> &CoreStats {
        &self.stats
    }

    /// Turns the zero-weight skip off, so zero weights reach the neuron unit.
    pub fn set_zero_skip(&mut self, enabled: bool) {
        self.zero_skip = enabled;
    }

    /// Decompresses a spiking neuron address, pools it, and emits one event
    /// per destination with the shifted channel.
    pub fn pool_and_route(&self, n: u32) -> Vec<FeatureEvent> {
        let mut out = Vec::with_capacity(self.layer.destinations.len());
        self.route_spike(n, &mut out);
        out
    }

    fn route_spike(&self, n: u32, out: &mut Vec<FeatureEvent>) {
        let plane = self.dims.plane();
        let f = n / plane;
        let rest = n % plane;
        let (xo, yo) = (rest % self.dims.width, rest / self.dims.width);
        let xs = (xo / self.layer.pool_x) as u16;
        let ys = (yo / self.layer.pool_y) as u16;
        for d in &self.layer.destinations {
            out.push(FeatureEvent::new(f as u16 + d.shift, xs, ys).with_dest(d.target));
        }
    }

    #[inline]
    fn apply(&mut self, n: u32, w: i16, out: &mut Vec<FeatureEvent>) -> bool {
        let outcome = self.neurons.neuron_update(n, w, &self.params).expect("swept addresses lie in the neuron space");
        match outcome {
            UpdateOutcome::Killed => {
                self.stats.neuron_kills += 1;
                false
            }
            UpdateOutcome::Quiet => false,
            UpdateOutcome::Spiked => {
                self.stats.spikes += 1;
                let before = out.len();
                self.route_spike(n, out);
                self.stats.events_out += (out.len() - before) as u64;
                true
            }
        }
    }

    #[inline]
    fn weight(&mut self, k: usize) -> Option<i16> {
        if self.kernel.is_killed(k) {
            self.stats.kernel_kills += 1;
            return None;
        }
        match self.kernel.raw(k) {
            0 if self.zero_skip => {
                self.stats.zero_skips += 1;
                None
            }
            w => {
                self.stats.synaptic_updates += 1;
                Some(w.into())
            }
        }
    }

    /// Processes one input event, convolution or fully connected as configured.
    pub fn process(&mut self, e: FeatureEvent) -> Result<Vec<FeatureEvent>, SweepError> {
        let mut out = Vec::new();
        self.process_into(e, &mut out)?;
        Ok(out)
    }

    /// Like [`Self::process`], appending to `out`. Returns the number of spikes.
    pub fn process_into(&mut self, e: FeatureEvent, out: &mut Vec<FeatureEvent>) -> Result<u64, SweepError> {
        let spikes = self.stats.spikes;
        let result = if self.layer.fc_mode { self.fc_into(e, out) } else { self.conv_into(e, out) };
        if result.is_err() {
            self.stats.malformed += 1;
        }
        result.map(|()| self.stats.spikes - spikes)
    }

    /// Convolution path: sweep, weight lookup, neuron update, pool and route.
    pub fn process_event(&mut self, e: FeatureEvent) -> Result<Vec<FeatureEvent>, SweepError> {
        let mut out = Vec::new();
        self.conv_into(e, &mut out).inspect_err(|_| self.stats.malformed += 1)?;
        Ok(out)
    }

    /// Fully connected path: the flattened input index selects a weight row.
    pub fn process_fc_event(&mut self, e: FeatureEvent) -> Result<Vec<FeatureEvent>, SweepError> {
        let mut out = Vec::new();
        self.fc_into(e, &mut out).inspect_err(|_| self.stats.malformed += 1)?;
        Ok(out)
    }

    fn conv_into(&mut self, e: FeatureEvent, out: &mut Vec<FeatureEvent>) -> Result<(), SweepError> {
        let sweep = EventSweep::new(&e, &self.layer, self.dims.width, self.dims.height)?;
        self.stats.events_in += 1;
        let kd = self.kernel.dims();
        let c = u32::from(e.c);
        for f in 0..self.dims.features {
            let kbase = (c * kd.features + f) * kd.height;
            let nbase = f * self.dims.height;
            for &(yk, yo) in sweep.y.as_slice() {
                let krow = (kbase + yk) * kd.width;
                let nrow = (nbase + yo) * self.dims.width;
                for &(xk, xo) in sweep.x.as_slice() {
                    if let Some(w) = self.weight((krow + xk) as usize) {
                        self.apply(nrow + xo, w, out);
                    }
                }
            }
        }
        Ok(())
    }

    fn fc_into(&mut self, e: FeatureEvent, out: &mut Vec<FeatureEvent>) -> Result<(), SweepError> {
        let l = &self.layer;
        if u32::from(e.c) >= l.in_channels {
            return Err(SweepError::Channel { c: e.c, max: l.in_channels });
        }
        if u32::from(e.x) >= l.in_width || u32::from(e.y) >= l.in_height {
            return Err(SweepError::Coordinate { x: e.x, y: e.y, width: l.in_width, height: l.in_height });
        }
        let i = (u32::from(e.c) * l.in_height + u32::from(e.y)) * l.in_width + u32::from(e.x);
        self.stats.events_in += 1;
        let features = self.dims.features;
        for j in 0..features {
            if let Some(w) = self.weight((i * features + j) as usize) {
                self.apply(j, w, out);
            }
        }
        Ok(())
    }

    /// Applies every feature's bias to each live neuron of that feature, in
    /// ascending address order. Returns the spiking addresses.
    pub fn leak_tick(&mut self) -> Vec<u32> {
        let mut spikes = Vec::new();
        let mut out = Vec::new();
        self.leak_into(|n, _| spikes.push(n), &mut out);
        spikes
    }

    /// A leak tick whose spikes are pooled and routed into `out`.
    pub fn leak_tick_routed(&mut self, out: &mut Vec<FeatureEvent>) -> u64 {
        let mut count = 0;
        self.leak_into(|_, _| count += 1, out);
        count
    }

    fn leak_into(&mut self, mut on_spike: impl FnMut(u32, &mut Vec<FeatureEvent>), out: &mut Vec<FeatureEvent>) {
        if !self.layer.leak_enabled {
            return;
        }
        let plane = self.dims.plane();
        for f in 0..self.dims.features {
            if self.bias.is_killed(f) {
                continue;
            }
            let b = self.bias.words()[f as usize];
            if b == 0 && self.zero_skip {
                continue;
            }
            for n in f * plane..(f + 1) * plane {
                if self.neurons.is_killed(n) {
                    self.stats.neuron_kills += 1;
                    continue;
                }
                self.stats.bias_updates += 1;
                if self.apply(n, b, out) {
                    on_spike(n, out);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Destination, ResetMode};
    use crate::event::Port;

    fn identity_layer(threshold: i16) -> LayerConfig {
        LayerConfig::conv(0, 1, 1, (4, 4), (1, 1), threshold).with_destination(Port::Readout, 0)
    }

    #[test]
    fn identity_layer_spikes_once() {
        let mut core = ConvCore::new(identity_layer(10)).unwrap();
        core.kernel_mut().set(0, 0, 0, 0, 10).unwrap();
        let out = core.process(FeatureEvent::new(0, 2, 3)).unwrap();
        assert_eq!(out, vec![FeatureEvent::new(0, 2, 3).with_dest(Port::Readout)]);
        assert_eq!(core.neurons().state().iter().filter(|&&v| v != 0).count(), 0);
    }

    #[test]
    fn zero_kernel_updates_nothing() {
        let mut core = ConvCore::new(LayerConfig::conv(0, 1, 2, (5, 5), (3, 3), 1)).unwrap();
        assert!(core.process(FeatureEvent::new(0, 2, 2)).unwrap().is_empty());
        assert_eq!(core.stats().synaptic_updates, 0);
        assert_eq!(core.stats().zero_skips, 18);
        assert!(core.neurons().state().iter().all(|&v| v == 0));
    }

    #[test]
    fn pooling_merges_addresses() {
        let layer = LayerConfig::conv(0, 1, 1, (4, 4), (1, 1), 1).with_pooling(2, 2).with_destination(Port::Core(1), 0);
        let core = ConvCore::new(layer).unwrap();
        let dims = core.neuron_dims();
        let mut out = Vec::new();
        for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            out.extend(core.pool_and_route(compress_neuron_address(0, x, y, dims).unwrap()));
        }
        assert_eq!(out, vec![FeatureEvent::new(0, 0, 0).with_dest(Port::Core(1)); 4]);
    }

    #[test]
    fn routing_shifts_channels_per_destination() {
        let mut layer = LayerConfig::conv(0, 1, 4, (4, 4), (1, 1), 1);
        layer.destinations = vec![Destination::new(Port::Core(1), 0), Destination::new(Port::Core(2), 16)];
        let core = ConvCore::new(layer).unwrap();
        let n = compress_neuron_address(3, 1, 2, core.neuron_dims()).unwrap();
        assert_eq!(
            core.pool_and_route(n),
            vec![
                FeatureEvent::new(3, 1, 2).with_dest(Port::Core(1)),
                FeatureEvent::new(19, 1, 2).with_dest(Port::Core(2)),
            ]
        );
    }

    #[test]
    fn leak_examples() {
        let mut layer = LayerConfig::conv(0, 1, 2, (3, 3), (1, 1), 5);
        layer.leak_enabled = true;
        layer.lower_bound = 0;
        let mut core = ConvCore::new(layer.clone()).unwrap();
        assert!(core.leak_tick().is_empty());
        assert!(core.neurons().state().iter().all(|&v| v == 0));

        layer.initial_state = Some(Contents::Values(vec![1; 18]));
        layer.bias = Some(Contents::Values(vec![-1, -1]));
        let mut core = ConvCore::load(layer.clone(), &ContentLoader::new(0)).unwrap();
        assert!(core.leak_tick().is_empty());
        assert!(core.neurons().state().iter().all(|&v| v == 0));

        layer.initial_state = None;
        layer.bias = Some(Contents::Values(vec![0, 5]));
        let mut core = ConvCore::load(layer, &ContentLoader::new(0)).unwrap();
        let spikes = core.leak_tick();
        assert_eq!(spikes, (9..18).collect::<Vec<_>>());
        assert_eq!(core.stats().bias_updates, 9);
    }

    #[test]
    fn leak_disabled_is_noop() {
        let mut layer = LayerConfig::conv(0, 1, 1, (3, 3), (1, 1), 5);
        layer.bias = Some(Contents::Values(vec![9]));
        let mut core = ConvCore::load(layer, &ContentLoader::new(0)).unwrap();
        assert!(core.leak_tick().is_empty());
    }

    #[test]
    fn fully_connected_examples() {
        let mut layer = LayerConfig::fully_connected(0, 1, (1, 1), 1, 7).with_destination(Port::Readout, 0);
        layer.weights = Some(Contents::Values(vec![7]));
        let mut core = ConvCore::load(layer, &ContentLoader::new(0)).unwrap();
        assert_eq!(core.process(FeatureEvent::new(0, 0, 0)).unwrap(), vec![FeatureEvent::new(0, 0, 0).with_dest(Port::Readout)]);

        // 2x2x2 inputs, 3 outputs; only input (c=1, x=0, y=1) = index 6 has a row
        let mut layer = LayerConfig::fully_connected(0, 2, (2, 2), 3, 4).with_destination(Port::Readout, 2);
        let mut w = vec![0i8; 8 * 3];
        w[6 * 3 + 1] = 5;
        layer.weights = Some(Contents::Values(w));
        let mut core = ConvCore::load(layer, &ContentLoader::new(0)).unwrap();
        assert!(core.process_fc_event(FeatureEvent::new(0, 0, 0)).unwrap().is_empty());
        assert_eq!(core.stats().synaptic_updates, 0);
        let out = core.process_fc_event(FeatureEvent::new(1, 0, 1)).unwrap();
        assert_eq!(out, vec![FeatureEvent::new(3, 0, 0).with_dest(Port::Readout)]);
        assert_eq!(core.neurons().state(), &[0, 1, 0]);
        assert!(core.process_fc_event(FeatureEvent::new(2, 0, 0)).is_err());
    }

    #[test]
    fn killed_neurons_and_kernel_words() {
        let mut layer = identity_layer(10);
        layer.weights = Some(Contents::Values(vec![10]));
        layer.neuron_kill = vec![5];
        let mut core = ConvCore::load(layer.clone(), &ContentLoader::new(0)).unwrap();
        // neuron 5 = (x=1, y=1)
        assert!(core.process(FeatureEvent::new(0, 1, 1)).unwrap().is_empty());
        assert_eq!(core.stats().neuron_kills, 1);
        layer.neuron_kill.clear();
        layer.kernel_kill = vec![0];
        let mut core = ConvCore::load(layer, &ContentLoader::new(0)).unwrap();
        assert!(core.process(FeatureEvent::new(0, 1, 1)).unwrap().is_empty());
        assert_eq!(core.stats().kernel_kills, 1);
    }

    #[test]
    fn reset_mode_in_core() {
        let mut layer = identity_layer(4);
        layer.reset = ResetMode::ResetTo(-2);
        layer.weights = Some(Contents::Values(vec![6]));
        let mut core = ConvCore::load(layer, &ContentLoader::new(0)).unwrap();
        core.process(FeatureEvent::new(0, 0, 0)).unwrap();
        assert_eq!(core.neurons().get(0), Some(-2));
    }

    #[test]
    fn random_contents_are_seeded() {
        let mut layer = LayerConfig::conv(3, 2, 4, (8, 8), (3, 3), 10);
        layer.weights = Some(Contents::Random { random: [-5, 5] });
        let a = ConvCore::load(layer.clone(), &ContentLoader::new(7)).unwrap();
        let b = ConvCore::load(layer.clone(), &ContentLoader::new(7)).unwrap();
        let c = ConvCore::load(layer, &ContentLoader::new(8)).unwrap();
        assert_eq!(a.kernel().words(), b.kernel().words());
        assert_ne!(a.kernel().words(), c.kernel().words());
        assert!(a.kernel().words().iter().all(|w| (-5..=5).contains(w)));
    }

    #[test]
    fn blob_contents() {
        let dir = std::env::temp_dir().join(format!("evsoc-blob-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let mut f = std::fs::File::create(dir.join("k.spkw")).unwrap();
        Blob::kernel([1, 1, 1, 1], vec![-3]).write_to(&mut f).unwrap();
        let mut layer = identity_layer(10);
        layer.weights = Some(Contents::File { file: "k.spkw".into() });
        let core = ConvCore::load(layer.clone(), &ContentLoader::new(0).with_base_dir(&dir)).unwrap();
        assert_eq!(core.kernel().words(), &[-3]);
        layer.bias = Some(Contents::File { file: "k.spkw".into() });
        assert!(matches!(
            ConvCore::load(layer, &ContentLoader::new(0).with_base_dir(&dir)),
            Err(LoadError::BlobKind { .. })
        ));
        std::fs::remove_dir_all(dir).ok();
    }
}
