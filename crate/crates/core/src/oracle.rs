//! Independent reference models and the randomized equivalence suites.
//!
//! * [`oracle_frame_conv`] accumulates events into a count frame and runs a
//!   dense strided, padded convolution. Below threshold the event-driven
//!   membrane must equal it exactly.
//! * [`NaiveCore`] is a scalar per-event simulator that finds each event's
//!   targets by brute force over kernel offsets, with its own wide-integer
//!   neuron arithmetic. With active thresholds its spike sequence must match
//!   the convolution core event for event.
//!
//! Both suites take the implementation under test as a closure, so a broken
//! subject can be checked to fail.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Contents, Destination, LayerConfig, ResetMode};
use crate::conv::{kernel_dims, sweep_targets, ConvCore};
use crate::event::{FeatureEvent, Port};

/// Dense membrane grid `[f][yo][xo]` of `layer` after the events, computed
/// frame-wise with wide integers. `weights` uses the kernel memory layout.
pub fn oracle_frame_conv(events: &[FeatureEvent], layer: &LayerConfig, weights: &[i8]) -> Vec<i64> {
    let (cw, ch) = (layer.in_width as usize, layer.in_height as usize);
    let channels = layer.in_channels as usize;
    let mut frame = vec![0i64; channels * cw * ch];
    for e in events {
        frame[(usize::from(e.c) * ch + usize::from(e.y)) * cw + usize::from(e.x)] += 1;
    }
    let (ow, oh) = layer.output_dims().expect("oracle needs a valid layer");
    let (ow, oh) = (ow as usize, oh as usize);
    let features = layer.out_features as usize;
    let (kw, kh) = (layer.kernel_w as usize, layer.kernel_h as usize);
    let (sx, sy) = (layer.stride_x as usize, layer.stride_y as usize);
    let (px, py) = (layer.pad_x as i64, layer.pad_y as i64);
    let mut grid = vec![0i64; features * ow * oh];
    for f in 0..features {
        for yo in 0..oh {
            for xo in 0..ow {
                let mut acc = 0i64;
                for c in 0..channels {
                    for ky in 0..kh {
                        let iy = (yo * sy + ky) as i64 - py;
                        if iy < 0 || iy >= ch as i64 {
                            continue;
                        }
                        for kx in 0..kw {
                            let ix = (xo * sx + kx) as i64 - px;
                            if ix < 0 || ix >= cw as i64 {
                                continue;
                            }
                            let w = weights[((c * features + f) * kh + ky) * kw + kx];
                            acc += frame[(c * ch + iy as usize) * cw + ix as usize] * i64::from(w);
                        }
                    }
                }
                grid[(f * oh + yo) * ow + xo] = acc;
            }
        }
    }
    grid
}

/// Scalar integrate-and-fire core written without the production sweep,
/// address or neuron code.
#[derive(Debug, Clone)]
pub struct NaiveCore {
    layer: LayerConfig,
    weights: Vec<i8>,
    bias: Vec<i16>,
    v: Vec<i32>,
    out_w: usize,
    out_h: usize,
}

fn values<T: Clone>(c: &Option<Contents<T>>, len: usize, zero: T) -> Vec<T> {
    match c {
        Some(Contents::Values(v)) => v.clone(),
        None => vec![zero; len],
        Some(_) => panic!("naive core takes inline values only"),
    }
}

impl NaiveCore {
    pub fn new(layer: &LayerConfig) -> Self {
        let (out_w, out_h) = if layer.fc_mode {
            (1, 1)
        } else {
            let ow = (layer.in_width + 2 * layer.pad_x - layer.kernel_w) / layer.stride_x + 1;
            let oh = (layer.in_height + 2 * layer.pad_y - layer.kernel_h) / layer.stride_y + 1;
            (ow as usize, oh as usize)
        };
        let f = layer.out_features as usize;
        let n = f * out_w * out_h;
        let in_len = (layer.in_channels * layer.in_width * layer.in_height) as usize;
        let k_len = if layer.fc_mode {
            in_len * f
        } else {
            (layer.in_channels * layer.out_features * layer.kernel_w * layer.kernel_h) as usize
        };
        let lb = i32::from(layer.lower_bound);
        let v = values(&layer.initial_state, n, 0).into_iter().map(|x| i32::from(x).max(lb)).collect();
        Self {
            weights: values(&layer.weights, k_len, 0),
            bias: values(&layer.bias, f, 0),
            v,
            out_w,
            out_h,
            layer: layer.clone(),
        }
    }

    pub fn membrane(&self) -> Vec<i16> {
        self.v.iter().map(|&v| v as i16).collect()
    }

    fn update(&mut self, f: usize, xo: usize, yo: usize, w: i32, out: &mut Vec<FeatureEvent>) {
        let n = (f * self.out_h + yo) * self.out_w + xo;
        let theta = i32::from(self.layer.threshold);
        let sum = (self.v[n] + w).clamp(-32768, 32767);
        let fire = if self.layer.threshold_strict { sum > theta } else { sum >= theta };
        let mut next = sum;
        if fire {
            next = match self.layer.reset {
                ResetMode::Subtract => sum - theta,
                ResetMode::ResetTo(r) => i32::from(r),
            };
        }
        self.v[n] = next.max(i32::from(self.layer.lower_bound));
        if fire {
            let (px, py) = (self.layer.pool_x as usize, self.layer.pool_y as usize);
            for d in &self.layer.destinations {
                out.push(FeatureEvent::new(f as u16 + d.shift, (xo / px) as u16, (yo / py) as u16).with_dest(d.target));
            }
        }
    }

    pub fn event(&mut self, e: FeatureEvent, out: &mut Vec<FeatureEvent>) {
        let l = self.layer.clone();
        let (c, x, y) = (e.c as usize, e.x as usize, e.y as usize);
        let features = l.out_features as usize;
        if l.fc_mode {
            let i = (c * l.in_height as usize + y) * l.in_width as usize + x;
            for j in 0..features {
                let w = self.weights[i * features + j];
                if w != 0 {
                    self.update(j, 0, 0, w.into(), out);
                }
            }
            return;
        }
        let (kw, kh) = (l.kernel_w as usize, l.kernel_h as usize);
        for f in 0..features {
            for ky in 0..kh {
                // output row yo satisfies yo * sy + ky = y + py
                let num_y = (y + l.pad_y as usize) as i64 - ky as i64;
                if num_y < 0 || num_y % l.stride_y as i64 != 0 || (num_y / l.stride_y as i64) as usize >= self.out_h {
                    continue;
                }
                for kx in 0..kw {
                    let num_x = (x + l.pad_x as usize) as i64 - kx as i64;
                    if num_x < 0 || num_x % l.stride_x as i64 != 0 || (num_x / l.stride_x as i64) as usize >= self.out_w {
                        continue;
                    }
                    let w = self.weights[((c * features + f) * kh + ky) * kw + kx];
                    if w != 0 {
                        let (xo, yo) = ((num_x / l.stride_x as i64) as usize, (num_y / l.stride_y as i64) as usize);
                        self.update(f, xo, yo, w.into(), out);
                    }
                }
            }
        }
    }

    pub fn leak(&mut self, out: &mut Vec<FeatureEvent>) {
        if !self.layer.leak_enabled {
            return;
        }
        for f in 0..self.layer.out_features as usize {
            let b = self.bias[f];
            if b == 0 {
                continue;
            }
            for yo in 0..self.out_h {
                for xo in 0..self.out_w {
                    self.update(f, xo, yo, b.into(), out);
                }
            }
        }
    }
}

/// Sizes and ranges of the randomized instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleConfig {
    pub trials: u32,
    pub seed: u64,
    pub max_dim: u32,
    pub max_channels: u32,
    pub max_features: u32,
    pub kernels: Vec<u32>,
    pub strides: Vec<u32>,
    pub pads: Vec<u32>,
    pub max_events: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            seed: 0,
            max_dim: 16,
            max_channels: 4,
            max_features: 8,
            kernels: vec![1, 3, 5, 7, 16],
            strides: vec![1, 2],
            pads: vec![0, 1, 2],
            max_events: 64,
        }
    }
}

impl OracleConfig {
    /// Seed of one trial; each trial can be regenerated from it alone.
    pub fn trial_seed(&self, trial: u32) -> u64 {
        self.seed ^ (u64::from(trial) + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

/// A sub-threshold instance: weights plus an event multiset.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearInstance {
    pub layer: LayerConfig,
    pub weights: Vec<i8>,
    pub events: Vec<FeatureEvent>,
}

/// One stimulus of a thresholded instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stimulus {
    Event(FeatureEvent),
    Leak,
}

/// An instance with active thresholds, leak, lower bounds and kill-free memories.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdInstance {
    pub layer: LayerConfig,
    pub stimuli: Vec<Stimulus>,
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    *items.choose(rng).expect("non-empty choice")
}

fn random_geometry(rng: &mut ChaCha8Rng, cfg: &OracleConfig, channels: u32, features: u32) -> LayerConfig {
    let k = pick(rng, &cfg.kernels);
    let s = pick(rng, &cfg.strides);
    let p = pick(rng, &cfg.pads);
    let lo = k.saturating_sub(2 * p).max(1);
    let hi = cfg.max_dim.max(lo);
    let w = rng.gen_range(lo..=hi);
    let h = rng.gen_range(lo..=hi);
    LayerConfig::conv(0, channels, features, (w, h), (k, k), i16::MAX)
        .with_stride(s, s)
        .with_padding(p, p)
}

fn random_events(rng: &mut ChaCha8Rng, layer: &LayerConfig, count: usize) -> Vec<FeatureEvent> {
    (0..count)
        .map(|_| {
            FeatureEvent::new(
                rng.gen_range(0..layer.in_channels) as u16,
                rng.gen_range(0..layer.in_width) as u16,
                rng.gen_range(0..layer.in_height) as u16,
            )
        })
        .collect()
}

/// A random instance whose membranes cannot reach threshold or saturate.
pub fn random_linear_instance(cfg: &OracleConfig, seed: u64) -> LinearInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = rng.gen_range(1..=cfg.max_channels);
    let features = rng.gen_range(1..=cfg.max_features);
    let mut layer = random_geometry(&mut rng, cfg, channels, features);
    layer.threshold_strict = true;
    let n_weights = kernel_dims(&layer).len();
    let density: f64 = rng.gen_range(0.2..=1.0);
    let weights: Vec<i8> = (0..n_weights).map(|_| if rng.gen_bool(density) { rng.gen() } else { 0 }).collect();
    // 64 events x 128 stays well inside i16
    let n_events = rng.gen_range(0..=cfg.max_events.min(250));
    let events = random_events(&mut rng, &layer, n_events);
    layer.weights = Some(Contents::Values(weights.clone()));
    LinearInstance { layer, weights, events }
}

/// A random instance exercising thresholds, reset modes, lower bounds,
/// saturation, leak, pooling, channel shifts and fully connected mode.
pub fn random_threshold_instance(cfg: &OracleConfig, seed: u64) -> ThresholdInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = rng.gen_range(1..=cfg.max_channels);
    let features = rng.gen_range(1..=cfg.max_features);
    let mut layer = if rng.gen_bool(0.15) {
        let w = rng.gen_range(1..=cfg.max_dim.min(6));
        let h = rng.gen_range(1..=cfg.max_dim.min(6));
        LayerConfig::fully_connected(0, channels, (w, h), features, 1)
    } else {
        let mut l = random_geometry(&mut rng, cfg, channels, features);
        l.pool_x = pick(&mut rng, &[1, 2, 4]);
        l.pool_y = pick(&mut rng, &[1, 2, 4]);
        l
    };
    let wide = rng.gen_bool(0.2);
    layer.threshold = if wide { rng.gen_range(20_000..=i16::MAX) } else { rng.gen_range(1..=300) };
    layer.threshold_strict = rng.gen_bool(0.3);
    layer.lower_bound = if rng.gen_bool(0.3) { i16::MIN } else { rng.gen_range(-400..=0) };
    layer.reset = if rng.gen_bool(0.5) {
        ResetMode::Subtract
    } else {
        ResetMode::ResetTo(rng.gen_range(layer.lower_bound.max(-500)..=layer.threshold.min(500)))
    };
    layer.leak_enabled = rng.gen_bool(0.7);
    let n_weights = kernel_dims(&layer).len();
    let weights: Vec<i8> = (0..n_weights).map(|_| if rng.gen_bool(0.7) { rng.gen() } else { 0 }).collect();
    layer.weights = Some(Contents::Values(weights));
    let bias: Vec<i16> = (0..features)
        .map(|_| if rng.gen_bool(0.3) { 0 } else if wide { rng.gen_range(-8000..=8000) } else { rng.gen_range(-60..=60) })
        .collect();
    layer.bias = Some(Contents::Values(bias));
    let neurons = layer.neuron_words().expect("valid geometry") as usize;
    let state: Vec<i16> = (0..neurons)
        .map(|_| if wide { rng.gen() } else { rng.gen_range(-200..=layer.threshold.saturating_add(50)) })
        .collect();
    layer.initial_state = Some(Contents::Values(state));
    let targets = [Port::Core(1), Port::Readout];
    let fanout = rng.gen_range(1..=2);
    layer.destinations = (0..fanout).map(|i| Destination::new(targets[i], rng.gen_range(0..4))).collect();

    let n = rng.gen_range(1..=cfg.max_events.max(1));
    let events = random_events(&mut rng, &layer, n);
    let stimuli = events
        .into_iter()
        .flat_map(|e| {
            let leak = rng.gen_bool(0.1);
            std::iter::once(Stimulus::Event(e)).chain(leak.then_some(Stimulus::Leak))
        })
        .collect();
    ThresholdInstance { layer, stimuli }
}

/// Membrane state of the convolution core after the instance's events.
pub fn core_membrane(inst: &LinearInstance) -> Vec<i16> {
    let mut core = ConvCore::new(inst.layer.clone()).expect("instance fits");
    for &e in &inst.events {
        core.process(e).expect("instance events are in range");
    }
    core.neurons().state().to_vec()
}

/// Output events of the convolution core over all stimuli.
pub fn core_spikes(inst: &ThresholdInstance) -> Vec<FeatureEvent> {
    let mut core = ConvCore::new(inst.layer.clone()).expect("instance fits");
    let mut out = Vec::new();
    for s in &inst.stimuli {
        match *s {
            Stimulus::Event(e) => {
                core.process_into(e, &mut out).expect("instance events are in range");
            }
            Stimulus::Leak => {
                core.leak_tick_routed(&mut out);
            }
        }
    }
    out
}

/// Output events of [`NaiveCore`] over all stimuli.
pub fn naive_spikes(inst: &ThresholdInstance) -> Vec<FeatureEvent> {
    let mut core = NaiveCore::new(&inst.layer);
    let mut out = Vec::new();
    for s in &inst.stimuli {
        match *s {
            Stimulus::Event(e) => core.event(e, &mut out),
            Stimulus::Leak => core.leak(&mut out),
        }
    }
    out
}

/// A deliberately broken subject: every axis sweep stops one kernel offset
/// early. Used to show the suites catch sweep-bound mistakes.
pub fn off_by_one_membrane(inst: &LinearInstance) -> Vec<i16> {
    let layer = &inst.layer;
    let (ow, oh) = layer.output_dims().expect("instance fits");
    let f_max = layer.out_features;
    let mut v = vec![0i16; (f_max * ow * oh) as usize];
    for e in &inst.events {
        for t in sweep_targets(e, layer).expect("instance events are in range") {
            if t.xk + 1 == layer.kernel_w || t.yk + 1 == layer.kernel_h {
                continue;
            }
            let k = ((u32::from(e.c) * f_max + t.f) * layer.kernel_h + t.yk) * layer.kernel_w + t.xk;
            let n = (t.f * oh + t.yo) * ow + t.xo;
            v[n as usize] = v[n as usize].saturating_add(inst.weights[k as usize].into());
        }
    }
    v
}

/// First failing trial of a suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub trial: u32,
    pub seed: u64,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub trials: u32,
    pub passed: u32,
    pub counterexample: Option<Counterexample>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.counterexample.is_none()
    }
}

fn describe(layer: &LayerConfig) -> String {
    format!(
        "{}x{}x{} -> {} features, kernel {}x{}, stride {}x{}, pad {}x{}, fc {}",
        layer.in_width,
        layer.in_height,
        layer.in_channels,
        layer.out_features,
        layer.kernel_w,
        layer.kernel_h,
        layer.stride_x,
        layer.stride_y,
        layer.pad_x,
        layer.pad_y,
        layer.fc_mode
    )
}

/// Sub-threshold membranes of `subject` against [`oracle_frame_conv`].
pub fn check_linearity(cfg: &OracleConfig, subject: impl Fn(&LinearInstance) -> Vec<i16>) -> SuiteReport {
    let mut report = SuiteReport { name: "linearity", trials: cfg.trials, passed: 0, counterexample: None };
    for trial in 0..cfg.trials {
        let seed = cfg.trial_seed(trial);
        let inst = random_linear_instance(cfg, seed);
        let expected = oracle_frame_conv(&inst.events, &inst.layer, &inst.weights);
        let got = subject(&inst);
        let mismatch = (got.len() != expected.len())
            .then(|| format!("grid length {} != {}", got.len(), expected.len()))
            .or_else(|| {
                got.iter().zip(&expected).position(|(&g, &e)| i64::from(g) != e).map(|n| {
                    format!("neuron {n}: membrane {} != frame convolution {}", got[n], expected[n])
                })
            });
        match mismatch {
            None => report.passed += 1,
            Some(m) => {
                report.counterexample = Some(Counterexample {
                    trial,
                    seed,
                    description: format!("{}; {} events; {m}", describe(&inst.layer), inst.events.len()),
                });
                break;
            }
        }
    }
    report
}

/// Spike output of `subject` against [`NaiveCore`], event for event.
pub fn check_thresholded(cfg: &OracleConfig, subject: impl Fn(&ThresholdInstance) -> Vec<FeatureEvent>) -> SuiteReport {
    let mut report = SuiteReport { name: "thresholded", trials: cfg.trials, passed: 0, counterexample: None };
    for trial in 0..cfg.trials {
        let seed = cfg.trial_seed(trial);
        let inst = random_threshold_instance(cfg, seed);
        let expected = naive_spikes(&inst);
        let got = subject(&inst);
        if got == expected {
            report.passed += 1;
            continue;
        }
        let at = got.iter().zip(&expected).position(|(a, b)| a != b).unwrap_or(got.len().min(expected.len()));
        report.counterexample = Some(Counterexample {
            trial,
            seed,
            description: format!(
                "{}; {} stimuli; outputs diverge at index {at} ({:?} vs {:?}), lengths {} vs {}",
                describe(&inst.layer),
                inst.stimuli.len(),
                got.get(at),
                expected.get(at),
                got.len(),
                expected.len()
            ),
        });
        break;
    }
    report
}
