//! Resource and wiring checks of a network against a chip profile.

use std::collections::BTreeMap;
use std::fmt;

use super::{ChipProfile, Contents, LayerConfig, NetworkConfig, MAX_FANOUT, MAX_FEATURES, MAX_KERNEL};
use crate::event::Port;
use crate::router::RouteTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    MaxKernelSize,
    FeaturesPerLayer,
    InputChannels,
    KernelMemory,
    NeuronMemory,
    BiasMemory,
    FcSynapseCap,
    Fanout,
    DistinctDestinations,
    PreprocDestinations,
    FeedForward,
    ChannelShiftCollision,
    UnknownDestination,
    CoreId,
    DuplicateCore,
    StridePowerOfTwo,
    DimensionUnderflow,
    ChannelRange,
    InputDimensions,
    ReadoutClasses,
    ContentsLength,
    ContentsRange,
    KillIndex,
    PreprocRoi,
    KillMask,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::MaxKernelSize => "max kernel size",
            Constraint::FeaturesPerLayer => "features per layer",
            Constraint::InputChannels => "input channels",
            Constraint::KernelMemory => "kernel memory",
            Constraint::NeuronMemory => "neuron memory",
            Constraint::BiasMemory => "bias memory",
            Constraint::FcSynapseCap => "FC synapse cap",
            Constraint::Fanout => "destination fan-out",
            Constraint::DistinctDestinations => "distinct destinations",
            Constraint::PreprocDestinations => "preproc destinations",
            Constraint::FeedForward => "feed-forward graph",
            Constraint::ChannelShiftCollision => "channel-shift collision",
            Constraint::UnknownDestination => "unknown destination",
            Constraint::CoreId => "core id",
            Constraint::DuplicateCore => "duplicate core",
            Constraint::StridePowerOfTwo => "stride power of two",
            Constraint::DimensionUnderflow => "dimension underflow",
            Constraint::ChannelRange => "channel range",
            Constraint::InputDimensions => "input dimensions",
            Constraint::ReadoutClasses => "readout classes",
            Constraint::ContentsLength => "contents length",
            Constraint::ContentsRange => "contents range",
            Constraint::KillIndex => "kill index",
            Constraint::PreprocRoi => "preproc roi",
            Constraint::KillMask => "kill mask",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One violated constraint: where, what, and how much was needed vs available.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub at: Port,
    pub constraint: Constraint,
    pub required: u64,
    pub available: u64,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} (required {}, limit {})",
            self.at, self.constraint, self.required, self.available
        )?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, constraint: Constraint) -> bool {
        self.violations.iter().any(|v| v.constraint == constraint)
    }

    pub fn constraints(&self) -> Vec<Constraint> {
        self.violations.iter().map(|v| v.constraint).collect()
    }

    fn push(&mut self, at: Port, constraint: Constraint, required: u64, available: u64, detail: impl Into<String>) {
        self.violations.push(Violation { at, constraint, required, available, detail: detail.into() });
    }

    /// Records a violation when `required > available`.
    fn limit(&mut self, at: Port, constraint: Constraint, required: u64, available: u64) {
        if required > available {
            self.push(at, constraint, required, available, "");
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "ok: no violations");
        }
        writeln!(f, "{} violation(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// A block's output as seen by its destinations.
struct SourceShape {
    channels: u64,
    dims: Option<(u64, u64)>,
}

fn source_shape(net: &NetworkConfig, port: Port) -> Option<SourceShape> {
    match port {
        Port::Preproc => {
            let (w, h) = net.preproc.output_dims();
            Some(SourceShape { channels: net.preproc.channels().into(), dims: Some((w.into(), h.into())) })
        }
        Port::Core(id) => net.layer(id).map(|l| SourceShape {
            channels: l.out_features.into(),
            dims: l.pooled_output_dims().ok().map(|(w, h)| (w.into(), h.into())),
        }),
        _ => None,
    }
}

fn check_contents<T: PartialOrd>(
    report: &mut ValidationReport,
    at: Port,
    what: &str,
    contents: &Option<Contents<T>>,
    expected: u64,
) {
    match contents {
        Some(Contents::Values(v)) if v.len() as u64 != expected => {
            report.push(at, Constraint::ContentsLength, expected, v.len() as u64, what);
        }
        Some(Contents::Random { random: [lo, hi] }) if lo > hi => {
            report.push(at, Constraint::ContentsRange, 0, 0, format!("{what}: empty random range"));
        }
        _ => {}
    }
}

fn stride_ok(stride: u32, strict: bool) -> bool {
    !strict || matches!(stride, 1 | 2 | 4 | 8)
}

fn check_layer(report: &mut ValidationReport, layer: &LayerConfig, profile: &ChipProfile) {
    let at = layer.port();
    let Some(cap) = profile.core(layer.core_id) else {
        report.push(at, Constraint::CoreId, layer.core_id.into(), profile.n_cores() as u64 - 1, "no such core");
        return;
    };

    report.limit(at, Constraint::FeaturesPerLayer, layer.out_features.into(), MAX_FEATURES.into());
    report.limit(at, Constraint::InputChannels, layer.in_channels.into(), MAX_FEATURES.into());
    if layer.out_features <= MAX_FEATURES {
        // an oversized feature count is already reported above
        report.limit(at, Constraint::BiasMemory, layer.out_features.into(), cap.bias_words);
    }

    if layer.fc_mode {
        report.limit(at, Constraint::FcSynapseCap, layer.kernel_words(), cap.fc_synapses);
    } else {
        let kernel = layer.kernel_w.max(layer.kernel_h);
        report.limit(at, Constraint::MaxKernelSize, kernel.into(), MAX_KERNEL.into());
        report.limit(at, Constraint::KernelMemory, layer.kernel_words(), cap.kernel_words);
        for stride in [layer.stride_x, layer.stride_y] {
            if !stride_ok(stride, profile.strict_stride) {
                report.push(at, Constraint::StridePowerOfTwo, stride.into(), 8, "stride must be one of 1, 2, 4, 8");
            }
        }
    }

    match layer.neuron_words() {
        Ok(neurons) => {
            report.limit(at, Constraint::NeuronMemory, neurons, cap.neuron_words);
            check_contents(report, at, "initial_state", &layer.initial_state, neurons);
            if let Some(&bad) = layer.neuron_kill.iter().find(|&&n| u64::from(n) >= neurons) {
                report.push(at, Constraint::KillIndex, bad.into(), neurons, "neuron_kill");
            }
        }
        Err(e) => report.push(at, Constraint::DimensionUnderflow, e.kernel.into(), e.padded.into(), e.to_string()),
    }

    let words = layer.kernel_words();
    check_contents(report, at, "weights", &layer.weights, words);
    check_contents(report, at, "bias", &layer.bias, layer.out_features.into());
    if let Some(&bad) = layer.kernel_kill.iter().find(|&&k| u64::from(k) >= words) {
        report.push(at, Constraint::KillIndex, bad.into(), words, "kernel_kill");
    }
    if let Some(&bad) = layer.bias_kill.iter().find(|&&f| f >= layer.out_features) {
        report.push(at, Constraint::KillIndex, bad.into(), layer.out_features.into(), "bias_kill");
    }
}

fn check_destinations(report: &mut ValidationReport, net: &NetworkConfig, source: Port) {
    let dests = net.destinations_of(source);
    if source == Port::Preproc && dests.is_empty() {
        report.push(source, Constraint::PreprocDestinations, 1, 0, "pre-processor has no destination");
    }
    report.limit(source, Constraint::Fanout, dests.len() as u64, MAX_FANOUT as u64);
    for (i, d) in dests.iter().enumerate() {
        if dests[..i].iter().any(|e| e.target == d.target) {
            report.push(source, Constraint::DistinctDestinations, 1, 0, format!("{} listed twice", d.target));
        }
    }

    let Some(shape) = source_shape(net, source) else { return };
    for d in dests {
        let top = shape.channels + u64::from(d.shift);
        match d.target {
            Port::Core(id) => match net.layer(id) {
                Some(dest) => {
                    if top > u64::from(dest.in_channels) {
                        report.push(
                            source,
                            Constraint::ChannelRange,
                            top,
                            dest.in_channels.into(),
                            format!("shifted channels exceed the input channels of {}", d.target),
                        );
                    }
                    if let Some((w, h)) = shape.dims {
                        if w > dest.in_width.into() || h > dest.in_height.into() {
                            report.push(
                                source,
                                Constraint::InputDimensions,
                                w.max(h),
                                u64::from(dest.in_width.min(dest.in_height)),
                                format!("{w}x{h} output does not fit the {}x{} input of {}", dest.in_width, dest.in_height, d.target),
                            );
                        }
                    }
                }
                None => report.push(source, Constraint::UnknownDestination, id.into(), 0, format!("{} is not configured", d.target)),
            },
            Port::Readout => match &net.readout {
                Some(r) => report.limit(source, Constraint::ReadoutClasses, top, r.n_classes.into()),
                None => report.push(source, Constraint::UnknownDestination, 0, 0, "readout is not configured"),
            },
            Port::Preproc | Port::Monitor => {
                report.push(source, Constraint::UnknownDestination, 0, 0, format!("{} cannot receive events", d.target))
            }
        }
    }
}

fn check_collisions(report: &mut ValidationReport, net: &NetworkConfig, sources: &[Port]) {
    let mut ranges: BTreeMap<u8, Vec<(u64, u64, Port)>> = BTreeMap::new();
    for &source in sources {
        let Some(shape) = source_shape(net, source) else { continue };
        for d in net.destinations_of(source) {
            if let Port::Core(id) = d.target {
                let lo = u64::from(d.shift);
                ranges.entry(id).or_default().push((lo, lo + shape.channels, source));
            }
        }
    }
    for (id, mut list) in ranges {
        list.sort();
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                let (a_lo, a_hi, a) = list[i];
                let (b_lo, b_hi, b) = list[j];
                let overlap = a_hi.min(b_hi).saturating_sub(a_lo.max(b_lo));
                if overlap > 0 && a != b {
                    report.push(
                        Port::Core(id),
                        Constraint::ChannelShiftCollision,
                        overlap,
                        0,
                        format!("{a} channels {a_lo}..{a_hi} overlap {b} channels {b_lo}..{b_hi}"),
                    );
                }
            }
        }
    }
}

fn check_preproc(report: &mut ValidationReport, net: &NetworkConfig) {
    let pre = &net.preproc;
    let (pw, ph) = pre.pooled_dims();
    if let Some(roi) = pre.roi {
        let right = u64::from(roi.x0) + u64::from(roi.w);
        let bottom = u64::from(roi.y0) + u64::from(roi.h);
        if right > pw.into() || bottom > ph.into() {
            report.push(
                Port::Preproc,
                Constraint::PreprocRoi,
                right.max(bottom),
                pw.max(ph).into(),
                format!("roi reaches ({right}, {bottom}) in a {pw}x{ph} pooled space"),
            );
        }
    }
    if let Some(&(x, y)) = pre.kill_mask.iter().find(|&&(x, y)| x >= pre.sensor_width || y >= pre.sensor_height) {
        report.push(Port::Preproc, Constraint::KillMask, x.max(y).into(), pre.sensor_width.max(pre.sensor_height).into(), format!("pixel ({x}, {y}) outside the sensor"));
    }
}

/// Checks a parsed network against a chip profile. Violations are collected,
/// never returned as errors.
pub fn validate_network(net: &NetworkConfig, profile: &ChipProfile) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut seen = BTreeMap::new();
    for layer in &net.layers {
        if seen.insert(layer.core_id, ()).is_some() {
            report.push(layer.port(), Constraint::DuplicateCore, 1, 0, "core configured twice");
        }
    }

    check_preproc(&mut report, net);
    for layer in &net.layers {
        check_layer(&mut report, layer, profile);
    }

    let mut sources = vec![Port::Preproc];
    sources.extend(net.layers.iter().map(LayerConfig::port));
    sources.dedup();
    for &source in &sources {
        check_destinations(&mut report, net, source);
    }
    check_collisions(&mut report, net, &sources);

    if let Err(cycle) = RouteTable::from_config(net).check_feedforward() {
        report.push(cycle.0[0], Constraint::FeedForward, cycle.0.len() as u64, 0, cycle.to_string());
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Destination, LayerConfig};
    use crate::preproc::PreprocConfig;
    use crate::readout::{ReadoutConfig, ReadoutMode};

    fn net(layers: Vec<LayerConfig>) -> NetworkConfig {
        NetworkConfig {
            preproc: PreprocConfig {
                destinations: vec![Destination::new(Port::Core(0), 0)],
                ..Default::default()
            },
            layers,
            readout: Some(ReadoutConfig::new(10, ReadoutMode::BinCount)),
            profile: None,
        }
    }

    fn base() -> LayerConfig {
        LayerConfig::conv(0, 2, 4, (128, 128), (3, 3), 10).with_padding(1, 1)
    }

    /// Same layer on a 64x64 region, small enough for every core.
    fn small_net(layers: Vec<LayerConfig>) -> NetworkConfig {
        let mut n = net(layers);
        n.preproc.roi = Some(crate::preproc::Roi::new(0, 0, 64, 64));
        n
    }

    fn small(core: u8, c: u32) -> LayerConfig {
        LayerConfig::conv(core, c, 4, (64, 64), (3, 3), 10).with_padding(1, 1)
    }

    #[test]
    fn clean_single_layer() {
        let report = validate_network(&net(vec![base()]), &ChipProfile::default());
        assert!(report.is_ok(), "{report}");
    }

    #[test]
    fn kernel_seventeen_is_one_violation() {
        let mut l = base();
        l.kernel_w = 17;
        l.kernel_h = 17;
        l.pad_x = 8;
        l.pad_y = 8;
        let report = validate_network(&net(vec![l]), &ChipProfile::default());
        assert_eq!(report.constraints(), vec![Constraint::MaxKernelSize]);
        assert_eq!((report.violations[0].required, report.violations[0].available), (17, 16));
    }

    #[test]
    fn fc_over_cap() {
        // 2 x 50 x 70 inputs x 10 outputs = 70,000 synapses on a 64Ki core
        let mut fc = LayerConfig::fully_connected(0, 2, (50, 70), 10, 10);
        fc.destinations.clear();
        let mut n = net(vec![fc]);
        n.preproc.roi = Some(crate::preproc::Roi::new(0, 0, 50, 70));
        let report = validate_network(&n, &ChipProfile::default());
        assert_eq!(report.constraints(), vec![Constraint::FcSynapseCap], "{report}");
        assert_eq!((report.violations[0].required, report.violations[0].available), (70_000, 65_536));
    }

    #[test]
    fn disjoint_shifts_do_not_collide() {
        // preproc (2 channels) and core0 (4 features) both feed core3
        let mut n = small_net(vec![small(0, 2).with_destination(Port::Core(3), 2), small(3, 6)]);
        n.preproc.destinations.push(Destination::new(Port::Core(3), 0));
        let report = validate_network(&n, &ChipProfile::default());
        assert!(report.is_ok(), "{report}");

        n.layers[0].destinations[0].shift = 1;
        let report = validate_network(&n, &ChipProfile::default());
        assert_eq!(report.constraints(), vec![Constraint::ChannelShiftCollision], "{report}");
        assert_eq!(report.violations[0].required, 1);
    }

    #[test]
    fn cycle_is_reported_once() {
        let l0 = small(0, 2).with_destination(Port::Core(1), 0);
        let l1 = small(1, 8).with_destination(Port::Core(2), 0);
        let l2 = small(2, 4).with_destination(Port::Core(1), 4);
        let report = validate_network(&small_net(vec![l0, l1, l2]), &ChipProfile::default());
        assert_eq!(report.constraints(), vec![Constraint::FeedForward], "{report}");
    }

    #[test]
    fn wiring_errors() {
        let l0 = base().with_destination(Port::Core(5), 0);
        let report = validate_network(&net(vec![l0]), &ChipProfile::default());
        assert_eq!(report.constraints(), vec![Constraint::UnknownDestination]);

        let l0 = base().with_destination(Port::Readout, 8);
        let report = validate_network(&net(vec![l0]), &ChipProfile::default());
        assert_eq!(report.constraints(), vec![Constraint::ReadoutClasses]);

        let mut n = net(vec![base()]);
        n.preproc.destinations.clear();
        assert_eq!(validate_network(&n, &ChipProfile::default()).constraints(), vec![Constraint::PreprocDestinations]);
    }

    #[test]
    fn strides_must_be_powers_of_two_when_strict() {
        let l = base().with_stride(3, 1);
        let mut profile = ChipProfile::default();
        assert_eq!(validate_network(&net(vec![l.clone()]), &profile).constraints(), vec![Constraint::StridePowerOfTwo]);
        profile.strict_stride = false;
        assert!(validate_network(&net(vec![l]), &profile).is_ok());
    }

    #[test]
    fn contents_length_and_kill_indices() {
        let mut l = base();
        l.weights = Some(Contents::Values(vec![1; 5]));
        l.kernel_kill = vec![72];
        let report = validate_network(&net(vec![l]), &ChipProfile::default());
        assert_eq!(report.constraints(), vec![Constraint::ContentsLength, Constraint::KillIndex]);
    }
}
