//! The inverse kernel sweep for single events: which output neurons and
//! kernel offsets an input event touches, and how they map to memory
//! addresses.

use evsoc::config::LayerConfig;
use evsoc::conv::{compress_neuron_address, kernel_dims, sweep_targets, NeuronDims};
use evsoc::event::FeatureEvent;

fn show(title: &str, layer: &LayerConfig, e: FeatureEvent) {
    let (w, h) = layer.output_dims().expect("valid layer");
    let dims = NeuronDims::new(layer.out_features, w, h);
    let kdims = kernel_dims(layer);
    let targets = sweep_targets(&e, layer).expect("event in range");
    println!("{title}: event {:?} -> {} synaptic updates", (e.c, e.x, e.y), targets.len());
    for t in targets {
        let n = compress_neuron_address(t.f, t.xo, t.yo, dims).expect("in range");
        let k = kdims.compress(u32::from(e.c), t.f, t.xk, t.yk).expect("in range");
        println!("  f={} out=({}, {}) kernel=({}, {})  neuron {n:>4}  weight {k:>3}", t.f, t.xo, t.yo, t.xk, t.yk);
    }
}

fn main() {
    let plain = LayerConfig::conv(0, 1, 1, (6, 6), (3, 3), 1);
    show("3x3 stride 1, centre", &plain, FeatureEvent::new(0, 2, 2));
    show("3x3 stride 1, last column", &plain, FeatureEvent::new(0, 5, 0));

    let padded = plain.clone().with_padding(1, 1);
    show("3x3 pad 1, corner", &padded, FeatureEvent::new(0, 0, 0));

    // stride 2 visits every other kernel offset
    let strided = LayerConfig::conv(0, 1, 2, (9, 9), (3, 3), 1).with_stride(2, 2);
    show("3x3 stride 2", &strided, FeatureEvent::new(0, 4, 3));
}
