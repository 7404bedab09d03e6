//! Neuron dynamics on a single core: leak ticks driving bias updates, the
//! two reset modes, the lower-bound clamp, and a fully connected layer.

use evsoc::config::{Contents, LayerConfig, ResetMode};
use evsoc::conv::{ContentLoader, ConvCore};
use evsoc::event::{FeatureEvent, Port};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut layer = LayerConfig::conv(0, 1, 2, (2, 2), (1, 1), 10).with_destination(Port::Readout, 0);
    layer.leak_enabled = true;
    layer.bias = Some(Contents::Values(vec![4, -6]));
    layer.lower_bound = -12;
    let mut core = ConvCore::load(layer.clone(), &ContentLoader::default())?;
    for tick in 1..=4 {
        let spikes = core.leak_tick();
        println!("leak tick {tick}: state {:?} spikes {spikes:?}", core.neurons().state());
    }

    layer.reset = ResetMode::ResetTo(-3);
    let mut core = ConvCore::load(layer, &ContentLoader::default())?;
    for _ in 0..3 {
        core.leak_tick();
    }
    println!("reset-to-value after 3 ticks: {:?}", core.neurons().state());

    // 2 channels x 2 x 2 inputs flattened to 8 rows of 3 outputs
    let mut fc = LayerConfig::fully_connected(1, 2, (2, 2), 3, 5).with_destination(Port::Readout, 0);
    let weights: Vec<i8> = (0..24).map(|k| (k % 7) as i8 - 2).collect();
    fc.weights = Some(Contents::Values(weights));
    let mut core = ConvCore::load(fc, &ContentLoader::default())?;
    for e in [FeatureEvent::new(0, 1, 0), FeatureEvent::new(1, 1, 1), FeatureEvent::new(1, 0, 0)] {
        let out = core.process(e)?;
        println!("fc input {:?}: state {:?} out {:?}", (e.c, e.x, e.y), core.neurons().state(), out);
    }
    println!("{:?}", core.stats());
    Ok(())
}
