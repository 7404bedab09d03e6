//! Builds the NMNIST network from its topology string, checks it against the
//! default chip profile and prints per-core resource usage.
//!
//! `cargo run --example validate_nmnist -- out.json` also writes the network
//! description.

use evsoc::config::{parse_topology, validate_network, ChipProfile, Contents, TopologyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let topology = "34x34x2-16C5-16C3-P2-8C3-F10";
    let mut net = parse_topology(topology, TopologyOptions::default())?;
    for layer in &mut net.layers {
        layer.weights = Some(Contents::Random { random: [-24, 24] });
    }

    let profile = ChipProfile::default();
    println!("{topology}");
    for layer in &net.layers {
        let (w, h) = layer.pooled_output_dims()?;
        let cap = profile.core(layer.core_id).expect("topology fits the core count");
        println!(
            "  core{} {:>4} -> {:>2}x{:<2}x{:<3} kernel {:>6}/{:<6} neurons {:>6}/{:<6}{}",
            layer.core_id,
            if layer.fc_mode { "fc" } else { "conv" },
            w,
            h,
            layer.out_features,
            layer.kernel_words(),
            cap.kernel_words,
            layer.neuron_words()?,
            cap.neuron_words,
            if layer.pool_x > 1 { format!(" pool {}", layer.pool_x) } else { String::new() },
        );
    }

    let report = validate_network(&net, &profile);
    print!("{report}");

    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, net.to_json())?;
        println!("wrote {path}");
    }
    Ok(())
}
