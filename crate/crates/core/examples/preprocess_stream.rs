//! Pushes sensor events through the pre-processor stage by stage: hot-pixel
//! kill, 2x2 pooling, region of interest, mirroring and polarity mapping,
//! then fans each survivor out to two cores with a channel shift.

use evsoc::config::Destination;
use evsoc::event::{PixelEvent, Port};
use evsoc::io::synthetic_stream;
use evsoc::preproc::{self, PolarityMode, PreprocConfig, Roi};

fn main() {
    let cfg = PreprocConfig {
        kill_mask: [(3, 3)].into_iter().collect(),
        pool_x: 2,
        pool_y: 2,
        roi: Some(Roi::new(16, 16, 32, 32)),
        mirror_x: true,
        polarity: PolarityMode::OnOnly,
        destinations: vec![Destination::new(Port::Core(0), 0), Destination::new(Port::Core(1), 2)],
        ..Default::default()
    };
    println!("output space {:?} x {} channel(s)", cfg.output_dims(), cfg.channels());

    let e = PixelEvent::new(10, 70, 41, 1);
    println!("sensor      {e:?}");
    let e = preproc::filter_hot_pixel(e, &cfg).expect("pixel is alive");
    let e = preproc::apply_pooling(e, &cfg);
    println!("pooled      ({}, {})", e.x, e.y);
    let e = preproc::apply_roi(e, &cfg).expect("inside the region");
    println!("roi         ({}, {})", e.x, e.y);
    let roi = cfg.roi_rect();
    let e = preproc::apply_transform(e, &cfg, roi.w, roi.h);
    println!("mirrored    ({}, {})", e.x, e.y);
    let fe = preproc::apply_polarity(e, &cfg).expect("on event");
    for out in preproc::map_sources(fe, &cfg.destinations) {
        println!("  -> {out:?}");
    }

    assert!(preproc::preprocess(PixelEvent::new(0, 3, 3, 1), &cfg).is_empty(), "killed pixel");
    assert!(preproc::preprocess(PixelEvent::new(0, 70, 41, 0), &cfg).is_empty(), "off event");

    let stream = synthetic_stream(3, 50_000, 128, 128, 10);
    let passed = stream.iter().filter(|&&e| !preproc::preprocess(e, &cfg).is_empty()).count();
    println!("{passed} of {} synthetic events pass", stream.len());
}
