//! Sensor event pre-processing: hot-pixel kill, pooling, region of interest,
//! mirror/swap, polarity selection and source mapping.
//!
//! The stages always run in this order, and [`preprocess`] is exactly their
//! composition. Every stage except source mapping can only drop events.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::Destination;
use crate::event::{FeatureEvent, PixelEvent, SENSOR_HEIGHT, SENSOR_WIDTH};

/// Rectangular patch cut out of the pooled address space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roi {
    pub x0: u16,
    pub y0: u16,
    pub w: u16,
    pub h: u16,
}

impl Roi {
    pub const fn new(x0: u16, y0: u16, w: u16, h: u16) -> Self {
        Self { x0, y0, w, h }
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x >= self.x0 && y >= self.y0 && x - self.x0 < self.w && y - self.y0 < self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarityMode {
    /// OFF events on channel 0, ON events on channel 1.
    #[default]
    BothChannels,
    OnOnly,
    OffOnly,
    /// Both polarities on channel 0.
    Merged,
}

fn default_sensor_width() -> u16 {
    SENSOR_WIDTH
}

fn default_sensor_height() -> u16 {
    SENSOR_HEIGHT
}

fn default_pool() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocConfig {
    #[serde(default = "default_sensor_width")]
    pub sensor_width: u16,
    #[serde(default = "default_sensor_height")]
    pub sensor_height: u16,
    /// Pixels whose events are suppressed, as `[x, y]` pairs.
    #[serde(default)]
    pub kill_mask: BTreeSet<(u16, u16)>,
    #[serde(default = "default_pool")]
    pub pool_x: u32,
    #[serde(default = "default_pool")]
    pub pool_y: u32,
    /// Defaults to the whole pooled space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roi: Option<Roi>,
    #[serde(default)]
    pub mirror_x: bool,
    #[serde(default)]
    pub mirror_y: bool,
    #[serde(default)]
    pub swap_xy: bool,
    #[serde(default)]
    pub polarity: PolarityMode,
    #[serde(default)]
    pub destinations: Vec<Destination>,
    /// Copy every pre-processed event to the monitor port.
    #[serde(default)]
    pub monitor_tap: bool,
}

impl Default for PreprocConfig {
    fn default() -> Self {
        Self {
            sensor_width: SENSOR_WIDTH,
            sensor_height: SENSOR_HEIGHT,
            kill_mask: BTreeSet::new(),
            pool_x: 1,
            pool_y: 1,
            roi: None,
            mirror_x: false,
            mirror_y: false,
            swap_xy: false,
            polarity: PolarityMode::BothChannels,
            destinations: Vec::new(),
            monitor_tap: false,
        }
    }
}

impl PreprocConfig {
    /// Address space after pooling.
    pub fn pooled_dims(&self) -> (u16, u16) {
        (pooled_extent(self.sensor_width, self.pool_x), pooled_extent(self.sensor_height, self.pool_y))
    }

    /// The configured ROI, or the full pooled space.
    pub fn roi_rect(&self) -> Roi {
        self.roi.unwrap_or_else(|| {
            let (w, h) = self.pooled_dims();
            Roi::new(0, 0, w, h)
        })
    }

    /// Address space handed to the first layer.
    pub fn output_dims(&self) -> (u16, u16) {
        let roi = self.roi_rect();
        if self.swap_xy {
            (roi.h, roi.w)
        } else {
            (roi.w, roi.h)
        }
    }

    /// Number of channels produced by polarity selection.
    pub fn channels(&self) -> u16 {
        match self.polarity {
            PolarityMode::BothChannels => 2,
            _ => 1,
        }
    }
}

fn pooled_extent(dim: u16, pool: u32) -> u16 {
    // dim >= 1 and pool >= 1 are checked at parse time
    ((u32::from(dim).max(1) - 1) / pool.max(1) + 1) as u16
}

/// Drops events from killed pixels.
pub fn filter_hot_pixel(e: PixelEvent, cfg: &PreprocConfig) -> Option<PixelEvent> {
    (!cfg.kill_mask.contains(&(e.x, e.y))).then_some(e)
}

/// Scales coordinates down by the pooling factors.
pub fn apply_pooling(e: PixelEvent, cfg: &PreprocConfig) -> PixelEvent {
    PixelEvent {
        x: (u32::from(e.x) / cfg.pool_x.max(1)) as u16,
        y: (u32::from(e.y) / cfg.pool_y.max(1)) as u16,
        ..e
    }
}

/// Keeps events inside the ROI and re-bases them to its origin.
pub fn apply_roi(e: PixelEvent, cfg: &PreprocConfig) -> Option<PixelEvent> {
    let roi = cfg.roi_rect();
    roi.contains(e.x, e.y).then(|| PixelEvent { x: e.x - roi.x0, y: e.y - roi.y0, ..e })
}

/// Mirror in x, then mirror in y, then swap axes. `width` and `height`
/// describe the space before the swap.
pub fn apply_transform(e: PixelEvent, cfg: &PreprocConfig, width: u16, height: u16) -> PixelEvent {
    let mut x = e.x;
    let mut y = e.y;
    if cfg.mirror_x {
        x = width - 1 - x;
    }
    if cfg.mirror_y {
        y = height - 1 - y;
    }
    if cfg.swap_xy {
        std::mem::swap(&mut x, &mut y);
    }
    PixelEvent { x, y, ..e }
}

/// Maps polarity onto an input channel, or filters the event out.
pub fn apply_polarity(e: PixelEvent, cfg: &PreprocConfig) -> Option<FeatureEvent> {
    let c = match (cfg.polarity, e.p) {
        (PolarityMode::BothChannels, p) => u16::from(p),
        (PolarityMode::OnOnly, 1) | (PolarityMode::OffOnly, 0) | (PolarityMode::Merged, _) => 0,
        _ => return None,
    };
    Some(FeatureEvent::new(c, e.x, e.y))
}

/// One copy per destination, in destination order, with the routing header
/// set and the channel shifted.
pub fn map_sources(e: FeatureEvent, destinations: &[Destination]) -> Vec<FeatureEvent> {
    destinations
        .iter()
        .map(|d| FeatureEvent { c: e.c + d.shift, ..e }.with_dest(d.target))
        .collect()
}

/// Runs one sensor event through every stage up to (not including) source
/// mapping. This is what the monitor tap observes.
pub fn preprocess_single(e: PixelEvent, cfg: &PreprocConfig) -> Option<FeatureEvent> {
    let e = filter_hot_pixel(e, cfg)?;
    let e = apply_pooling(e, cfg);
    let e = apply_roi(e, cfg)?;
    let roi = cfg.roi_rect();
    let e = apply_transform(e, cfg, roi.w, roi.h);
    apply_polarity(e, cfg)
}

/// The full pre-processing pipeline.
pub fn preprocess(e: PixelEvent, cfg: &PreprocConfig) -> Vec<FeatureEvent> {
    match preprocess_single(e, cfg) {
        Some(fe) => map_sources(fe, &cfg.destinations),
        None => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Port;

    fn cfg() -> PreprocConfig {
        PreprocConfig { destinations: vec![Destination::new(Port::Core(0), 0)], ..Default::default() }
    }

    fn ev(x: u16, y: u16, p: u8) -> PixelEvent {
        PixelEvent::new(42, x, y, p)
    }

    #[test]
    fn hot_pixel_kill() {
        let mut c = cfg();
        assert_eq!(filter_hot_pixel(ev(5, 5, 1), &c), Some(ev(5, 5, 1)));
        c.kill_mask.insert((5, 5));
        assert_eq!(filter_hot_pixel(ev(5, 5, 1), &c), None);
        assert_eq!(filter_hot_pixel(ev(5, 6, 0), &c), Some(ev(5, 6, 0)));
    }

    #[test]
    fn pooling_floor_divides() {
        let mut c = cfg();
        assert_eq!(apply_pooling(ev(5, 7, 1), &c), ev(5, 7, 1));
        c.pool_x = 2;
        c.pool_y = 2;
        assert_eq!(apply_pooling(ev(5, 7, 1), &c), ev(2, 3, 1));
        c.pool_x = 4;
        c.pool_y = 1;
        assert_eq!(apply_pooling(ev(127, 0, 0), &c), ev(31, 0, 0));
        assert_eq!(c.pooled_dims(), (32, 128));
    }

    #[test]
    fn roi_cut_and_rebase() {
        let mut c = cfg();
        c.roi = Some(Roi::new(0, 0, 128, 128));
        assert_eq!(apply_roi(ev(127, 3, 1), &c), Some(ev(127, 3, 1)));
        c.roi = Some(Roi::new(10, 10, 4, 4));
        assert_eq!(apply_roi(ev(9, 10, 1), &c), None);
        assert_eq!(apply_roi(ev(14, 10, 1), &c), None);
        assert_eq!(apply_roi(ev(10, 13, 1), &c), Some(ev(0, 3, 1)));
    }

    #[test]
    fn transforms() {
        let mut c = cfg();
        assert_eq!(apply_transform(ev(3, 9, 1), &c, 128, 128), ev(3, 9, 1));
        c.mirror_x = true;
        assert_eq!(apply_transform(ev(0, 9, 1), &c, 128, 128), ev(127, 9, 1));
        c.mirror_x = false;
        c.swap_xy = true;
        assert_eq!(apply_transform(ev(3, 9, 1), &c, 128, 128), ev(9, 3, 1));
        // mirror then swap on a non-square space
        c.mirror_y = true;
        assert_eq!(apply_transform(ev(3, 0, 1), &c, 8, 4), ev(3, 3, 1));
    }

    #[test]
    fn polarity_modes() {
        let mut c = cfg();
        assert_eq!(apply_polarity(ev(1, 1, 1), &c).unwrap().c, 1);
        assert_eq!(apply_polarity(ev(1, 1, 0), &c).unwrap().c, 0);
        c.polarity = PolarityMode::Merged;
        assert_eq!(apply_polarity(ev(1, 1, 0), &c).unwrap().c, 0);
        assert_eq!(apply_polarity(ev(1, 1, 1), &c).unwrap().c, 0);
        c.polarity = PolarityMode::OnOnly;
        assert_eq!(apply_polarity(ev(1, 1, 0), &c), None);
        assert_eq!(apply_polarity(ev(1, 1, 1), &c).unwrap().c, 0);
        c.polarity = PolarityMode::OffOnly;
        assert_eq!(apply_polarity(ev(1, 1, 1), &c), None);
        assert_eq!(apply_polarity(ev(1, 1, 0), &c).unwrap().c, 0);
    }

    #[test]
    fn source_mapping_shifts_per_destination() {
        let one = map_sources(FeatureEvent::new(1, 2, 3), &[Destination::new(Port::Core(0), 0)]);
        assert_eq!(one, vec![FeatureEvent::new(1, 2, 3).with_dest(Port::Core(0))]);
        let two = map_sources(
            FeatureEvent::new(1, 2, 3),
            &[Destination::new(Port::Core(1), 0), Destination::new(Port::Core(4), 2)],
        );
        assert_eq!(
            two,
            vec![
                FeatureEvent::new(1, 2, 3).with_dest(Port::Core(1)),
                FeatureEvent::new(3, 2, 3).with_dest(Port::Core(4)),
            ]
        );
    }

    #[test]
    fn pipeline_examples() {
        let c = cfg();
        assert_eq!(preprocess(PixelEvent::new(9, 5, 7, 1), &c), vec![FeatureEvent::new(1, 5, 7).with_dest(Port::Core(0))]);

        let mut c2 = cfg();
        c2.pool_x = 2;
        c2.pool_y = 2;
        c2.roi = Some(Roi::new(0, 0, 64, 64));
        c2.polarity = PolarityMode::Merged;
        assert_eq!(
            preprocess(PixelEvent::new(9, 127, 127, 0), &c2),
            vec![FeatureEvent::new(0, 63, 63).with_dest(Port::Core(0))]
        );

        let mut c3 = cfg();
        c3.kill_mask.insert((5, 7));
        assert!(preprocess(PixelEvent::new(9, 5, 7, 1), &c3).is_empty());
    }

    #[test]
    fn output_dims_follow_roi_and_swap() {
        let mut c = cfg();
        c.pool_x = 2;
        c.roi = Some(Roi::new(4, 8, 20, 30));
        assert_eq!(c.output_dims(), (20, 30));
        c.swap_xy = true;
        assert_eq!(c.output_dims(), (30, 20));
    }
}
