//! Kernel anchor and inverse address sweep.
//!
//! For an input coordinate `p` (after padding) the touched output neurons
//! are the `o` with `p = o * stride + k` for some kernel offset `k`. The
//! sweep starts at the anchor (smallest `k`, largest `o`) and then moves the
//! kernel offset forward by one stride while the output index moves back by
//! one, until either leaves its range.

use crate::config::LayerConfig;
use crate::event::FeatureEvent;

/// Largest number of kernel offsets along one axis.
const MAX_AXIS: usize = crate::config::MAX_KERNEL as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SynapticTarget {
    pub f: u32,
    pub xo: u32,
    pub yo: u32,
    pub xk: u32,
    pub yk: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SweepError {
    #[error("channel {c} outside the {max} input channels")]
    Channel { c: u16, max: u32 },
    #[error("coordinate ({x}, {y}) outside the {width}x{height} input")]
    Coordinate { x: u16, y: u16, width: u32, height: u32 },
}

/// `(kernel offset, output index)` pairs along one axis, ascending in offset.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AxisSweep {
    pairs: [(u32, u32); MAX_AXIS],
    len: usize,
}

impl AxisSweep {
    pub(crate) fn new(padded: u32, kernel: u32, stride: u32, out: u32) -> Self {
        let mut sweep = Self { pairs: [(0, 0); MAX_AXIS], len: 0 };
        if out == 0 {
            return sweep;
        }
        let mut k = padded % stride;
        let mut o = padded / stride;
        if o >= out {
            // anchor lies beyond the output edge; advance to the last output
            k += (o - (out - 1)) * stride;
            o = out - 1;
        }
        while k < kernel && sweep.len < MAX_AXIS {
            sweep.pairs[sweep.len] = (k, o);
            sweep.len += 1;
            if o == 0 {
                break;
            }
            k += stride;
            o -= 1;
        }
        sweep
    }

    pub(crate) fn as_slice(&self) -> &[(u32, u32)] {
        &self.pairs[..self.len]
    }
}

/// The per-axis sweeps of one event; `f` is iterated by the caller.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EventSweep {
    pub x: AxisSweep,
    pub y: AxisSweep,
}

impl EventSweep {
    pub(crate) fn new(e: &FeatureEvent, layer: &LayerConfig, out_w: u32, out_h: u32) -> Result<Self, SweepError> {
        if u32::from(e.c) >= layer.in_channels {
            return Err(SweepError::Channel { c: e.c, max: layer.in_channels });
        }
        if u32::from(e.x) >= layer.in_width || u32::from(e.y) >= layer.in_height {
            return Err(SweepError::Coordinate { x: e.x, y: e.y, width: layer.in_width, height: layer.in_height });
        }
        let xp = u32::from(e.x) + layer.pad_x;
        let yp = u32::from(e.y) + layer.pad_y;
        Ok(Self {
            x: AxisSweep::new(xp, layer.kernel_w, layer.stride_x, out_w),
            y: AxisSweep::new(yp, layer.kernel_h, layer.stride_y, out_h),
        })
    }

    pub(crate) fn len_per_feature(&self) -> usize {
        self.x.len * self.y.len
    }
}

/// Every `(f, xo, yo, xk, yk)` touched by an input event, ordered by `f`,
/// then `yk`, then `xk`.
pub fn sweep_targets(e: &FeatureEvent, layer: &LayerConfig) -> Result<Vec<SynapticTarget>, SweepError> {
    let (out_w, out_h) = layer.output_dims().unwrap_or((0, 0));
    let sweep = EventSweep::new(e, layer, out_w, out_h)?;
    let mut targets = Vec::with_capacity(layer.out_features as usize * sweep.len_per_feature());
    for f in 0..layer.out_features {
        for &(yk, yo) in sweep.y.as_slice() {
            for &(xk, xo) in sweep.x.as_slice() {
                targets.push(SynapticTarget { f, xo, yo, xk, yk });
            }
        }
    }
    Ok(targets)
}
