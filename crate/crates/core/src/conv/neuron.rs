//! Integrate-and-fire read-add-check-write on signed 16-bit state.

use crate::config::{LayerConfig, ResetMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeuronParams {
    pub threshold: i16,
    /// Fire on `v > threshold` instead of `v >= threshold`.
    pub strict: bool,
    pub reset: ResetMode,
    pub lower_bound: i16,
}

impl NeuronParams {
    pub fn from_layer(layer: &LayerConfig) -> Self {
        Self {
            threshold: layer.threshold,
            strict: layer.threshold_strict,
            reset: layer.reset,
            lower_bound: layer.lower_bound,
        }
    }

    fn fires(&self, v: i16) -> bool {
        if self.strict {
            v > self.threshold
        } else {
            v >= self.threshold
        }
    }
}

/// One neuron update: saturating add, threshold check, reset, lower clamp.
/// Returns the new state and whether the neuron spiked. A single update
/// produces at most one spike; any charge above threshold stays in the
/// membrane in subtract mode.
pub fn integrate(v: i16, w: i16, params: &NeuronParams) -> (i16, bool) {
    let sum = v.saturating_add(w);
    let spiked = params.fires(sum);
    let next = match (spiked, params.reset) {
        (false, _) => sum,
        // threshold > 0 and sum >= threshold, so this cannot overflow
        (true, ResetMode::Subtract) => sum - params.threshold,
        (true, ResetMode::ResetTo(value)) => value,
    };
    (next.max(params.lower_bound), spiked)
}
