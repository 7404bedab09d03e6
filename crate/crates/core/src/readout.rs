//! Classification readout: per-class spike counts, sliding averages over the
//! last `W` tick bins, threshold flags and the arg-max class.
//!
//! Values are exact rationals with a common denominator (the window length,
//! or 1 in bin-count mode). Outputs change only on a tick and stay latched
//! in between.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Largest number of classes the readout can track.
pub const MAX_CLASSES: u8 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    /// Mean over the last `W` tick bins.
    MovingAverage(u32),
    /// Plain count of the last bin.
    BinCount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutConfig {
    pub n_classes: u8,
    pub mode: ReadoutMode,
    /// Per-class thresholds; a flag is raised when `value >= threshold`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<u32>>,
}

impl ReadoutConfig {
    pub fn new(n_classes: u8, mode: ReadoutMode) -> Self {
        Self { n_classes, mode, thresholds: None }
    }

    pub fn window(&self) -> u32 {
        match self.mode {
            ReadoutMode::MovingAverage(w) => w,
            ReadoutMode::BinCount => 1,
        }
    }

    /// Range check; the error names the field, its value and the allowed range.
    pub(crate) fn check(&self) -> Result<(), (&'static str, i64, &'static str)> {
        if !(1..=MAX_CLASSES).contains(&self.n_classes) {
            return Err(("n_classes", self.n_classes.into(), "1..=16"));
        }
        if let ReadoutMode::MovingAverage(0) = self.mode {
            return Err(("mode.moving_average", 0, ">= 1"));
        }
        if let Some(t) = &self.thresholds {
            if t.len() != usize::from(self.n_classes) {
                return Err(("thresholds.len", t.len() as i64, "n_classes"));
            }
        }
        Ok(())
    }
}

/// The values presented after one tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadoutOutput {
    pub tick: u64,
    /// Per-class numerators over [`Self::denominator`].
    pub numerators: Vec<u64>,
    pub denominator: u32,
    pub over_threshold: Vec<bool>,
    pub max_class: u8,
}

impl ReadoutOutput {
    fn zeros(n_classes: usize, denominator: u32) -> Self {
        Self {
            tick: 0,
            numerators: vec![0; n_classes],
            denominator,
            over_threshold: vec![false; n_classes],
            max_class: 0,
        }
    }

    /// Rounded-down integer view of a class value.
    pub fn floor(&self, class: usize) -> u64 {
        self.numerators[class] / u64::from(self.denominator)
    }

    pub fn value(&self, class: usize) -> f64 {
        self.numerators[class] as f64 / f64::from(self.denominator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("class {class} out of range for a readout with {n_classes} classes")]
pub struct ClassOutOfRange {
    pub class: u16,
    pub n_classes: u8,
}

#[derive(Debug, Clone)]
pub struct Readout {
    config: ReadoutConfig,
    current: Vec<u64>,
    window: VecDeque<Vec<u64>>,
    window_sum: Vec<u64>,
    latched: ReadoutOutput,
    ticks: u64,
    dropped: u64,
}

impl Readout {
    pub fn new(config: ReadoutConfig) -> Self {
        let n = usize::from(config.n_classes);
        let latched = ReadoutOutput::zeros(n, config.window());
        Self {
            current: vec![0; n],
            window: VecDeque::new(),
            window_sum: vec![0; n],
            latched,
            ticks: 0,
            dropped: 0,
            config,
        }
    }

    pub fn config(&self) -> &ReadoutConfig {
        &self.config
    }

    /// Counts one spike for `class` in the current bin.
    pub fn accumulate(&mut self, class: u16) -> Result<(), ClassOutOfRange> {
        match self.current.get_mut(usize::from(class)) {
            Some(count) => {
                *count += 1;
                Ok(())
            }
            None => {
                self.dropped += 1;
                Err(ClassOutOfRange { class, n_classes: self.config.n_classes })
            }
        }
    }

    /// Closes the current bin and latches a new output.
    pub fn on_tick(&mut self) -> ReadoutOutput {
        let n = self.current.len();
        let bin = std::mem::replace(&mut self.current, vec![0; n]);
        let numerators = match self.config.mode {
            ReadoutMode::BinCount => bin,
            ReadoutMode::MovingAverage(w) => {
                for (s, b) in self.window_sum.iter_mut().zip(&bin) {
                    *s += b;
                }
                self.window.push_back(bin);
                if self.window.len() > w as usize {
                    let old = self.window.pop_front().expect("window is non-empty");
                    for (s, o) in self.window_sum.iter_mut().zip(old) {
                        *s -= o;
                    }
                }
                self.window_sum.clone()
            }
        };
        let denominator = self.config.window();
        let over_threshold = match &self.config.thresholds {
            Some(t) => numerators.iter().zip(t).map(|(&v, &th)| v >= u64::from(th) * u64::from(denominator)).collect(),
            None => vec![false; n],
        };
        let max_class = argmax_lowest(&numerators) as u8;
        self.latched = ReadoutOutput { tick: self.ticks, numerators, denominator, over_threshold, max_class };
        self.ticks += 1;
        self.latched.clone()
    }

    /// The output presented since the last tick.
    pub fn latched(&self) -> &ReadoutOutput {
        &self.latched
    }

    /// Counts in the bin still being accumulated.
    pub fn current_bin(&self) -> &[u64] {
        &self.current
    }

    /// Spikes dropped for an out-of-range class.
    pub fn dropped(&self) -> u64 {
        self.dropped
    }
}

fn argmax_lowest(values: &[u64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
