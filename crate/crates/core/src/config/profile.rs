use serde::{Deserialize, Serialize};

use crate::event::NUM_CORES;

/// Largest kernel side length.
pub const MAX_KERNEL: u32 = 16;
/// Largest number of output features (and input channels) per core.
pub const MAX_FEATURES: u32 = 1024;
/// Largest number of routing destinations per source block.
pub const MAX_FANOUT: usize = 2;

/// Memory sizes of one core, in words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreCapacity {
    /// 8-bit kernel words.
    pub kernel_words: u64,
    /// 16-bit neuron state words.
    pub neuron_words: u64,
    /// 16-bit bias words.
    pub bias_words: u64,
    /// Synapses available in fully connected mode.
    pub fc_synapses: u64,
}

impl CoreCapacity {
    const fn class(kernel_words: u64, neuron_words: u64) -> Self {
        Self { kernel_words, neuron_words, bias_words: MAX_FEATURES as u64, fc_synapses: kernel_words }
    }
}

/// Resource limits of the target chip.
///
/// Only totals and the three fully connected caps are known for the real
/// device, so the default assigns three size classes of cores:
/// two with 64Ki kernel words, two with 32Ki and five with 16Ki, which
/// adds up to exactly 272 KiB of synaptic memory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChipProfile {
    pub cores: Vec<CoreCapacity>,
    /// Total synaptic memory in 8-bit words.
    pub total_synaptic_words: u64,
    /// Total neuron budget.
    pub total_neurons: u64,
    /// Restrict strides to powers of two.
    pub strict_stride: bool,
}

impl Default for ChipProfile {
    fn default() -> Self {
        const KERNEL: [u64; NUM_CORES as usize] =
            [65_536, 65_536, 32_768, 32_768, 16_384, 16_384, 16_384, 16_384, 16_384];
        const NEURON: [u64; NUM_CORES as usize] =
            [65_536, 65_536, 32_768, 32_768, 32_768, 16_384, 16_384, 16_384, 16_384];
        let cores = KERNEL.iter().zip(NEURON).map(|(&k, n)| CoreCapacity::class(k, n)).collect();
        Self { cores, total_synaptic_words: 272 * 1024, total_neurons: 327_600, strict_stride: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProfileError {
    #[error("profile declares no cores")]
    NoCores,
    #[error("per-core kernel capacities sum to {sum} words, above the {total} word synaptic total")]
    SynapticOvercommit { sum: u64, total: u64 },
    #[error("per-core neuron capacities sum to {sum}, above the {total} neuron budget")]
    NeuronOvercommit { sum: u64, total: u64 },
}

impl ChipProfile {
    pub fn n_cores(&self) -> usize {
        self.cores.len()
    }

    pub fn core(&self, id: u8) -> Option<&CoreCapacity> {
        self.cores.get(usize::from(id))
    }

    /// Checks that the per-core capacities fit the chip totals.
    pub fn check(&self) -> Result<(), ProfileError> {
        if self.cores.is_empty() {
            return Err(ProfileError::NoCores);
        }
        let kernel: u64 = self.cores.iter().map(|c| c.kernel_words).sum();
        if kernel > self.total_synaptic_words {
            return Err(ProfileError::SynapticOvercommit { sum: kernel, total: self.total_synaptic_words });
        }
        let neurons: u64 = self.cores.iter().map(|c| c.neuron_words).sum();
        if neurons > self.total_neurons {
            return Err(ProfileError::NeuronOvercommit { sum: neurons, total: self.total_neurons });
        }
        Ok(())
    }
}
