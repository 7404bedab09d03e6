//! Kernel, neuron and bias memories with per-word kill bits.

use super::address::{AddressError, KernelDims, NeuronDims};
use super::neuron::{integrate, NeuronParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelMemory {
    dims: KernelDims,
    weights: Vec<i8>,
    kill: Vec<bool>,
}

impl KernelMemory {
    pub fn zeros(dims: KernelDims) -> Self {
        Self { dims, weights: vec![0; dims.len()], kill: vec![false; dims.len()] }
    }

    /// Wraps row-major words laid out by [`KernelDims::compress`].
    pub fn from_words(dims: KernelDims, weights: Vec<i8>) -> Option<Self> {
        (weights.len() == dims.len()).then(|| Self { dims, kill: vec![false; weights.len()], weights })
    }

    pub fn dims(&self) -> KernelDims {
        self.dims
    }

    pub fn words(&self) -> &[i8] {
        &self.weights
    }

    pub fn set(&mut self, c: u32, f: u32, xk: u32, yk: u32, w: i8) -> Result<(), AddressError> {
        let k = self.dims.compress(c, f, xk, yk)?;
        self.weights[k] = w;
        Ok(())
    }

    pub fn kill(&mut self, word: usize) {
        self.kill[word] = true;
    }

    pub fn is_killed(&self, word: usize) -> bool {
        self.kill[word]
    }

    /// Reads one weight. Zero words and killed words yield nothing.
    pub fn lookup_weight(&self, c: u32, f: u32, xk: u32, yk: u32) -> Result<Option<i8>, AddressError> {
        let k = self.dims.compress(c, f, xk, yk)?;
        Ok(self.read(k))
    }

    #[inline]
    pub(crate) fn read(&self, k: usize) -> Option<i8> {
        let w = self.weights[k];
        (w != 0 && !self.kill[k]).then_some(w)
    }

    #[inline]
    pub(crate) fn raw(&self, k: usize) -> i8 {
        self.weights[k]
    }
}

/// What a neuron word did with an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    Quiet,
    Spiked,
    /// The word is killed; the update was dropped.
    Killed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeuronMemory {
    dims: NeuronDims,
    v: Vec<i16>,
    kill: Vec<bool>,
}

impl NeuronMemory {
    pub fn zeros(dims: NeuronDims) -> Self {
        let n = dims.len() as usize;
        Self { dims, v: vec![0; n], kill: vec![false; n] }
    }

    pub fn from_words(dims: NeuronDims, v: Vec<i16>) -> Option<Self> {
        (v.len() == dims.len() as usize).then(|| Self { dims, kill: vec![false; v.len()], v })
    }

    pub fn dims(&self) -> NeuronDims {
        self.dims
    }

    pub fn state(&self) -> &[i16] {
        &self.v
    }

    pub fn get(&self, n: u32) -> Option<i16> {
        self.v.get(n as usize).copied()
    }

    pub fn set(&mut self, n: u32, value: i16) -> Result<(), AddressError> {
        let slot = self.v.get_mut(n as usize).ok_or(AddressError::Compressed(n))?;
        *slot = value;
        Ok(())
    }

    pub fn kill(&mut self, n: u32) {
        self.kill[n as usize] = true;
    }

    pub fn is_killed(&self, n: u32) -> bool {
        self.kill[n as usize]
    }

    /// Clamps every live word into `[lower_bound, 32767]`.
    pub(crate) fn clamp_lower(&mut self, lower_bound: i16) {
        for (v, &k) in self.v.iter_mut().zip(&self.kill) {
            if !k {
                *v = (*v).max(lower_bound);
            }
        }
    }

    /// Read-add-check-write on one word.
    pub fn neuron_update(&mut self, n: u32, w: i16, params: &NeuronParams) -> Result<UpdateOutcome, AddressError> {
        let i = n as usize;
        if i >= self.v.len() {
            return Err(AddressError::Compressed(n));
        }
        if self.kill[i] {
            return Ok(UpdateOutcome::Killed);
        }
        let (next, spiked) = integrate(self.v[i], w, params);
        self.v[i] = next;
        Ok(if spiked { UpdateOutcome::Spiked } else { UpdateOutcome::Quiet })
    }
}

/// One signed 16-bit bias per output feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiasMemory {
    b: Vec<i16>,
    kill: Vec<bool>,
}

impl BiasMemory {
    pub fn new(b: Vec<i16>) -> Self {
        Self { kill: vec![false; b.len()], b }
    }

    pub fn zeros(features: u32) -> Self {
        Self::new(vec![0; features as usize])
    }

    pub fn words(&self) -> &[i16] {
        &self.b
    }

    pub fn set(&mut self, f: u32, b: i16) {
        self.b[f as usize] = b;
    }

    pub fn kill(&mut self, f: u32) {
        self.kill[f as usize] = true;
    }

    pub fn is_killed(&self, f: u32) -> bool {
        self.kill[f as usize]
    }

    /// The bias of a feature, unless it is zero or killed.
    pub fn read(&self, f: u32) -> Option<i16> {
        let i = f as usize;
        (self.b[i] != 0 && !self.kill[i]).then_some(self.b[i])
    }
}
