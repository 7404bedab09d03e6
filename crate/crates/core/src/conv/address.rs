//! Gap-free packing of neuron `(f, x, y)` and kernel `(c, f, xk, yk)` indices.

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum AddressError {
    #[error("neuron index (f={f}, x={x}, y={y}) outside {features}x{width}x{height}")]
    Neuron { f: u32, x: u32, y: u32, features: u32, width: u32, height: u32 },
    #[error("compressed neuron address {0} outside the configured space")]
    Compressed(u32),
    #[error("kernel index (c={c}, f={f}, xk={xk}, yk={yk}) outside the kernel memory")]
    Kernel { c: u32, f: u32, xk: u32, yk: u32 },
}

/// Shape of a core's neuron space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NeuronDims {
    pub features: u32,
    pub width: u32,
    pub height: u32,
}

impl NeuronDims {
    pub const fn new(features: u32, width: u32, height: u32) -> Self {
        Self { features, width, height }
    }

    pub const fn len(&self) -> u32 {
        self.features * self.width * self.height
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn plane(&self) -> u32 {
        self.width * self.height
    }
}

/// `n = (f * height + y) * width + x`.
pub fn compress_neuron_address(f: u32, x: u32, y: u32, dims: NeuronDims) -> Result<u32, AddressError> {
    if f >= dims.features || x >= dims.width || y >= dims.height {
        return Err(AddressError::Neuron { f, x, y, features: dims.features, width: dims.width, height: dims.height });
    }
    Ok((f * dims.height + y) * dims.width + x)
}

/// Inverse of [`compress_neuron_address`], returning `(f, x, y)`.
pub fn decompress_neuron_address(n: u32, dims: NeuronDims) -> Result<(u32, u32, u32), AddressError> {
    if n >= dims.len() {
        return Err(AddressError::Compressed(n));
    }
    let x = n % dims.width;
    let rest = n / dims.width;
    Ok((rest / dims.height, x, rest % dims.height))
}

/// Shape of a core's kernel memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KernelDims {
    pub channels: u32,
    pub features: u32,
    pub height: u32,
    pub width: u32,
}

impl KernelDims {
    pub const fn len(&self) -> usize {
        self.channels as usize * self.features as usize * self.height as usize * self.width as usize
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `k = ((c * features + f) * height + yk) * width + xk`.
    pub fn compress(&self, c: u32, f: u32, xk: u32, yk: u32) -> Result<usize, AddressError> {
        if c >= self.channels || f >= self.features || xk >= self.width || yk >= self.height {
            return Err(AddressError::Kernel { c, f, xk, yk });
        }
        Ok((((c * self.features + f) * self.height + yk) * self.width + xk) as usize)
    }
}
