//! Sidecar memory images.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                                        |
//! |--------|------|----------------------------------------------|
//! | 0      | 4    | magic `SPKW`                                 |
//! | 4      | 2    | version (1)                                  |
//! | 6      | 1    | kind: 0 kernel (i8), 1 bias (i16), 2 neuron (i16) |
//! | 7      | 1    | reserved, 0                                  |
//! | 8      | 16   | four u32 dims                                |
//! | 24     | ...  | words, row-major in compressed-address order |
//!
//! Kernel dims are `(channels, features, height, width)`, bias dims
//! `(features, 1, 1, 1)` and neuron dims `(features, height, width, 1)`.

use std::io::{self, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

pub const BLOB_MAGIC: [u8; 4] = *b"SPKW";
pub const BLOB_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlobKind {
    Kernel = 0,
    Bias = 1,
    Neuron = 2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlobWords {
    I8(Vec<i8>),
    I16(Vec<i16>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blob {
    pub kind: BlobKind,
    pub dims: [u32; 4],
    pub words: BlobWords,
}

#[derive(Debug, thiserror::Error)]
pub enum BlobError {
    #[error("bad magic {0:?}, expected SPKW")]
    Magic([u8; 4]),
    #[error("unsupported blob version {0}")]
    Version(u16),
    #[error("unknown blob kind {0}")]
    Kind(u8),
    #[error("word type does not match blob kind {0:?}")]
    WordType(BlobKind),
    #[error("dims {dims:?} describe {expected} words, blob holds {actual}")]
    Length { dims: [u32; 4], expected: u64, actual: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Blob {
    pub fn kernel(dims: [u32; 4], words: Vec<i8>) -> Self {
        Self { kind: BlobKind::Kernel, dims, words: BlobWords::I8(words) }
    }

    pub fn bias(words: Vec<i16>) -> Self {
        Self { kind: BlobKind::Bias, dims: [words.len() as u32, 1, 1, 1], words: BlobWords::I16(words) }
    }

    pub fn neuron(dims: [u32; 4], words: Vec<i16>) -> Self {
        Self { kind: BlobKind::Neuron, dims, words: BlobWords::I16(words) }
    }

    fn word_count(dims: &[u32; 4]) -> u64 {
        dims.iter().map(|&d| u64::from(d)).product()
    }

    pub fn len(&self) -> usize {
        match &self.words {
            BlobWords::I8(w) => w.len(),
            BlobWords::I16(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), BlobError> {
        let expected = Self::word_count(&self.dims);
        if expected != self.len() as u64 {
            return Err(BlobError::Length { dims: self.dims, expected, actual: self.len() as u64 });
        }
        match (&self.kind, &self.words) {
            (BlobKind::Kernel, BlobWords::I8(_)) | (BlobKind::Bias | BlobKind::Neuron, BlobWords::I16(_)) => {}
            (kind, _) => return Err(BlobError::WordType(*kind)),
        }
        w.write_all(&BLOB_MAGIC)?;
        w.write_u16::<LittleEndian>(BLOB_VERSION)?;
        w.write_u8(self.kind as u8)?;
        w.write_u8(0)?;
        for d in self.dims {
            w.write_u32::<LittleEndian>(d)?;
        }
        match &self.words {
            BlobWords::I8(words) => {
                for &x in words {
                    w.write_i8(x)?;
                }
            }
            BlobWords::I16(words) => {
                for &x in words {
                    w.write_i16::<LittleEndian>(x)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, BlobError> {
        let mut magic = [0; 4];
        r.read_exact(&mut magic)?;
        if magic != BLOB_MAGIC {
            return Err(BlobError::Magic(magic));
        }
        let version = r.read_u16::<LittleEndian>()?;
        if version != BLOB_VERSION {
            return Err(BlobError::Version(version));
        }
        let kind = match r.read_u8()? {
            0 => BlobKind::Kernel,
            1 => BlobKind::Bias,
            2 => BlobKind::Neuron,
            k => return Err(BlobError::Kind(k)),
        };
        r.read_u8()?;
        let mut dims = [0; 4];
        for d in &mut dims {
            *d = r.read_u32::<LittleEndian>()?;
        }
        let n = Self::word_count(&dims);
        let words = match kind {
            BlobKind::Kernel => {
                let mut bytes = Vec::new();
                r.take(n).read_to_end(&mut bytes)?;
                if bytes.len() as u64 != n {
                    return Err(BlobError::Length { dims, expected: n, actual: bytes.len() as u64 });
                }
                BlobWords::I8(bytes.into_iter().map(|b| b as i8).collect())
            }
            BlobKind::Bias | BlobKind::Neuron => {
                let mut bytes = Vec::new();
                r.take(2 * n).read_to_end(&mut bytes)?;
                if bytes.len() as u64 != 2 * n {
                    return Err(BlobError::Length { dims, expected: n, actual: bytes.len() as u64 / 2 });
                }
                BlobWords::I16(bytes.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect())
            }
        };
        Ok(Self { kind, dims, words })
    }
}
