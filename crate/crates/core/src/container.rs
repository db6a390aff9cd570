//! WMAD binary tensor container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "WMAD" | version u16 | meta_len u32 | meta JSON bytes
//! | block_count u32
//! | per block: name_len u16 | name | rank u8 | dims u32[rank]
//!              | dtype u8 (0 = f32, 1 = u8) | payload
//! | sha256 of all preceding bytes (32 bytes)
//! ```
//!
//! Episode files, checkpoints, and rollout dumps all share this format.

use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"WMAD";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("bad magic: not a WMAD container")]
    BadMagic,
    #[error("unsupported format version {0}")]
    BadVersion(u16),
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error("integrity error: payload digest mismatch")]
    DigestMismatch,
    #[error("malformed metadata: {0}")]
    MalformedMeta(#[from] serde_json::Error),
    #[error("malformed block `{name}`: {reason}")]
    MalformedBlock { name: String, reason: String },
    #[error("missing block `{0}`")]
    MissingBlock(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockData {
    F32(Vec<f32>),
    U8(Vec<u8>),
}

impl BlockData {
    pub fn len(&self) -> usize {
        match self {
            BlockData::F32(v) => v.len(),
            BlockData::U8(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match self {
            BlockData::F32(v) => Some(v),
            BlockData::U8(_) => None,
        }
    }

    pub fn as_u8(&self) -> Option<&[u8]> {
        match self {
            BlockData::U8(v) => Some(v),
            BlockData::F32(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorBlock {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: BlockData,
}

impl TensorBlock {
    pub fn f32(name: impl Into<String>, dims: Vec<usize>, data: Vec<f32>) -> Self {
        let b = TensorBlock {
            name: name.into(),
            dims,
            data: BlockData::F32(data),
        };
        debug_assert_eq!(b.dims.iter().product::<usize>(), b.data.len());
        b
    }

    pub fn u8(name: impl Into<String>, dims: Vec<usize>, data: Vec<u8>) -> Self {
        let b = TensorBlock {
            name: name.into(),
            dims,
            data: BlockData::U8(data),
        };
        debug_assert_eq!(b.dims.iter().product::<usize>(), b.data.len());
        b
    }
}

/// An in-memory WMAD container: JSON metadata plus named tensor blocks in a
/// fixed order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Container {
    pub meta: serde_json::Value,
    pub blocks: Vec<TensorBlock>,
}

impl Container {
    pub fn new(meta: serde_json::Value) -> Self {
        Container {
            meta,
            blocks: Vec::new(),
        }
    }

    pub fn block(&self, name: &str) -> Result<&TensorBlock, ContainerError> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| ContainerError::MissingBlock(name.to_string()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        // serde_json's default map is ordered, so this is byte-deterministic
        let meta = serde_json::to_vec(&self.meta).expect("meta serializes");
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for b in &self.blocks {
            let name = b.name.as_bytes();
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name);
            out.push(b.dims.len() as u8);
            for &d in &b.dims {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            match &b.data {
                BlockData::F32(v) => {
                    out.push(0);
                    for x in v {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                }
                BlockData::U8(v) => {
                    out.push(1);
                    out.extend_from_slice(v);
                }
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ContainerError> {
        if bytes.len() < 4 + 2 + 4 + 4 + 32 {
            return Err(ContainerError::Truncated("header".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(ContainerError::DigestMismatch);
        }
        let mut cur = Cursor { buf: body, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(ContainerError::BadMagic);
        }
        let version = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(ContainerError::BadVersion(version));
        }
        let meta_len = u32::from_le_bytes(cur.take(4)?.try_into().unwrap()) as usize;
        let meta: serde_json::Value = serde_json::from_slice(cur.take(meta_len)?)?;
        let count = u32::from_le_bytes(cur.take(4)?.try_into().unwrap()) as usize;
        let mut blocks = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = u16::from_le_bytes(cur.take(2)?.try_into().unwrap()) as usize;
            let name = String::from_utf8(cur.take(name_len)?.to_vec()).map_err(|_| {
                ContainerError::MalformedBlock {
                    name: "<invalid utf8>".into(),
                    reason: "name is not UTF-8".into(),
                }
            })?;
            let rank = cur.take(1)?[0] as usize;
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(u32::from_le_bytes(cur.take(4)?.try_into().unwrap()) as usize);
            }
            let numel: usize = dims.iter().product();
            let dtype = cur.take(1)?[0];
            let data = match dtype {
                0 => {
                    let raw = cur.take(numel * 4)?;
                    BlockData::F32(
                        raw.chunks_exact(4)
                            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                            .collect(),
                    )
                }
                1 => BlockData::U8(cur.take(numel)?.to_vec()),
                d => {
                    return Err(ContainerError::MalformedBlock {
                        name,
                        reason: format!("unknown dtype {d}"),
                    })
                }
            };
            blocks.push(TensorBlock { name, dims, data });
        }
        Ok(Container { meta, blocks })
    }

    pub fn write_to(&self, path: &Path) -> Result<(), ContainerError> {
        let bytes = self.to_bytes();
        let mut f = fs::File::create(path).map_err(|e| ContainerError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        f.write_all(&bytes).map_err(|e| ContainerError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self, ContainerError> {
        let bytes = fs::read(path).map_err(|e| ContainerError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_bytes(&bytes)
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ContainerError> {
        if self.pos + n > self.buf.len() {
            return Err(ContainerError::Truncated(format!(
                "wanted {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
}
