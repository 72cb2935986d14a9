//! Binary checkpoint container.
//!
//! Byte layout, all integers little-endian:
//!
//! ```text
//! magic     8 bytes  "ASTNATCK"
//! version   u32
//! header    u32 length, then UTF-8 `key=value` lines
//! tensors   u32 count, then per tensor:
//!             u16 name length, name bytes,
//!             u64 rows, u64 cols,
//!             rows·cols f64 values in row-major order
//! ```
//!
//! The header carries `vocab_hash`, `max_len`, `vocab` and every
//! [`TrainConfig`] field.

use std::collections::BTreeMap;
use std::path::Path;

use crate::tree::Vocabulary;

use super::params::{ModelDims, ModelParams, TENSOR_NAMES};
use super::tensor::Tensor;
use super::train::TrainConfig;
use super::ModelError;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ASTNATCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub params: ModelParams,
    pub vocab_hash: String,
    pub config: TrainConfig,
    pub max_len: usize,
    pub version: u32,
}

impl ModelCheckpoint {
    pub fn new(params: ModelParams, vocab_hash: String, config: TrainConfig, max_len: usize) -> Self {
        ModelCheckpoint { params, vocab_hash, config, max_len, version: CHECKPOINT_VERSION }
    }

    pub fn dims(&self) -> ModelDims {
        self.params.dims
    }

    pub fn check_vocab(&self, vocab: &Vocabulary) -> Result<(), ModelError> {
        let found = vocab.hash();
        if found != self.vocab_hash {
            return Err(ModelError::VocabMismatch { expected: self.vocab_hash.clone(), found });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut header = String::new();
        header.push_str(&format!("vocab_hash={}\n", self.vocab_hash));
        header.push_str(&format!("max_len={}\n", self.max_len));
        header.push_str(&format!("vocab={}\n", self.params.dims.vocab));
        for (k, v) in self.config.to_pairs() {
            header.push_str(&format!("{k}={v}\n"));
        }
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        let tensors = self.params.tensors();
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, t) in tensors {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.rows as u64).to_le_bytes());
            out.extend_from_slice(&(t.cols as u64).to_le_bytes());
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(&format!("unsupported format version {version}")));
        }
        let hlen = r.u32()? as usize;
        let header = std::str::from_utf8(r.take(hlen)?).map_err(|_| bad("header is not UTF-8"))?;
        let mut fields = BTreeMap::new();
        for line in header.lines().filter(|l| !l.is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| bad(&format!("bad header line `{line}`")))?;
            fields.insert(k.to_string(), v.to_string());
        }
        let mut field = |k: &str| fields.remove(k).ok_or_else(|| bad(&format!("missing header field `{k}`")));
        let vocab_hash = field("vocab_hash")?;
        let max_len = field("max_len")?.parse().map_err(|_| bad("bad max_len"))?;
        let vocab: usize = field("vocab")?.parse().map_err(|_| bad("bad vocab size"))?;
        let mut config = TrainConfig::default();
        for (k, v) in &fields {
            if !config.set(k, v)? {
                return Err(bad(&format!("unknown header field `{k}`")));
            }
        }
        let mut params = ModelParams::zeros(config.dims(vocab));
        let count = r.u32()? as usize;
        if count != TENSOR_NAMES.len() {
            return Err(bad(&format!("expected {} tensors, found {count}", TENSOR_NAMES.len())));
        }
        let mut loaded: BTreeMap<String, Tensor> = BTreeMap::new();
        for _ in 0..count {
            let nlen = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(nlen)?).map_err(|_| bad("tensor name is not UTF-8"))?.to_string();
            let rows = r.u64()? as usize;
            let cols = r.u64()? as usize;
            let n = rows.checked_mul(cols).ok_or_else(|| bad("tensor too large"))?;
            let raw = r.take(n.checked_mul(8).ok_or_else(|| bad("tensor too large"))?)?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            loaded.insert(name, Tensor { rows, cols, data });
        }
        if r.pos != bytes.len() {
            return Err(bad("trailing bytes after tensors"));
        }
        for (name, slot) in params.tensors_mut() {
            let t = loaded.remove(name).ok_or_else(|| bad(&format!("missing tensor `{name}`")))?;
            if (t.rows, t.cols) != (slot.rows, slot.cols) {
                return Err(ModelError::DimensionMismatch(format!(
                    "tensor `{name}` is {}x{}, expected {}x{}",
                    t.rows, t.cols, slot.rows, slot.cols
                )));
            }
            *slot = t;
        }
        if !params.is_finite() {
            return Err(bad("non-finite parameter values"));
        }
        Ok(ModelCheckpoint { params, vocab_hash, config, max_len, version })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn bad(msg: &str) -> ModelError {
    ModelError::Checkpoint(msg.to_string())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| bad("truncated file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, ModelError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
