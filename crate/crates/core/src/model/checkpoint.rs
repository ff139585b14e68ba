//! Binary checkpoint format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   4 bytes  "CVC1"
//! version u32      1
//! hlen    u32      header byte length
//! header  hlen     UTF-8 JSON: { spec, class_names, dtype }
//! count   u32      tensor count
//! tensor  repeated:
//!   nlen  u16      name byte length
//!   name  nlen     UTF-8 parameter name
//!   rank  u8
//!   dims  rank*u32
//!   data  prod(dims) * 4 bytes of raw little-endian f32
//! ```
//!
//! No serialization dependency is needed to read it back from any language.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::labels::CLASS_NAMES;
use super::spec::ModelSpec;
use super::{Model, NamedTensor};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"CVC1";
pub const CHECKPOINT_VERSION: u32 = 1;

/// JSON header stored after the magic/version words.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub spec: ModelSpec,
    pub class_names: Vec<String>,
    pub dtype: String,
}

/// Writes a model to `path` in the format above.
pub fn save(model: &Model, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;

    let header = CheckpointHeader {
        spec: model.spec().clone(),
        class_names: CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
        dtype: "float32".into(),
    };
    let header_bytes =
        serde_json::to_vec(&header).map_err(|e| Error::BadHeader(e.to_string()))?;
    w.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    w.write_all(&header_bytes)?;

    w.write_all(&(model.parameters().len() as u32).to_le_bytes())?;
    for p in model.parameters() {
        let name = p.name.as_bytes();
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&[p.tensor.rank() as u8])?;
        for &d in p.tensor.shape() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in p.tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes(&mut self, n: usize, what: &str) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::Truncated(format!("while reading {what}")))?;
        Ok(buf)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.bytes(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.bytes(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.bytes(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Reads a checkpoint back into a model. Corrupt files surface as the
/// matching typed error; the parameter set must exactly cover the spec's
/// parameter list.
pub fn load(path: &Path) -> Result<Model> {
    let mut r = Cursor {
        inner: BufReader::new(File::open(path)?),
    };

    let magic = r.bytes(4, "magic")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }

    let hlen = r.u32("header length")? as usize;
    let header_bytes = r.bytes(hlen, "header")?;
    let header: CheckpointHeader =
        serde_json::from_slice(&header_bytes).map_err(|e| Error::BadHeader(e.to_string()))?;
    if header.dtype != "float32" {
        return Err(Error::BadHeader(format!(
            "unsupported dtype `{}`",
            header.dtype
        )));
    }
    if header.class_names != CLASS_NAMES {
        return Err(Error::BadHeader(
            "class name list does not match the canonical labels".into(),
        ));
    }
    header.spec.validate()?;
    let expected = header.spec.parameter_shapes()?;

    let count = r.u32("tensor count")? as usize;
    let mut slots: Vec<Option<Tensor<f32>>> = vec![None; expected.len()];
    for _ in 0..count {
        let nlen = r.u16("tensor name length")? as usize;
        let name = String::from_utf8(r.bytes(nlen, "tensor name")?)
            .map_err(|_| Error::BadHeader("tensor name is not UTF-8".into()))?;
        let slot = expected
            .iter()
            .position(|(n, _)| *n == name)
            .ok_or_else(|| Error::UnknownTensorName(name.clone()))?;
        let rank = r.u8("tensor rank")? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.u32("tensor dims")? as usize);
        }
        if dims != expected[slot].1 {
            return Err(Error::TensorShapeMismatch {
                name,
                found: dims,
                expected: expected[slot].1.clone(),
            });
        }
        let numel: usize = dims.iter().product();
        let raw = r.bytes(numel * 4, &format!("data of `{name}`"))?;
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if slots[slot].is_some() {
            return Err(Error::BadHeader(format!(
                "tensor `{name}` appears more than once"
            )));
        }
        slots[slot] = Some(Tensor::new(dims, data)?);
    }

    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing)? != 0 {
        return Err(Error::BadHeader("trailing bytes after last tensor".into()));
    }

    let params: Vec<NamedTensor> = expected
        .into_iter()
        .zip(slots)
        .map(|((name, _), tensor)| {
            tensor
                .map(|tensor| NamedTensor {
                    name: name.clone(),
                    tensor,
                })
                .ok_or(Error::MissingTensor(name))
        })
        .collect::<Result<_>>()?;

    Model::from_parts(header.spec, params)
}
