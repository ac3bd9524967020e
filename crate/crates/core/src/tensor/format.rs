//! MTN1 binary tensor files and their optional JSON sidecars.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "MTN1" | version: u8 = 1 | dtype: u8 | ndim: u8 | dims: ndim x u64 | payload
//! ```
//!
//! `dtype` 1 is `f32`, 2 is `u8` (masks only). The payload is row-major.
//! Attention is `[H, W, t, t]`, values `[H, W, t, c]`, a mask `[H, W]` and a
//! mask stack `[t, H, W]`. A sidecar at `<path>.json` may carry a `kind` that
//! disambiguates 4-d float tensors.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::validate::{validate_attention, NEGATIVE_TOLERANCE, ROW_SUM_TOLERANCE};
use super::{AttentionStack, Mask2D, MaskStack, ValueTensor};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MTN1";
pub const VERSION: u8 = 1;
pub const DTYPE_F32: u8 = 1;
pub const DTYPE_U8: u8 = 2;

/// Rows off by more than this are rejected on read; rows between
/// [`ROW_SUM_TOLERANCE`] and this are renormalized with a warning.
pub const SOFT_ROW_SUM_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorKind {
    Attention,
    Mask,
    MaskStack,
    Values,
}

/// Optional metadata stored next to a tensor file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<TensorKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<serde_json::Value>,
}

/// Any tensor the format can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    Attention(AttentionStack),
    Mask(Mask2D),
    MaskStack(MaskStack),
    Values(ValueTensor),
}

impl Tensor {
    pub fn kind(&self) -> TensorKind {
        match self {
            Tensor::Attention(_) => TensorKind::Attention,
            Tensor::Mask(_) => TensorKind::Mask,
            Tensor::MaskStack(_) => TensorKind::MaskStack,
            Tensor::Values(_) => TensorKind::Values,
        }
    }

    pub fn into_attention(self) -> Result<AttentionStack> {
        match self {
            Tensor::Attention(a) => Ok(a),
            other => Err(Error::Format(format!(
                "expected attention, found {:?}",
                other.kind()
            ))),
        }
    }

    pub fn into_mask(self) -> Result<Mask2D> {
        match self {
            Tensor::Mask(m) => Ok(m),
            other => Err(Error::Format(format!(
                "expected mask, found {:?}",
                other.kind()
            ))),
        }
    }

    pub fn into_mask_stack(self) -> Result<MaskStack> {
        match self {
            Tensor::MaskStack(m) => Ok(m),
            other => Err(Error::Format(format!(
                "expected mask stack, found {:?}",
                other.kind()
            ))),
        }
    }

    pub fn into_values(self) -> Result<ValueTensor> {
        match self {
            Tensor::Values(v) => Ok(v),
            other => Err(Error::Format(format!(
                "expected values, found {:?}",
                other.kind()
            ))),
        }
    }

    /// Serializes to MTN1 bytes.
    pub fn encode(&self) -> Vec<u8> {
        match self {
            Tensor::Attention(a) => encode_f32(&a.dims(), a.data()),
            Tensor::Values(v) => encode_f32(&v.dims(), v.data()),
            Tensor::Mask(m) => encode_u8(&[m.height(), m.width()], m.data()),
            Tensor::MaskStack(s) => {
                let (h, w) = s
                    .masks()
                    .first()
                    .map_or((0, 0), |m| (m.height(), m.width()));
                let payload: Vec<u8> = s.masks().iter().flat_map(|m| m.data().iter().copied()).collect();
                encode_u8(&[s.frames(), h, w], &payload)
            }
        }
    }

    /// Parses MTN1 bytes. `kind` overrides shape-based inference. Returns the
    /// tensor and the number of attention rows that were renormalized.
    pub fn decode(bytes: &[u8], kind: Option<TensorKind>) -> Result<(Tensor, usize)> {
        let header = Header::parse(bytes)?;
        let payload = &bytes[header.payload_offset..];
        let kind = match kind {
            Some(k) => k,
            None => header.infer_kind()?,
        };
        let d = &header.dims;
        match (kind, header.dtype) {
            (TensorKind::Attention, DTYPE_F32) => {
                if d.len() != 4 || d[2] != d[3] {
                    return Err(Error::Format(format!("attention needs dims [H, W, t, t], got {d:?}")));
                }
                let stack = AttentionStack::from_vec(d[0], d[1], d[2], decode_f32(payload))?;
                let (stack, fixed) = soft_validate(stack)?;
                Ok((Tensor::Attention(stack), fixed))
            }
            (TensorKind::Values, DTYPE_F32) => {
                if d.len() != 4 {
                    return Err(Error::Format(format!("values need dims [H, W, t, c], got {d:?}")));
                }
                let v = ValueTensor::from_vec(d[0], d[1], d[2], d[3], decode_f32(payload))?;
                Ok((Tensor::Values(v), 0))
            }
            (TensorKind::Mask, DTYPE_U8) => {
                if d.len() != 2 {
                    return Err(Error::Format(format!("mask needs dims [H, W], got {d:?}")));
                }
                Ok((Tensor::Mask(Mask2D::from_vec(d[0], d[1], payload.to_vec())?), 0))
            }
            (TensorKind::MaskStack, DTYPE_U8) => {
                if d.len() != 3 {
                    return Err(Error::Format(format!("mask stack needs dims [t, H, W], got {d:?}")));
                }
                let plane = d[1] * d[2];
                let masks = (0..d[0])
                    .map(|i| Mask2D::from_vec(d[1], d[2], payload[i * plane..(i + 1) * plane].to_vec()))
                    .collect::<Result<Vec<_>>>()?;
                Ok((Tensor::MaskStack(MaskStack::new(masks)?), 0))
            }
            (kind, dtype) => Err(Error::Format(format!(
                "kind {kind:?} cannot be stored with dtype {dtype}"
            ))),
        }
    }
}

impl From<AttentionStack> for Tensor {
    fn from(v: AttentionStack) -> Self {
        Tensor::Attention(v)
    }
}

impl From<Mask2D> for Tensor {
    fn from(v: Mask2D) -> Self {
        Tensor::Mask(v)
    }
}

impl From<MaskStack> for Tensor {
    fn from(v: MaskStack) -> Self {
        Tensor::MaskStack(v)
    }
}

impl From<ValueTensor> for Tensor {
    fn from(v: ValueTensor) -> Self {
        Tensor::Values(v)
    }
}

struct Header {
    dtype: u8,
    dims: Vec<usize>,
    payload_offset: usize,
}

impl Header {
    fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 7 || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing MTN1 magic".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::Format(format!("unsupported version {}", bytes[4])));
        }
        let dtype = bytes[5];
        let elem = match dtype {
            DTYPE_F32 => 4,
            DTYPE_U8 => 1,
            other => return Err(Error::Format(format!("unknown dtype {other}"))),
        };
        let ndim = bytes[6] as usize;
        let payload_offset = 7 + 8 * ndim;
        if bytes.len() < payload_offset {
            return Err(Error::Corrupt("truncated header".into()));
        }
        let mut dims = Vec::with_capacity(ndim);
        let mut count: usize = 1;
        for chunk in bytes[7..payload_offset].chunks_exact(8) {
            let d = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            let d = usize::try_from(d).map_err(|_| Error::Corrupt(format!("dimension {d} too large")))?;
            count = count
                .checked_mul(d)
                .ok_or_else(|| Error::Corrupt("dimension product overflows".into()))?;
            dims.push(d);
        }
        let expected = count
            .checked_mul(elem)
            .ok_or_else(|| Error::Corrupt("payload size overflows".into()))?;
        let actual = bytes.len() - payload_offset;
        if actual != expected {
            return Err(Error::Corrupt(format!(
                "payload has {actual} bytes, dims {dims:?} need {expected}"
            )));
        }
        Ok(Self {
            dtype,
            dims,
            payload_offset,
        })
    }

    fn infer_kind(&self) -> Result<TensorKind> {
        match (self.dtype, self.dims.len()) {
            (DTYPE_U8, 2) => Ok(TensorKind::Mask),
            (DTYPE_U8, 3) => Ok(TensorKind::MaskStack),
            (DTYPE_F32, 4) if self.dims[2] == self.dims[3] => Ok(TensorKind::Attention),
            (DTYPE_F32, 4) => Ok(TensorKind::Values),
            (dtype, ndim) => Err(Error::Format(format!(
                "cannot infer tensor kind for dtype {dtype} with {ndim} dims"
            ))),
        }
    }
}

fn header_bytes(dtype: u8, dims: &[usize], payload_len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(7 + 8 * dims.len() + payload_len);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(dtype);
    out.push(u8::try_from(dims.len()).expect("at most 255 dims"));
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out
}

fn encode_f32(dims: &[usize], data: &[f32]) -> Vec<u8> {
    let mut out = header_bytes(DTYPE_F32, dims, data.len() * 4);
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn encode_u8(dims: &[usize], data: &[u8]) -> Vec<u8> {
    let mut out = header_bytes(DTYPE_U8, dims, data.len());
    out.extend_from_slice(data);
    out
}

fn decode_f32(payload: &[u8]) -> Vec<f32> {
    payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect()
}

/// Rejects rows that are far from stochastic and quietly repairs rows that
/// only drifted.
fn soft_validate(mut stack: AttentionStack) -> Result<(AttentionStack, usize)> {
    let report = validate_attention(&stack);
    if report.violating_rows == 0 {
        return Ok((stack, 0));
    }
    if report.non_finite > 0 {
        return Err(Error::Validation(format!(
            "attention has {} non-finite entries",
            report.non_finite
        )));
    }
    if report.max_row_sum_error > SOFT_ROW_SUM_TOLERANCE {
        return Err(Error::Validation(format!(
            "attention row sum off by {:.3e} (limit {SOFT_ROW_SUM_TOLERANCE:e})",
            report.max_row_sum_error
        )));
    }
    if report.min_value < -SOFT_ROW_SUM_TOLERANCE {
        return Err(Error::Validation(format!(
            "attention entry {:.3e} is negative",
            report.min_value
        )));
    }
    let t = stack.frames();
    let mut fixed = 0;
    for row in stack.data_mut().chunks_exact_mut(t) {
        let sum: f64 = row.iter().map(|&v| v as f64).sum();
        let negative = row.iter().any(|&v| (v as f64) < NEGATIVE_TOLERANCE);
        if (sum - 1.0).abs() <= ROW_SUM_TOLERANCE && !negative {
            continue;
        }
        for v in row.iter_mut() {
            *v = v.max(0.0);
        }
        let sum: f64 = row.iter().map(|&v| v as f64).sum();
        for v in row.iter_mut() {
            *v = (*v as f64 / sum) as f32;
        }
        fixed += 1;
    }
    log::warn!("renormalized {fixed} attention rows that drifted from stochasticity");
    Ok((stack, fixed))
}

/// `<path>.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn read_sidecar(path: &Path) -> Result<Option<Sidecar>> {
    let side = sidecar_path(path);
    match fs::read(&side) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|source| Error::Sidecar { path: side, source }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(side, e)),
    }
}

pub fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<()> {
    let side = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(sidecar)
        .map_err(|source| Error::Sidecar { path: side.clone(), source })?;
    text.push('\n');
    fs::write(&side, text).map_err(|e| Error::io(side, e))
}

/// Reads a tensor, using the sidecar `kind` when one exists.
pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    read_tensor_with_report(path).map(|(t, _)| t)
}

/// Like [`read_tensor`], also returning how many attention rows were
/// renormalized on load.
pub fn read_tensor_with_report(path: impl AsRef<Path>) -> Result<(Tensor, usize)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let kind = read_sidecar(path)?.and_then(|s| s.kind);
    Tensor::decode(&bytes, kind)
}

/// Writes a tensor as MTN1. The bytes depend only on the tensor.
pub fn write_tensor(tensor: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, tensor.encode()).map_err(|e| Error::io(path, e))
}
