//! Tensor, mask and value data model.
//!
//! All tensors are dense, row-major and stored as `f32` (masks as `u8`),
//! which is also their on-disk representation in the MTN1 format.

mod format;
pub(crate) mod mask;
pub(crate) mod validate;

pub use format::{
    read_sidecar, read_tensor, read_tensor_with_report, sidecar_path, write_sidecar, write_tensor,
    Sidecar, Tensor, TensorKind, DTYPE_F32, DTYPE_U8, MAGIC, VERSION,
};
pub use mask::{mask_boundary, merge_masks};
pub use validate::{renormalize_rows, validate_attention, ValidationReport};

use crate::error::{Error, Result};

/// Per-pixel temporal attention: an `H x W` grid of `t x t` row-stochastic
/// matrices, laid out as `[H, W, t, t]`.
///
/// `get(x, y, i, j)` is the weight query frame `i` puts on key frame `j` at
/// pixel `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionStack {
    height: usize,
    width: usize,
    frames: usize,
    data: Vec<f32>,
}

impl AttentionStack {
    /// Builds a stack from raw data without checking stochasticity; use
    /// [`validate_attention`] for that.
    pub fn from_vec(height: usize, width: usize, frames: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || frames == 0 {
            return Err(Error::Argument(format!(
                "attention dims must be >= 1, got {height}x{width}, t={frames}"
            )));
        }
        let expected = height * width * frames * frames;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "attention data has {} values, expected {expected}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            frames,
            data,
        })
    }

    /// Every row uniform `1/t`: the attention of a static scene.
    pub fn uniform(height: usize, width: usize, frames: usize) -> Result<Self> {
        let v = 1.0 / frames as f32;
        Self::from_vec(
            height,
            width,
            frames,
            vec![v; height * width * frames * frames],
        )
    }

    /// Identity matrix at every pixel.
    pub fn identity(height: usize, width: usize, frames: usize) -> Result<Self> {
        let mut data = vec![0.0; height * width * frames * frames];
        for block in data.chunks_exact_mut(frames * frames) {
            for i in 0..frames {
                block[i * frames + i] = 1.0;
            }
        }
        Self::from_vec(height, width, frames, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Number of scalar entries per pixel (`t * t`).
    pub fn channels(&self) -> usize {
        self.frames * self.frames
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    /// The flattened `t x t` matrix at pixel `(x, y)`.
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let n = self.channels();
        let start = (y * self.width + x) * n;
        &self.data[start..start + n]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let n = self.channels();
        let start = (y * self.width + x) * n;
        &mut self.data[start..start + n]
    }

    pub fn get(&self, x: usize, y: usize, i: usize, j: usize) -> f32 {
        self.pixel(x, y)[i * self.frames + j]
    }

    pub fn dims(&self) -> [usize; 4] {
        [self.height, self.width, self.frames, self.frames]
    }

    /// Errors unless `other` has the same `H`, `W` and `t`.
    pub fn check_same_shape(&self, other: &AttentionStack, what: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Dimension(format!(
                "{what}: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }

    /// Errors unless `mask` covers the same canvas.
    pub fn check_mask(&self, mask: &Mask2D) -> Result<()> {
        if mask.height() != self.height || mask.width() != self.width {
            return Err(Error::Dimension(format!(
                "mask is {}x{}, attention is {}x{}",
                mask.height(),
                mask.width(),
                self.height,
                self.width
            )));
        }
        Ok(())
    }
}

/// Binary foreground mask over an `H x W` canvas, `1` = moving object.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask2D {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl Mask2D {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0; height * width],
        }
    }

    pub fn ones(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![1; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Dimension(format!(
                "mask data has {} values, expected {}",
                data.len(),
                height * width
            )));
        }
        if let Some(bad) = data.iter().find(|&&v| v > 1) {
            return Err(Error::Validation(format!("mask value {bad} is not 0 or 1")));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Mask of the pixels for which `pred(x, y)` holds.
    pub fn from_fn(height: usize, width: usize, mut pred: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(pred(x, y) as u8);
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.data[y * self.width + x] = on as u8;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn is_full(&self) -> bool {
        self.data.iter().all(|&v| v != 0)
    }

    /// Pixelwise complement.
    pub fn invert(&self) -> Mask2D {
        Mask2D {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| 1 - v).collect(),
        }
    }
}

/// One mask per frame, all sharing a canvas. Stored on disk as `[t, H, W]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskStack {
    masks: Vec<Mask2D>,
}

impl MaskStack {
    pub fn new(masks: Vec<Mask2D>) -> Result<Self> {
        if let Some(first) = masks.first() {
            for (i, m) in masks.iter().enumerate() {
                if m.height() != first.height() || m.width() != first.width() {
                    return Err(Error::Dimension(format!(
                        "mask {i} is {}x{}, mask 0 is {}x{}",
                        m.height(),
                        m.width(),
                        first.height(),
                        first.width()
                    )));
                }
            }
        }
        Ok(Self { masks })
    }

    pub fn frames(&self) -> usize {
        self.masks.len()
    }

    pub fn masks(&self) -> &[Mask2D] {
        &self.masks
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }
}

/// Per-pixel, per-frame feature vectors laid out as `[H, W, t, c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTensor {
    height: usize,
    width: usize,
    frames: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ValueTensor {
    pub fn from_vec(
        height: usize,
        width: usize,
        frames: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        let expected = height * width * frames * channels;
        if data.len() != expected {
            return Err(Error::Dimension(format!(
                "value data has {} entries, expected {expected}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("value tensor has non-finite entries".into()));
        }
        Ok(Self {
            height,
            width,
            frames,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, frames: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            frames,
            channels,
            data: vec![0.0; height * width * frames * channels],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> [usize; 4] {
        [self.height, self.width, self.frames, self.channels]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// The `t x c` feature block of pixel `(x, y)`.
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let n = self.frames * self.channels;
        let start = (y * self.width + x) * n;
        &self.data[start..start + n]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let n = self.frames * self.channels;
        let start = (y * self.width + x) * n;
        &mut self.data[start..start + n]
    }

    pub fn get(&self, x: usize, y: usize, frame: usize, channel: usize) -> f32 {
        self.pixel(x, y)[frame * self.channels + channel]
    }

    pub fn check_same_shape(&self, other: &ValueTensor, what: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Dimension(format!(
                "{what}: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(())
    }
}
