//! Grayscale PNG export of attention slices, for eyeballing only.

use std::path::Path;

use camsep_core::AttentionStack;
use image::{GrayImage, Luma};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HeatmapInfo {
    pub width: u32,
    pub height: u32,
    /// Value mapped to black.
    pub min: f32,
    /// Value mapped to white.
    pub max: f32,
}

/// The `t x t` matrix of one pixel (rows = query frame).
pub fn pixel_matrix(attn: &AttentionStack, x: usize, y: usize) -> (usize, usize, Vec<f32>) {
    let t = attn.frames();
    (t, t, attn.pixel(x, y).to_vec())
}

/// Entry `(i, j)` across the whole canvas.
pub fn entry_slice(attn: &AttentionStack, i: usize, j: usize) -> (usize, usize, Vec<f32>) {
    let mut out = Vec::with_capacity(attn.width() * attn.height());
    for y in 0..attn.height() {
        for x in 0..attn.width() {
            out.push(attn.get(x, y, i, j));
        }
    }
    (attn.width(), attn.height(), out)
}

/// Min-max normalizes `values` to 0..=255 and writes them row-major.
pub fn write_png(path: &Path, width: usize, height: usize, values: &[f32]) -> Result<HeatmapInfo, CliError> {
    let min = values.iter().copied().fold(f32::INFINITY, f32::min);
    let max = values.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let span = max - min;
    let img = GrayImage::from_fn(width as u32, height as u32, |x, y| {
        let v = values[y as usize * width + x as usize];
        let level = if span > 0.0 { (v - min) / span * 255.0 } else { 0.0 };
        Luma([level.round().clamp(0.0, 255.0) as u8])
    });
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(HeatmapInfo {
        width: width as u32,
        height: height as u32,
        min,
        max,
    })
}
