//! Distances between attention maps.

use serde::Serialize;

use crate::error::Result;
use crate::tensor::{validate_attention, AttentionStack, Mask2D};

/// Floor applied to entries before taking logs in the KL term.
pub const KL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapDistanceReport {
    /// Mean of `|a - b|` over all compared entries.
    pub mean_abs_diff: f64,
    /// `sqrt(sum (a - b)^2)` over all compared entries.
    pub frobenius: f64,
    /// Mean over rows of `sum_j |a_ij - b_ij|`.
    pub mean_row_l1: f64,
    /// Mean over rows of `KL(a_i || b_i)`, rows floored and renormalized.
    pub mean_row_kl: f64,
    /// Largest per-pixel Frobenius distance.
    pub max_pixel_frobenius: f64,
    pub pixels: usize,
    pub masked: bool,
}

fn floored_row(row: &[f32]) -> Vec<f64> {
    let v: Vec<f64> = row.iter().map(|&x| (x as f64).max(KL_FLOOR)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Compares two maps over every pixel, or only over the pixels set in
/// `mask`.
pub fn map_distance(a: &AttentionStack, b: &AttentionStack, mask: Option<&Mask2D>) -> Result<MapDistanceReport> {
    a.check_same_shape(b, "map distance operands")?;
    if let Some(m) = mask {
        a.check_mask(m)?;
    }
    let t = a.frames();
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    let mut row_l1 = 0.0;
    let mut row_kl = 0.0;
    let mut max_px = 0.0f64;
    let mut pixels = 0usize;
    for y in 0..a.height() {
        for x in 0..a.width() {
            if mask.is_some_and(|m| !m.get(x, y)) {
                continue;
            }
            pixels += 1;
            let (pa, pb) = (a.pixel(x, y), b.pixel(x, y));
            let mut px_sq = 0.0;
            for (ra, rb) in pa.chunks_exact(t).zip(pb.chunks_exact(t)) {
                let mut l1 = 0.0;
                for (&u, &v) in ra.iter().zip(rb) {
                    let d = u as f64 - v as f64;
                    l1 += d.abs();
                    px_sq += d * d;
                }
                abs_sum += l1;
                row_l1 += l1;
                let (fa, fb) = (floored_row(ra), floored_row(rb));
                row_kl += fa.iter().zip(&fb).map(|(p, q)| p * (p / q).ln()).sum::<f64>();
            }
            sq_sum += px_sq;
            max_px = max_px.max(px_sq.sqrt());
        }
    }
    let rows = (pixels * t).max(1) as f64;
    let entries = (pixels * t * t).max(1) as f64;
    Ok(MapDistanceReport {
        mean_abs_diff: abs_sum / entries,
        frobenius: sq_sum.sqrt(),
        mean_row_l1: row_l1 / rows,
        mean_row_kl: row_kl / rows,
        max_pixel_frobenius: max_px,
        pixels,
        masked: mask.is_some(),
    })
}

/// `(max |row sum - 1|, min entry)`.
pub fn stochasticity_error(a: &AttentionStack) -> (f64, f64) {
    let r = validate_attention(a);
    (r.max_row_sum_error, r.min_value)
}
