//! Shared fixtures for the benchmarks. Everything is seeded, so numbers are
//! comparable across runs.

use camsep_core::poisson::Field2D;
use camsep_core::synth::{make_scenario_preset, make_texture, render_frames};
use camsep_core::tensor::merge_masks;
use camsep_core::{AttentionStack, Mask2D, ValueTensor};

/// Textured `n x n` field with a centered disc of radius `n / 4` to fill.
pub fn field_with_hole(n: usize) -> (Field2D, Mask2D) {
    let tex = make_texture(7, n, n, 1, 8).expect("texture");
    let field = Field2D::from_vec(n, n, tex.data().iter().map(|&v| v as f64).collect()).expect("field");
    let c = n as f64 / 2.0;
    let r2 = (n as f64 / 4.0).powi(2);
    let mask = Mask2D::from_fn(n, n, |x, y| (x as f64 + 0.5 - c).powi(2) + (y as f64 + 0.5 - c).powi(2) <= r2);
    (field, mask)
}

/// `clusters` Gaussian-ish blobs of `per_cluster` points in `dim` dimensions,
/// row-major.
pub fn blobs(clusters: usize, per_cluster: usize, dim: usize) -> Vec<f64> {
    // small LCG keeps this crate free of an rng dependency
    let mut state = 0x9e37_79b9_7f4a_7c15_u64;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut out = Vec::with_capacity(clusters * per_cluster * dim);
    for c in 0..clusters {
        for _ in 0..per_cluster {
            for d in 0..dim {
                let center = if d % clusters == c { 10.0 } else { 0.0 };
                out.push(center + next());
            }
        }
    }
    out
}

/// The `pan_with_object` scene: polluted frames, attention and object mask.
pub fn pan_scene(seed: u64) -> (ValueTensor, AttentionStack, Mask2D) {
    let scenario = make_scenario_preset("pan_with_object", seed).expect("preset");
    let (frames, masks) = render_frames(&scenario).expect("render");
    let attn = camsep_core::synth::attention_from_frames(&frames).expect("attention");
    (frames, attn, merge_masks(&masks).expect("mask"))
}
