use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{AttentionStack, ValueTensor};

/// Temporal self-attention of one pixel: `softmax(F F^T / sqrt(c))` with
/// `F` the `t x c` feature block, written row-major into `out` (`t * t`).
pub fn pixel_attention(features: &[f32], frames: usize, channels: usize, out: &mut [f32]) {
    let scale = 1.0 / (channels as f64).sqrt();
    let mut logits = vec![0.0f64; frames];
    for i in 0..frames {
        let qi = &features[i * channels..(i + 1) * channels];
        for (j, logit) in logits.iter_mut().enumerate() {
            let kj = &features[j * channels..(j + 1) * channels];
            let dot: f64 = qi.iter().zip(kj).map(|(&a, &b)| a as f64 * b as f64).sum();
            *logit = dot * scale;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for l in logits.iter_mut() {
            *l = (*l - max).exp();
            total += *l;
        }
        for (o, l) in out[i * frames..(i + 1) * frames].iter_mut().zip(&logits) {
            *o = (l / total) as f32;
        }
    }
}

/// Per-pixel temporal attention of a rendered clip.
pub fn attention_from_frames(frames: &ValueTensor) -> Result<AttentionStack> {
    let (t, c) = (frames.frames(), frames.channels());
    if t < 2 || c < 1 {
        return Err(Error::Argument(format!(
            "attention needs t >= 2 and c >= 1, got t={t}, c={c}"
        )));
    }
    if frames.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("frames contain non-finite values".into()));
    }
    let mut data = vec![0.0f32; frames.height() * frames.width() * t * t];
    data.par_chunks_mut(t * t)
        .zip(frames.data().par_chunks(t * c))
        .for_each(|(out, feat)| pixel_attention(feat, t, c, out));
    AttentionStack::from_vec(frames.height(), frames.width(), t, data)
}
