#![allow(dead_code)]

use camsep_core::fewshot::window_size;
use camsep_core::synth::{attention_from_frames, render_frames, CameraMotion, ObjectMotion, Scenario};
use camsep_core::tensor::merge_masks;
use camsep_core::{AttentionStack, Mask2D, ValueTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rows drawn uniformly and normalized; no spatial structure.
pub fn random_stack(rng: &mut ChaCha8Rng, h: usize, w: usize, t: usize) -> AttentionStack {
    let mut data = Vec::with_capacity(h * w * t * t);
    for _ in 0..h * w * t {
        let row: Vec<f64> = (0..t).map(|_| rng.random::<f64>() + 1e-3).collect();
        let s: f64 = row.iter().sum();
        data.extend(row.iter().map(|v| (v / s) as f32));
    }
    AttentionStack::from_vec(h, w, t, data).unwrap()
}

pub fn random_values(rng: &mut ChaCha8Rng, h: usize, w: usize, t: usize, c: usize) -> ValueTensor {
    let data = (0..h * w * t * c).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    ValueTensor::from_vec(h, w, t, c, data).unwrap()
}

/// Union of random discs until roughly `target` of the canvas is covered.
pub fn random_disc_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, target: f64) -> Mask2D {
    let mut mask = Mask2D::zeros(h, w);
    let limit = (target * (w * h) as f64) as usize;
    while mask.count() < limit.max(1) {
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        let r = rng.random_range(1.0..(w.min(h) as f64 / 5.0).max(1.5));
        let mut next = mask.clone();
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                if dx * dx + dy * dy <= r * r {
                    next.set(x, y, true);
                }
            }
        }
        if next.count() > limit && mask.count() > 0 {
            break;
        }
        mask = next;
    }
    mask
}

/// `mask` moved by `(dx, dy)`; pixels leaving the canvas are dropped.
pub fn shift_mask(mask: &Mask2D, dx: isize, dy: isize) -> Mask2D {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    Mask2D::from_fn(mask.height(), mask.width(), |x, y| {
        let (sx, sy) = (x as isize - dx, y as isize - dy);
        sx >= 0 && sy >= 0 && sx < w && sy < h && mask.get(sx as usize, sy as usize)
    })
}

/// Whether any pixel of the `k x k` window around `(x, y)` is set.
pub fn window_touches(mask: &Mask2D, x: usize, y: usize, k: usize) -> bool {
    let r = k / 2;
    let (w, h) = (mask.width(), mask.height());
    (y.saturating_sub(r)..=(y + r).min(h - 1))
        .any(|yy| (x.saturating_sub(r)..=(x + r).min(w - 1)).any(|xx| mask.get(xx, yy)))
}

pub fn row_l1_at(a: &AttentionStack, b: &AttentionStack, x: usize, y: usize) -> f64 {
    let t = a.frames();
    a.pixel(x, y)
        .iter()
        .zip(b.pixel(x, y))
        .map(|(&u, &v)| (u as f64 - v as f64).abs())
        .sum::<f64>()
        / t as f64
}

/// Five videos that share one pan and one background; each carries its own
/// moving blob and a little independent feature noise.
pub struct FewShotInstance {
    pub clean: AttentionStack,
    pub stacks: Vec<AttentionStack>,
    pub masks: Vec<Mask2D>,
}

pub const FEW_SHOT_SIZE: usize = 16;
pub const FEW_SHOT_VIDEOS: usize = 5;
pub const FEW_SHOT_NOISE: f32 = 0.01;

pub fn few_shot_instance(seed: u64) -> FewShotInstance {
    let n = FEW_SHOT_SIZE;
    let base = Scenario {
        width: n,
        height: n,
        frames: 16,
        channels: 16,
        texture_seed: seed,
        texture_cell: 64,
        camera: CameraMotion::Pan { vx: 1.0, vy: 0.0 },
        objects: Vec::new(),
    };
    let (frames, _) = render_frames(&base).unwrap();
    let clean = attention_from_frames(&frames).unwrap();

    let mut rng = rng(seed + 100);
    let mut stacks = Vec::new();
    let mut masks = Vec::new();
    for v in 0..FEW_SHOT_VIDEOS as u64 {
        let radius = rng.random_range(2.0..2.8);
        let (sx, sy) = (rng.random_range(3.0..13.0), rng.random_range(3.0..13.0));
        let (vx, vy) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let object = ObjectMotion {
            trajectory: (0..16).map(|i| (sx + vx * i as f64, sy + vy * i as f64)).collect(),
            radius,
            texture_seed: seed * 10 + v,
        };
        let scenario = Scenario {
            objects: vec![object],
            ..base.clone()
        };
        let (frames, object_masks) = render_frames(&scenario).unwrap();
        let mut noise = ChaCha8Rng::seed_from_u64(seed * 1000 + v);
        let amplitude = FEW_SHOT_NOISE * 12f32.sqrt();
        let [h, w, t, c] = frames.dims();
        let noisy = frames
            .data()
            .iter()
            .map(|x| x + amplitude * (noise.random::<f32>() - 0.5))
            .collect();
        let frames = ValueTensor::from_vec(h, w, t, c, noisy).unwrap();
        stacks.push(attention_from_frames(&frames).unwrap());
        masks.push(merge_masks(&object_masks).unwrap());
    }
    FewShotInstance { clean, stacks, masks }
}

impl FewShotInstance {
    /// Pixels where at most `limit` of the videos have an object inside the
    /// window.
    pub fn lightly_polluted(&self, limit: usize) -> Vec<(usize, usize)> {
        let n = self.clean.width();
        let k = window_size(n);
        let mut out = Vec::new();
        for y in 0..self.clean.height() {
            for x in 0..n {
                let hits = self.masks.iter().filter(|m| window_touches(m, x, y, k)).count();
                if hits <= limit {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn max_coverage(&self) -> f64 {
        let area = (self.clean.width() * self.clean.height()) as f64;
        self.masks.iter().map(|m| m.count() as f64 / area).fold(0.0, f64::max)
    }
}
