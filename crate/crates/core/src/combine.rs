//! Camera-motion algebra: weighted mixing, per-region assignment, and
//! applying an attention map to values (optionally keeping the target's
//! values inside a mask).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::validate::renormalize_rows_slice;
use crate::tensor::{AttentionStack, Mask2D, ValueTensor};

/// What to do about row sums after a weighted combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenormPolicy {
    /// Weights must sum to 1 (within 1e-6); the raw sum is returned.
    #[default]
    Strict,
    /// Any weights; every output row is divided by its sum.
    RenormalizeRows,
    /// Any weights; the raw sum is returned.
    None,
}

#[derive(Debug, Clone)]
pub struct WeightedMotionSet {
    pub members: Vec<(AttentionStack, f64)>,
    pub policy: RenormPolicy,
}

/// How [`region_compose`] treats pixels claimed by several masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    /// Each pixel must belong to exactly one mask.
    #[default]
    RequirePartition,
    /// Masked matrices are summed and rows renormalized.
    SumThenRenormalize,
}

#[derive(Debug, Clone)]
pub struct RegionAssignment {
    pub members: Vec<(Mask2D, AttentionStack)>,
    pub policy: OverlapPolicy,
}

/// Signed difference of two attention stacks. Rows sum to about zero; this
/// is a diagnostic, not an attention map.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStack {
    pub height: usize,
    pub width: usize,
    pub frames: usize,
    pub data: Vec<f32>,
}

impl ResidualStack {
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let n = self.frames * self.frames;
        let start = (y * self.width + x) * n;
        &self.data[start..start + n]
    }

    /// Sum of squared entries over the pixels selected by `keep`.
    pub fn energy(&self, mut keep: impl FnMut(usize, usize) -> bool) -> f64 {
        let mut e = 0.0;
        for y in 0..self.height {
            for x in 0..self.width {
                if keep(x, y) {
                    e += self.pixel(x, y).iter().map(|&v| (v as f64).powi(2)).sum::<f64>();
                }
            }
        }
        e
    }
}

const STRICT_WEIGHT_TOLERANCE: f64 = 1e-6;

/// `sum_i w_i * A_i`, elementwise.
pub fn weighted_combine(set: &WeightedMotionSet) -> Result<AttentionStack> {
    let (first, _) = set
        .members
        .first()
        .ok_or_else(|| Error::Argument("weighted combination needs at least one member".into()))?;
    for (i, (stack, w)) in set.members.iter().enumerate() {
        stack.check_same_shape(first, &format!("member {i} vs member 0"))?;
        if !w.is_finite() {
            return Err(Error::Argument(format!("weight {i} is not finite")));
        }
    }
    if set.policy == RenormPolicy::Strict {
        let total: f64 = set.members.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > STRICT_WEIGHT_TOLERANCE {
            return Err(Error::Argument(format!(
                "strict policy needs weights summing to 1, got {total}"
            )));
        }
    }
    let mut acc = vec![0.0f64; first.data().len()];
    for (stack, w) in &set.members {
        for (a, &v) in acc.iter_mut().zip(stack.data()) {
            *a += w * v as f64;
        }
    }
    let mut out = AttentionStack::from_vec(
        first.height(),
        first.width(),
        first.frames(),
        acc.into_iter().map(|v| v as f32).collect(),
    )?;
    if set.policy == RenormPolicy::RenormalizeRows {
        let t = out.frames();
        let zero_rows = renormalize_rows_slice(out.data_mut(), t);
        if zero_rows > 0 {
            log::warn!("{zero_rows} combined rows summed to zero and were made uniform");
        }
    }
    Ok(out)
}

/// Assigns each region the camera motion of its stack.
pub fn region_compose(assignment: &RegionAssignment) -> Result<AttentionStack> {
    let (_, first) = assignment
        .members
        .first()
        .ok_or_else(|| Error::Argument("region composition needs at least one member".into()))?;
    for (i, (mask, stack)) in assignment.members.iter().enumerate() {
        stack.check_same_shape(first, &format!("member {i} vs member 0"))?;
        stack.check_mask(mask)?;
    }
    let (w, h, t) = (first.width(), first.height(), first.frames());
    let mut out = AttentionStack::uniform(h, w, t)?;
    let mut uncovered = 0usize;
    for y in 0..h {
        for x in 0..w {
            let owners: Vec<usize> = assignment
                .members
                .iter()
                .enumerate()
                .filter(|(_, (m, _))| m.get(x, y))
                .map(|(i, _)| i)
                .collect();
            match assignment.policy {
                OverlapPolicy::RequirePartition => match owners.as_slice() {
                    [only] => out
                        .pixel_mut(x, y)
                        .copy_from_slice(assignment.members[*only].1.pixel(x, y)),
                    [] => {
                        return Err(Error::Partition {
                            x,
                            y,
                            reason: "no mask covers it".into(),
                        })
                    }
                    many => {
                        return Err(Error::Partition {
                            x,
                            y,
                            reason: format!("covered by masks {many:?}"),
                        })
                    }
                },
                OverlapPolicy::SumThenRenormalize => match owners.as_slice() {
                    [only] => out
                        .pixel_mut(x, y)
                        .copy_from_slice(assignment.members[*only].1.pixel(x, y)),
                    [] => uncovered += 1,
                    many => {
                        let mut acc = vec![0.0f64; t * t];
                        for &i in many {
                            for (a, &v) in acc.iter_mut().zip(assignment.members[i].1.pixel(x, y)) {
                                *a += v as f64;
                            }
                        }
                        let px = out.pixel_mut(x, y);
                        for (d, a) in px.iter_mut().zip(acc) {
                            *d = a as f32;
                        }
                        renormalize_rows_slice(px, t);
                    }
                },
            }
        }
    }
    if uncovered > 0 {
        log::warn!("{uncovered} pixels lie in no region and were given uniform attention");
    }
    Ok(out)
}

fn check_values(attn: &AttentionStack, values: &ValueTensor) -> Result<()> {
    if attn.height() != values.height() || attn.width() != values.width() || attn.frames() != values.frames() {
        return Err(Error::Dimension(format!(
            "attention {:?} does not match values {:?}",
            attn.dims(),
            values.dims()
        )));
    }
    Ok(())
}

/// `f_out = A V` at every pixel (`t x t` times `t x c`).
pub fn apply_attention(attn: &AttentionStack, values: &ValueTensor) -> Result<ValueTensor> {
    check_values(attn, values)?;
    let (t, c) = (values.frames(), values.channels());
    let mut out = ValueTensor::zeros(values.height(), values.width(), t, c);
    for y in 0..values.height() {
        for x in 0..values.width() {
            let a = attn.pixel(x, y);
            let v = values.pixel(x, y);
            let dst = out.pixel_mut(x, y);
            for i in 0..t {
                for ch in 0..c {
                    let mut s = 0.0f64;
                    for j in 0..t {
                        s += a[i * t + j] as f64 * v[j * c + ch] as f64;
                    }
                    dst[i * c + ch] = s as f32;
                }
            }
        }
    }
    Ok(out)
}

/// `V' = V_target` inside `mask`, `V_other` outside.
pub fn blend_values(v_target: &ValueTensor, v_other: &ValueTensor, mask: &Mask2D) -> Result<ValueTensor> {
    v_target.check_same_shape(v_other, "target vs other values")?;
    if mask.width() != v_target.width() || mask.height() != v_target.height() {
        return Err(Error::Dimension(format!(
            "mask is {}x{}, values are {}x{}",
            mask.height(),
            mask.width(),
            v_target.height(),
            v_target.width()
        )));
    }
    let mut out = v_other.clone();
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                out.pixel_mut(x, y).copy_from_slice(v_target.pixel(x, y));
            }
        }
    }
    Ok(out)
}

/// Transfers `attn_source`'s motion while the region under `mask` keeps the
/// target's own values.
pub fn content_preserving_transfer(
    attn_source: &AttentionStack,
    v_target: &ValueTensor,
    v_other: &ValueTensor,
    mask: &Mask2D,
) -> Result<ValueTensor> {
    let blended = blend_values(v_target, v_other, mask)?;
    apply_attention(attn_source, &blended)
}

/// `attn - attn_camera`: what the object contributed.
pub fn object_residual(attn: &AttentionStack, attn_camera: &AttentionStack) -> Result<ResidualStack> {
    attn.check_same_shape(attn_camera, "attention vs camera attention")?;
    Ok(ResidualStack {
        height: attn.height(),
        width: attn.width(),
        frames: attn.frames(),
        data: attn
            .data()
            .iter()
            .zip(attn_camera.data())
            .map(|(&a, &b)| (a as f64 - b as f64) as f32)
            .collect(),
    })
}
