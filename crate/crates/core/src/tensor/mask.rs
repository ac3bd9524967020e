use super::{Mask2D, MaskStack};
use crate::error::{Error, Result};

/// Union of all per-frame masks (pixelwise OR).
pub fn merge_masks(masks: &MaskStack) -> Result<Mask2D> {
    let first = masks
        .masks()
        .first()
        .ok_or_else(|| Error::Argument("cannot merge an empty mask stack".into()))?;
    let mut data = first.data().to_vec();
    for m in &masks.masks()[1..] {
        for (acc, &v) in data.iter_mut().zip(m.data()) {
            *acc |= v;
        }
    }
    Mask2D::from_vec(first.height(), first.width(), data)
}

/// 4-neighbours of `(x, y)` that lie on an `width x height` canvas.
pub(crate) fn neighbors4(
    x: usize,
    y: usize,
    width: usize,
    height: usize,
) -> impl Iterator<Item = (usize, usize)> {
    let left = (x > 0).then(|| (x - 1, y));
    let right = (x + 1 < width).then(|| (x + 1, y));
    let up = (y > 0).then(|| (x, y - 1));
    let down = (y + 1 < height).then(|| (x, y + 1));
    [left, right, up, down].into_iter().flatten()
}

/// Background pixels 4-adjacent to at least one foreground pixel, as
/// `(x, y)` in row-major order.
pub fn mask_boundary(mask: &Mask2D) -> Vec<(usize, usize)> {
    let (w, h) = (mask.width(), mask.height());
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) && neighbors4(x, y, w, h).any(|(nx, ny)| mask.get(nx, ny)) {
                out.push((x, y));
            }
        }
    }
    out
}
