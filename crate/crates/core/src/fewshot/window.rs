use crate::error::{Error, Result};
use crate::tensor::AttentionStack;

/// Window side for an attention map of side `size`: `ceil(size / 16) * 2 + 1`.
pub fn window_size(size: usize) -> usize {
    size.div_ceil(16) * 2 + 1
}

/// Where a gathered point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub video: usize,
    /// Offset from the window center.
    pub dx: isize,
    pub dy: isize,
}

/// Flattened per-pixel attention matrices gathered from a window across
/// several videos: `len()` rows of `dim()` values each.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelPointSet {
    dim: usize,
    data: Vec<f64>,
    provenance: Vec<Provenance>,
}

impl PixelPointSet {
    pub fn new(dim: usize, data: Vec<f64>, provenance: Vec<Provenance>) -> Result<Self> {
        if dim == 0 || data.len() != dim * provenance.len() {
            return Err(Error::Dimension(format!(
                "{} values do not form {} points of dimension {dim}",
                data.len(),
                provenance.len()
            )));
        }
        Ok(Self {
            dim,
            data,
            provenance,
        })
    }

    /// Points with synthetic provenance (video = index, zero offset).
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        let n = data.len().checked_div(dim).unwrap_or(0);
        let provenance = (0..n)
            .map(|video| Provenance {
                video,
                dx: 0,
                dy: 0,
            })
            .collect();
        Self::new(dim, data, provenance)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    /// The same points sorted lexicographically by value, so downstream
    /// results do not depend on the order videos were supplied in.
    pub fn canonical(&self) -> PixelPointSet {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.point(a)
                .iter()
                .zip(self.point(b))
                .map(|(u, v)| u.total_cmp(v))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut data = Vec::with_capacity(self.data.len());
        for &i in &order {
            data.extend_from_slice(self.point(i));
        }
        PixelPointSet {
            dim: self.dim,
            data,
            provenance: order.iter().map(|&i| self.provenance[i]).collect(),
        }
    }
}

pub(crate) fn check_stacks(stacks: &[AttentionStack]) -> Result<()> {
    let first = stacks
        .first()
        .ok_or_else(|| Error::Argument("no attention stacks given".into()))?;
    for (i, s) in stacks.iter().enumerate().skip(1) {
        if s.frames() != first.frames() {
            return Err(Error::Argument(format!(
                "stack {i} has t={}, stack 0 has t={}; frame counts must match",
                s.frames(),
                first.frames()
            )));
        }
        s.check_same_shape(first, &format!("stack {i} vs stack 0"))?;
    }
    Ok(())
}

/// Collects the attention of every pixel in the `k x k` window centered on
/// `(x, y)`, from every stack. The window is clipped at the canvas edge.
pub fn gather_window_points(
    stacks: &[AttentionStack],
    x: usize,
    y: usize,
    k: usize,
) -> Result<PixelPointSet> {
    check_stacks(stacks)?;
    if k.is_multiple_of(2) {
        return Err(Error::Argument(format!("window size must be odd, got {k}")));
    }
    let first = &stacks[0];
    if x >= first.width() || y >= first.height() {
        return Err(Error::Argument(format!(
            "pixel ({x}, {y}) outside {}x{} canvas",
            first.width(),
            first.height()
        )));
    }
    let r = (k / 2) as isize;
    let dim = first.channels();
    let mut data = Vec::new();
    let mut provenance = Vec::new();
    for (video, stack) in stacks.iter().enumerate() {
        for dy in -r..=r {
            for dx in -r..=r {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= stack.width() as isize || ny >= stack.height() as isize {
                    continue;
                }
                data.extend(stack.pixel(nx as usize, ny as usize).iter().map(|&v| v as f64));
                provenance.push(Provenance { video, dx, dy });
            }
        }
    }
    PixelPointSet::new(dim, data, provenance)
}
