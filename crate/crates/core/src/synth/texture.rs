use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A smooth multi-channel field `[H, W, c]` with values in `[0, 1]`.
///
/// Sampling is bilinear with mirror padding, so the field can be read at
/// any real-valued position.
#[derive(Debug, Clone, PartialEq)]
pub struct Texture {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Texture {
    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::Argument("texture dims must be >= 1".into()));
        }
        if data.len() != width * height * channels {
            return Err(Error::Dimension(format!(
                "texture data has {} values, expected {}",
                data.len(),
                width * height * channels
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn texel(&self, x: usize, y: usize) -> &[f32] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// Left-right mirror image of the texture.
    pub fn mirrored_x(&self) -> Texture {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            for x in (0..self.width).rev() {
                data.extend_from_slice(self.texel(x, y));
            }
        }
        Texture { data, ..*self }
    }

    /// Bilinear sample at `(u, v)`, reflecting coordinates that fall off
    /// the texture.
    pub fn sample(&self, u: f64, v: f64, out: &mut [f32]) {
        let u = reflect(u, self.width);
        let v = reflect(v, self.height);
        let x0 = (u.floor() as usize).min(self.width - 1);
        let y0 = (v.floor() as usize).min(self.height - 1);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = u - x0 as f64;
        let fy = v - y0 as f64;
        let (a, b, c, d) = (
            self.texel(x0, y0),
            self.texel(x1, y0),
            self.texel(x0, y1),
            self.texel(x1, y1),
        );
        for ch in 0..self.channels {
            let top = a[ch] as f64 * (1.0 - fx) + b[ch] as f64 * fx;
            let bottom = c[ch] as f64 * (1.0 - fx) + d[ch] as f64 * fx;
            out[ch] = (top * (1.0 - fy) + bottom * fy) as f32;
        }
    }
}

/// Folds `u` into `[0, n - 1]` by mirroring about the end texels.
fn reflect(u: f64, n: usize) -> f64 {
    if n == 1 {
        return 0.0;
    }
    let last = (n - 1) as f64;
    let period = 2.0 * last;
    let u = u.rem_euclid(period);
    if u > last {
        period - u
    } else {
        u
    }
}

/// Seeded smooth texture: a coarse random grid with one node every
/// `cell_size` pixels, bilinearly interpolated to full resolution. Each
/// channel gets its own independent grid.
pub fn make_texture(
    seed: u64,
    width: usize,
    height: usize,
    channels: usize,
    cell_size: usize,
) -> Result<Texture> {
    if cell_size < 2 {
        return Err(Error::Argument(format!("cell size must be >= 2, got {cell_size}")));
    }
    if width == 0 || height == 0 || channels == 0 {
        return Err(Error::Argument("texture dims must be >= 1".into()));
    }
    let nx = (width - 1) / cell_size + 2;
    let ny = (height - 1) / cell_size + 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grids: Vec<Vec<f64>> = (0..channels)
        .map(|_| (0..nx * ny).map(|_| rng.random::<f64>()).collect())
        .collect();

    let mut data = Vec::with_capacity(width * height * channels);
    let cell = cell_size as f64;
    for y in 0..height {
        let gy = y as f64 / cell;
        let j0 = gy.floor() as usize;
        let fy = gy - j0 as f64;
        for x in 0..width {
            let gx = x as f64 / cell;
            let i0 = gx.floor() as usize;
            let fx = gx - i0 as f64;
            for grid in &grids {
                let at = |i: usize, j: usize| grid[j * nx + i];
                let top = at(i0, j0) * (1.0 - fx) + at(i0 + 1, j0) * fx;
                let bottom = at(i0, j0 + 1) * (1.0 - fx) + at(i0 + 1, j0 + 1) * fx;
                data.push((top * (1.0 - fy) + bottom * fy) as f32);
            }
        }
    }
    Texture::from_vec(width, height, channels, data)
}
