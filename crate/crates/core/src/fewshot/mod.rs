//! Few-shot camera-motion extraction.
//!
//! Given `m` videos that share a camera motion, the attention of each pixel
//! is estimated from the `m * k * k` matrices in a `k x k` window around it
//! (camera motion is locally coherent). Those matrices are embedded in the
//! plane with t-SNE, clustered with DBSCAN, and the mean of the largest
//! cluster, taken in the original `t * t` space, becomes the output. Object
//! motion shows up as outlying clusters or noise and drops out.

mod dbscan;
mod tsne;
mod window;

pub use dbscan::{dbscan, dbscan_nd, NOISE};
pub use tsne::{default_perplexity, tsne_embed, TsneOutput, TsneParams};
pub use window::{gather_window_points, window_size, PixelPointSet, Provenance};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::AttentionStack;
use window::check_stacks;

/// How gathered points are prepared for clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reducer {
    /// t-SNE to two dimensions.
    #[default]
    Tsne,
    /// Cluster the raw `t * t` vectors (ablation).
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    /// Window side `k`; defaults to [`window_size`] of the map width.
    pub window: Option<usize>,
    pub eps: f64,
    pub min_points: usize,
    /// Defaults to [`default_perplexity`] of the point count.
    pub perplexity: Option<f64>,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub reducer: Reducer,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            window: None,
            eps: 4.0,
            min_points: 3,
            perplexity: None,
            iterations: 1000,
            learning_rate: 50.0,
            seed: 0,
            reducer: Reducer::Tsne,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.window {
            if k == 0 || k % 2 == 0 {
                return Err(Error::Argument(format!("window must be odd and >= 1, got {k}")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::Argument(format!("eps must be > 0, got {}", self.eps)));
        }
        if self.min_points < 1 {
            return Err(Error::Argument("min_points must be >= 1".into()));
        }
        if let Some(p) = self.perplexity {
            if !(p >= 1.0) {
                return Err(Error::Argument(format!("perplexity must be >= 1, got {p}")));
            }
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Argument("learning rate must be > 0".into()));
        }
        Ok(())
    }

    fn tsne_params(&self, n: usize, seed: u64) -> TsneParams {
        TsneParams {
            perplexity: self.perplexity.unwrap_or_else(|| default_perplexity(n)),
            iterations: self.iterations,
            learning_rate: self.learning_rate,
            seed,
            ..TsneParams::default()
        }
    }
}

/// What happened while reducing one window to a single matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowOutcome {
    /// Mean of the selected points, in the original space.
    pub centroid: Vec<f64>,
    /// Cluster label per point of the canonical ordering.
    pub labels: Vec<i32>,
    pub clusters: usize,
    /// Points averaged into `centroid`.
    pub selected: usize,
    /// Every point was noise; `centroid` is the plain mean.
    pub fallback: bool,
    /// Two or more clusters shared the largest size.
    pub tie: bool,
    /// All points coincided, so t-SNE was skipped.
    pub degenerate: bool,
}

fn mean_of(points: &PixelPointSet, members: impl Iterator<Item = usize>) -> Vec<f64> {
    let mut acc = vec![0.0; points.dim()];
    let mut count = 0usize;
    for i in members {
        for (a, v) in acc.iter_mut().zip(points.point(i)) {
            *a += v;
        }
        count += 1;
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    acc
}

fn coordinate_median(points: &PixelPointSet) -> Vec<f64> {
    let n = points.len();
    (0..points.dim())
        .map(|d| {
            let mut col: Vec<f64> = (0..n).map(|i| points.point(i)[d]).collect();
            col.sort_by(f64::total_cmp);
            if n % 2 == 1 {
                col[n / 2]
            } else {
                (col[n / 2 - 1] + col[n / 2]) / 2.0
            }
        })
        .collect()
}

/// Reduces one window of points to its dominant motion.
///
/// Points are put into canonical order first, so the result depends only
/// on the multiset of points, not on which video contributed which.
pub fn window_common_motion(points: &PixelPointSet, cfg: &ClusterConfig, seed: u64) -> Result<WindowOutcome> {
    cfg.validate()?;
    if points.is_empty() {
        return Err(Error::Argument("window has no points".into()));
    }
    let points = points.canonical();
    let n = points.len();

    let (labels, degenerate) = match cfg.reducer {
        Reducer::Tsne if n >= 2 => {
            let out = tsne_embed(points.data(), points.dim(), &cfg.tsne_params(n, seed))?;
            (dbscan(&out.embedding, cfg.eps, cfg.min_points), out.degenerate)
        }
        _ => (dbscan_nd(points.data(), points.dim(), cfg.eps, cfg.min_points), false),
    };

    let clusters = labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize);
    if clusters == 0 {
        return Ok(WindowOutcome {
            centroid: mean_of(&points, 0..n),
            labels,
            clusters: 0,
            selected: n,
            fallback: true,
            tie: false,
            degenerate,
        });
    }

    let mut sizes = vec![0usize; clusters];
    for &l in labels.iter().filter(|&&l| l >= 0) {
        sizes[l as usize] += 1;
    }
    let largest = *sizes.iter().max().expect("at least one cluster");
    let candidates: Vec<usize> = (0..clusters).filter(|&c| sizes[c] == largest).collect();
    let members = |c: usize| {
        let labels = &labels;
        (0..n).filter(move |&i| labels[i] == c as i32)
    };
    let tie = candidates.len() > 1;
    let chosen = if tie {
        let median = coordinate_median(&points);
        let dist = |c: usize| {
            mean_of(&points, members(c))
                .iter()
                .zip(&median)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        *candidates
            .iter()
            .min_by(|&&a, &&b| dist(a).total_cmp(&dist(b)))
            .expect("non-empty candidates")
    } else {
        candidates[0]
    };

    Ok(WindowOutcome {
        centroid: mean_of(&points, members(chosen)),
        labels: labels.clone(),
        clusters,
        selected: largest,
        fallback: false,
        tie,
        degenerate,
    })
}

/// Summary of a full-map extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ExtractionReport {
    pub window: usize,
    pub pixels: usize,
    /// Pixels where every point was noise and the plain mean was used.
    pub fallback_pixels: usize,
    pub tie_pixels: usize,
    pub degenerate_pixels: usize,
}

/// Mixes the pixel coordinates into the global seed.
pub fn pixel_seed(seed: u64, x: usize, y: usize) -> u64 {
    let mut z = ((x as u64) << 32 | y as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    seed ^ z ^ (z >> 31)
}

/// Writes `centroid` into `out` as f32, renormalizing rows only if the mean
/// drifted from unit row sums by more than float noise.
fn store_matrix(centroid: &[f64], t: usize, out: &mut [f32]) {
    for (row, dst) in centroid.chunks_exact(t).zip(out.chunks_exact_mut(t)) {
        let sum: f64 = row.iter().sum();
        let scale = if (sum - 1.0).abs() > 1e-6 && sum > 0.0 { 1.0 / sum } else { 1.0 };
        for (d, &v) in dst.iter_mut().zip(row) {
            *d = (v * scale) as f32;
        }
    }
}

/// Estimates the camera motion shared by `stacks`, pixel by pixel.
pub fn extract_common_motion(
    stacks: &[AttentionStack],
    cfg: &ClusterConfig,
) -> Result<(AttentionStack, ExtractionReport)> {
    cfg.validate()?;
    if stacks.len() < 2 {
        return Err(Error::Argument(format!(
            "few-shot extraction needs at least 2 videos, got {}",
            stacks.len()
        )));
    }
    check_stacks(stacks)?;
    let first = &stacks[0];
    let (w, h, t) = (first.width(), first.height(), first.frames());
    let k = cfg.window.unwrap_or_else(|| window_size(w));

    let outcomes: Vec<WindowOutcome> = (0..w * h)
        .into_par_iter()
        .map(|p| {
            let (x, y) = (p % w, p / w);
            let points = gather_window_points(stacks, x, y, k)?;
            window_common_motion(&points, cfg, pixel_seed(cfg.seed, x, y))
        })
        .collect::<Result<_>>()?;

    let mut out = AttentionStack::uniform(h, w, t)?;
    let mut report = ExtractionReport {
        window: k,
        pixels: w * h,
        ..Default::default()
    };
    for (p, o) in outcomes.iter().enumerate() {
        store_matrix(&o.centroid, t, out.pixel_mut(p % w, p / w));
        report.fallback_pixels += o.fallback as usize;
        report.tie_pixels += o.tie as usize;
        report.degenerate_pixels += o.degenerate as usize;
    }
    if report.fallback_pixels > 0 {
        log::warn!("{} pixels fell back to the plain window mean", report.fallback_pixels);
    }
    Ok((out, report))
}

/// Baseline: plain mean of every gathered window point, no clustering.
pub fn average_attention(stacks: &[AttentionStack], k: usize) -> Result<AttentionStack> {
    if stacks.len() < 2 {
        return Err(Error::Argument("averaging needs at least 2 videos".into()));
    }
    check_stacks(stacks)?;
    let first = &stacks[0];
    let (w, h, t) = (first.width(), first.height(), first.frames());
    let mut out = AttentionStack::uniform(h, w, t)?;
    for y in 0..h {
        for x in 0..w {
            let points = gather_window_points(stacks, x, y, k)?.canonical();
            let mean = mean_of(&points, 0..points.len());
            store_matrix(&mean, t, out.pixel_mut(x, y));
        }
    }
    Ok(out)
}
