//! One-shot camera-motion completion.
//!
//! Inside the foreground mask the attention is contaminated by object
//! motion. Every one of the `t * t` entries of the per-pixel attention
//! matrix is treated as a scalar field over the canvas and replaced, inside
//! the mask, by the harmonic interpolant of its values on the mask boundary
//! (Laplace equation with Dirichlet data, zero guidance field). Pixels on the
//! canvas edge use only their in-image neighbours, which is a zero-flux
//! condition there.

mod direct;
mod sor;

pub use direct::{direct_solve_reference, DIRECT_SOLVE_LIMIT};
pub use sor::{solve_laplace_field, LaplaceProblem, SolveStats};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::validate::renormalize_rows_slice;
use crate::tensor::{AttentionStack, Mask2D};

/// A dense scalar field over an `H x W` canvas, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Field2D {
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "field has {} values, expected {}",
                data.len(),
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub(crate) fn check_mask(&self, mask: &Mask2D) -> Result<()> {
        if mask.width() != self.width || mask.height() != self.height {
            return Err(Error::Dimension(format!(
                "mask is {}x{}, field is {}x{}",
                mask.height(),
                mask.width(),
                self.height,
                self.width
            )));
        }
        Ok(())
    }
}

/// Parameters of the red-black SOR iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Relaxation factor in `(0, 2)`; 1 is plain Gauss-Seidel.
    pub omega: f64,
    pub max_iterations: usize,
    /// Stop once the largest per-sweep update is at most this.
    pub tolerance: f64,
    /// Sweeps between convergence checks.
    pub check_stride: usize,
    /// Row-renormalize completed pixels afterwards. Off by default: the
    /// completion preserves row sums on its own.
    pub renormalize: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            omega: 1.9,
            max_iterations: 10_000,
            tolerance: 1e-6,
            check_stride: 10,
            renormalize: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::Argument(format!("omega must be in (0, 2), got {}", self.omega)));
        }
        if self.max_iterations < 1 {
            return Err(Error::Argument("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Argument(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if self.check_stride < 1 {
            return Err(Error::Argument("check_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Outcome of [`complete_attention`], aggregated over all channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletionReport {
    /// Largest sweep count any channel needed.
    pub iterations: usize,
    /// Largest final update norm over channels.
    pub final_residual: f64,
    pub channels_solved: usize,
    pub converged: bool,
}

/// Replaces the attention inside `mask` by the harmonic completion of its
/// boundary values, channel by channel. Unmasked pixels are copied
/// bit-for-bit.
///
/// Non-convergence is not an error: the partial result comes back with
/// `converged == false`.
pub fn complete_attention(
    attn: &AttentionStack,
    mask: &Mask2D,
    cfg: &SolverConfig,
) -> Result<(AttentionStack, CompletionReport)> {
    cfg.validate()?;
    attn.check_mask(mask)?;
    let channels = attn.channels();
    if mask.is_empty() {
        return Ok((
            attn.clone(),
            CompletionReport {
                iterations: 0,
                final_residual: 0.0,
                channels_solved: channels,
                converged: true,
            },
        ));
    }
    let problem = LaplaceProblem::new(mask)?;
    let pixels = attn.width() * attn.height();

    let solved: Vec<(Vec<f64>, SolveStats)> = (0..channels)
        .into_par_iter()
        .map(|ch| {
            let mut field: Vec<f64> = (0..pixels)
                .map(|p| attn.data()[p * channels + ch] as f64)
                .collect();
            let stats = problem.solve_in_place(&mut field, cfg);
            let interior = problem.unknowns().iter().map(|&p| field[p]).collect();
            (interior, stats)
        })
        .collect();

    let mut out = attn.clone();
    let mut report = CompletionReport {
        iterations: 0,
        final_residual: 0.0,
        channels_solved: channels,
        converged: true,
    };
    {
        let data = out.data_mut();
        for (ch, (interior, stats)) in solved.iter().enumerate() {
            for (&p, &v) in problem.unknowns().iter().zip(interior) {
                data[p * channels + ch] = v as f32;
            }
            report.iterations = report.iterations.max(stats.iterations);
            report.final_residual = report.final_residual.max(stats.residual);
            report.converged &= stats.converged;
        }
    }
    if cfg.renormalize {
        let t = attn.frames();
        let data = out.data_mut();
        for &p in problem.unknowns() {
            renormalize_rows_slice(&mut data[p * channels..(p + 1) * channels], t);
        }
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::validate_attention;

    fn disk(n: usize, cx: f64, cy: f64, r: f64) -> Mask2D {
        Mask2D::from_fn(n, n, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            dx * dx + dy * dy <= r * r
        })
    }

    /// Attention whose entries are affine in (x, y) with rows summing to 1.
    fn ramp_attention(n: usize, t: usize) -> AttentionStack {
        let mid = (t as f64 - 1.0) / 2.0;
        let mut data = Vec::new();
        for y in 0..n {
            for x in 0..n {
                for i in 0..t {
                    for j in 0..t {
                        let dj = j as f64 - mid;
                        let v = 1.0 / t as f64
                            + 0.004 * dj * x as f64 * (1 + i) as f64 / t as f64
                            - 0.003 * dj * y as f64 / t as f64;
                        data.push(v as f32);
                    }
                }
            }
        }
        AttentionStack::from_vec(n, n, t, data).unwrap()
    }

    #[test]
    fn empty_mask_is_identity_with_zero_iterations() {
        let a = AttentionStack::uniform(8, 8, 3).unwrap();
        let (out, report) = complete_attention(&a, &Mask2D::zeros(8, 8), &SolverConfig::default()).unwrap();
        assert_eq!(out, a);
        assert_eq!(report.iterations, 0);
        assert!(report.converged);
    }

    #[test]
    fn full_mask_has_no_background() {
        let a = AttentionStack::uniform(4, 4, 2).unwrap();
        assert!(matches!(
            complete_attention(&a, &Mask2D::ones(4, 4), &SolverConfig::default()),
            Err(Error::NoBackground)
        ));
    }

    #[test]
    fn mismatched_mask_is_rejected() {
        let a = AttentionStack::uniform(4, 4, 2).unwrap();
        assert!(matches!(
            complete_attention(&a, &Mask2D::zeros(4, 5), &SolverConfig::default()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn constant_boundary_fills_constant() {
        let mut a = AttentionStack::uniform(16, 16, 3).unwrap();
        let mask = disk(16, 8.0, 8.0, 4.0);
        for y in 0..16 {
            for x in 0..16 {
                if mask.get(x, y) {
                    a.pixel_mut(x, y).copy_from_slice(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
                }
            }
        }
        let (out, report) = complete_attention(&a, &mask, &SolverConfig::default()).unwrap();
        assert!(report.converged);
        for v in out.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-5);
        }
    }

    #[test]
    fn affine_entries_are_recovered_and_outside_is_untouched() {
        let n = 20;
        let clean = ramp_attention(n, 3);
        let mask = disk(n, 9.0, 11.0, 5.0);
        let mut polluted = clean.clone();
        for y in 0..n {
            for x in 0..n {
                if mask.get(x, y) {
                    polluted.pixel_mut(x, y).copy_from_slice(&[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
                }
            }
        }
        let (out, report) = complete_attention(&polluted, &mask, &SolverConfig::default()).unwrap();
        assert!(report.converged);
        assert_eq!(report.channels_solved, 9);
        for y in 0..n {
            for x in 0..n {
                if mask.get(x, y) {
                    for (a, b) in out.pixel(x, y).iter().zip(clean.pixel(x, y)) {
                        assert!((a - b).abs() <= 1e-4, "{a} vs {b}");
                    }
                } else {
                    assert_eq!(out.pixel(x, y), polluted.pixel(x, y));
                }
            }
        }
        assert!(validate_attention(&out).max_row_sum_error <= 3e-6);
    }

    #[test]
    fn renormalize_flag_keeps_rows_exact() {
        let n = 12;
        let a = ramp_attention(n, 2);
        let mask = disk(n, 6.0, 6.0, 3.0);
        let cfg = SolverConfig {
            renormalize: true,
            ..Default::default()
        };
        let (out, _) = complete_attention(&a, &mask, &cfg).unwrap();
        assert!(validate_attention(&out).max_row_sum_error < 1e-6);
    }

    #[test]
    fn config_validation() {
        let bad = |cfg: SolverConfig| cfg.validate().is_err();
        assert!(bad(SolverConfig { omega: 2.0, ..Default::default() }));
        assert!(bad(SolverConfig { omega: 0.0, ..Default::default() }));
        assert!(bad(SolverConfig { max_iterations: 0, ..Default::default() }));
        assert!(bad(SolverConfig { tolerance: 0.0, ..Default::default() }));
        assert!(bad(SolverConfig { check_stride: 0, ..Default::default() }));
        assert!(SolverConfig::default().validate().is_ok());
    }
}
