use super::{Field2D, SolverConfig};
use crate::error::{Error, Result};
use crate::tensor::mask::neighbors4;
use crate::tensor::{mask_boundary, Mask2D};

/// Iteration statistics for one scalar field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    /// Full red+black sweeps performed.
    pub iterations: usize,
    /// Largest update of the last checked sweep.
    pub residual: f64,
    pub converged: bool,
}

/// Stencil for one unknown: its flat index and the flat indices of its
/// in-image 4-neighbours.
#[derive(Debug, Clone)]
struct Node {
    index: usize,
    neighbors: [usize; 4],
    count: u8,
}

/// The masked pixels of a canvas, split into the two checkerboard colors,
/// ready to be solved for any number of fields sharing the mask.
#[derive(Debug, Clone)]
pub struct LaplaceProblem {
    width: usize,
    height: usize,
    red: Vec<Node>,
    black: Vec<Node>,
    unknowns: Vec<usize>,
    boundary: Vec<usize>,
}

impl LaplaceProblem {
    pub fn new(mask: &Mask2D) -> Result<Self> {
        if mask.is_full() {
            return Err(Error::NoBackground);
        }
        let (w, h) = (mask.width(), mask.height());
        let mut red = Vec::new();
        let mut black = Vec::new();
        let mut unknowns = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if !mask.get(x, y) {
                    continue;
                }
                let mut node = Node {
                    index: y * w + x,
                    neighbors: [0; 4],
                    count: 0,
                };
                for (nx, ny) in neighbors4(x, y, w, h) {
                    node.neighbors[node.count as usize] = ny * w + nx;
                    node.count += 1;
                }
                unknowns.push(node.index);
                if (x + y) % 2 == 0 {
                    red.push(node);
                } else {
                    black.push(node);
                }
            }
        }
        let boundary = mask_boundary(mask)
            .into_iter()
            .map(|(x, y)| y * w + x)
            .collect();
        Ok(Self {
            width: w,
            height: h,
            red,
            black,
            unknowns,
            boundary,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Flat indices of the masked pixels in row-major order.
    pub fn unknowns(&self) -> &[usize] {
        &self.unknowns
    }

    /// Flat indices of the fixed pixels adjacent to the mask.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Solves in place on a full `H x W` field. Only masked entries are
    /// written; they are first reset to the mean of the boundary values.
    pub fn solve_in_place(&self, field: &mut [f64], cfg: &SolverConfig) -> SolveStats {
        debug_assert_eq!(field.len(), self.width * self.height);
        if self.unknowns.is_empty() {
            return SolveStats {
                iterations: 0,
                residual: 0.0,
                converged: true,
            };
        }
        let start = self.boundary.iter().map(|&i| field[i]).sum::<f64>() / self.boundary.len() as f64;
        for &i in &self.unknowns {
            field[i] = start;
        }

        let omega = cfg.omega;
        let mut residual = f64::INFINITY;
        for sweep in 1..=cfg.max_iterations {
            let mut max_update = 0.0f64;
            for color in [&self.red, &self.black] {
                for node in color {
                    let n = node.count as usize;
                    let sum: f64 = node.neighbors[..n].iter().map(|&j| field[j]).sum();
                    let old = field[node.index];
                    let new = (1.0 - omega) * old + omega * (sum / n as f64);
                    field[node.index] = new;
                    max_update = max_update.max((new - old).abs());
                }
            }
            if sweep % cfg.check_stride == 0 || sweep == cfg.max_iterations {
                residual = max_update;
                if residual <= cfg.tolerance {
                    return SolveStats {
                        iterations: sweep,
                        residual,
                        converged: true,
                    };
                }
            }
        }
        SolveStats {
            iterations: cfg.max_iterations,
            residual,
            converged: false,
        }
    }
}

/// Harmonic completion of a single scalar field inside `mask` by red-black
/// SOR. Values outside the mask are returned unchanged.
pub fn solve_laplace_field(
    field: &Field2D,
    mask: &Mask2D,
    cfg: &SolverConfig,
) -> Result<(Field2D, SolveStats)> {
    cfg.validate()?;
    field.check_mask(mask)?;
    let problem = LaplaceProblem::new(mask)?;
    let mut data = field.data().to_vec();
    let stats = problem.solve_in_place(&mut data, cfg);
    Ok((Field2D::from_vec(field.width(), field.height(), data)?, stats))
}
