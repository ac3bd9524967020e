//! Exact t-SNE into two dimensions.
//!
//! Small point counts only (a few hundred): every pairwise affinity is
//! computed, with no tree or grid approximation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsneParams {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub early_exaggeration: f64,
    /// Iterations run with exaggerated affinities and the low momentum.
    pub exaggeration_iterations: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub init_std: f64,
    /// Record the objective every this many iterations (0 = never, except
    /// at the end of exaggeration and at the last iteration).
    pub trace_every: usize,
}

impl Default for TsneParams {
    fn default() -> Self {
        Self {
            perplexity: 10.0,
            iterations: 1000,
            learning_rate: 50.0,
            seed: 0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            init_std: 1e-4,
            trace_every: 0,
        }
    }
}

/// Perplexity used when none is configured: `min(10, floor((n - 1) / 3))`,
/// but at least 1.
pub fn default_perplexity(n: usize) -> f64 {
    (n.saturating_sub(1) / 3).clamp(1, 10) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneOutput {
    pub embedding: Vec<[f64; 2]>,
    /// `(iteration, KL(P || Q))` after that iteration's update, with the
    /// unexaggerated `P`.
    pub kl_trace: Vec<(usize, f64)>,
    /// All input points coincide; the embedding is the initialization.
    pub degenerate: bool,
}

impl TsneOutput {
    pub fn kl_at(&self, iteration: usize) -> Option<f64> {
        self.kl_trace
            .iter()
            .find(|(i, _)| *i == iteration)
            .map(|&(_, kl)| kl)
    }
}

const ENTROPY_TOLERANCE: f64 = 1e-5;
const BISECTION_STEPS: usize = 50;
const MIN_GAIN: f64 = 0.01;
const P_FLOOR: f64 = 1e-12;

fn squared_distances(data: &[f64], dim: usize) -> Vec<f64> {
    let n = data.len() / dim;
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let a = &data[i * dim..(i + 1) * dim];
        for j in i + 1..n {
            let b = &data[j * dim..(j + 1) * dim];
            let s: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
            d[i * n + j] = s;
            d[j * n + i] = s;
        }
    }
    d
}

/// Conditional affinities `p(j | i)` with each bandwidth bisected until the
/// row entropy matches `ln(perplexity)`.
fn conditional_affinities(dist: &[f64], n: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        let row = &dist[i * n..(i + 1) * n];
        let others = || (0..n).filter(move |&j| j != i);
        let d_min = others().map(|j| row[j]).fold(f64::INFINITY, f64::min);
        let d_mean = others().map(|j| row[j] - d_min).sum::<f64>() / (n - 1) as f64;
        let mut beta = if d_mean > 0.0 { 1.0 / d_mean } else { 1.0 };
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        let out = &mut p[i * n..(i + 1) * n];
        for _ in 0..BISECTION_STEPS {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in others() {
                let shifted = row[j] - d_min;
                let e = (-beta * shifted).exp();
                out[j] = e;
                sum += e;
                weighted += shifted * e;
            }
            let entropy = sum.ln() + beta * weighted / sum;
            for j in others() {
                out[j] /= sum;
            }
            let diff = entropy - target;
            if diff.abs() < ENTROPY_TOLERANCE {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_infinite() { beta * 2.0 } else { (beta + hi) / 2.0 };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        out[i] = 0.0;
    }
    p
}

fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let mut num = vec![0.0; n * n];
    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let (dx, dy) = (y[i][0] - y[j][0], y[i][1] - y[j][1]);
                let q = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = q;
                z += q;
            }
        }
    }
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let pij = p[i * n + j];
                let qij = (num[i * n + j] / z).max(P_FLOOR);
                kl += pij * (pij / qij).ln();
            }
        }
    }
    kl
}

/// Embeds `n = data.len() / dim` points into the plane.
pub fn tsne_embed(data: &[f64], dim: usize, params: &TsneParams) -> Result<TsneOutput> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(Error::Dimension(format!(
            "{} values do not form points of dimension {dim}",
            data.len()
        )));
    }
    let n = data.len() / dim;
    if n < 2 {
        return Err(Error::Argument(format!("t-SNE needs at least 2 points, got {n}")));
    }
    if !(params.perplexity >= 1.0) || params.perplexity >= n as f64 {
        return Err(Error::Argument(format!(
            "perplexity {} must be in [1, {n})",
            params.perplexity
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, params.init_std)
        .map_err(|e| Error::Argument(format!("bad init std: {e}")))?;
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();

    let dist = squared_distances(data, dim);
    if dist.iter().all(|&d| d == 0.0) {
        return Ok(TsneOutput {
            embedding: y,
            kl_trace: Vec::new(),
            degenerate: true,
        });
    }

    let cond = conditional_affinities(&dist, n, params.perplexity);
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(P_FLOOR);
            }
        }
    }

    let mut velocity = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut num = vec![0.0f64; n * n];
    let mut grad = vec![[0.0f64; 2]; n];
    let mut trace = Vec::new();
    let last = params.iterations.saturating_sub(1);

    for it in 0..params.iterations {
        let exaggerating = it < params.exaggeration_iterations;
        let exaggeration = if exaggerating { params.early_exaggeration } else { 1.0 };
        let momentum = if exaggerating {
            params.initial_momentum
        } else {
            params.final_momentum
        };

        let mut z = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let (dx, dy) = (y[i][0] - y[j][0], y[i][1] - y[j][1]);
                let q = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = q;
                num[j * n + i] = q;
                z += 2.0 * q;
            }
        }
        for i in 0..n {
            let mut g = [0.0, 0.0];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let q = num[i * n + j];
                let coeff = (exaggeration * p[i * n + j] - q / z) * q;
                g[0] += coeff * (y[i][0] - y[j][0]);
                g[1] += coeff * (y[i][1] - y[j][1]);
            }
            grad[i] = [4.0 * g[0], 4.0 * g[1]];
        }

        for i in 0..n {
            for d in 0..2 {
                let same_sign = (grad[i][d] > 0.0) == (velocity[i][d] > 0.0);
                gains[i][d] = if same_sign {
                    (gains[i][d] * 0.8).max(MIN_GAIN)
                } else {
                    gains[i][d] + 0.2
                };
                velocity[i][d] = momentum * velocity[i][d] - params.learning_rate * gains[i][d] * grad[i][d];
                y[i][d] += velocity[i][d];
            }
        }
        let mean = y.iter().fold([0.0, 0.0], |acc, p| [acc[0] + p[0], acc[1] + p[1]]);
        let mean = [mean[0] / n as f64, mean[1] / n as f64];
        for p in y.iter_mut() {
            p[0] -= mean[0];
            p[1] -= mean[1];
        }

        let record = it == last
            || it == params.exaggeration_iterations
            || (params.trace_every > 0 && it % params.trace_every == 0);
        if record {
            trace.push((it, kl_divergence(&p, &y)));
        }
    }

    Ok(TsneOutput {
        embedding: y,
        kl_trace: trace,
        degenerate: false,
    })
}
