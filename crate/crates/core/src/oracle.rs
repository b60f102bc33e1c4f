//! Independent references: Monte-Carlo tomograms and closed-form densities.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::XBins;
use crate::geometry::{Diffeomorphism, LevelFamily};
use crate::grid::GridSpec;
use crate::phantom::Phantom;

/// Identifier of the generator behind [`mc_tomogram`].
pub const MC_ALGORITHM: &str = "chacha8";
/// Samples per independent stream.
pub const MC_SHARD_SIZE: u64 = 1 << 16;

/// A density that can be sampled exactly.
#[derive(Debug, Clone, Copy)]
pub enum McSource<'a> {
    Phantom(&'a Phantom),
    /// q = φ⁻¹(x) with x drawn from `target`; q has the pullback density.
    Pullback { target: &'a Phantom, diffeo: Diffeomorphism },
}

impl McSource<'_> {
    fn ndim(&self) -> usize {
        match self {
            McSource::Phantom(p) => p.ndim(),
            McSource::Pullback { target, .. } => target.ndim(),
        }
    }
}

/// Histogram estimate of one tomogram row.
#[derive(Debug, Clone, PartialEq)]
pub struct McTomogram {
    pub x_grid: GridSpec,
    /// Density estimate per X bin (count / (n·bin width)).
    pub density: Vec<f64>,
    /// √(p(1−p)/n) / bin width per bin.
    pub std_error: Vec<f64>,
    pub counts: Vec<u64>,
    /// Samples whose level value fell outside the X range.
    pub overflow: u64,
    /// Samples that landed on the singular set of the family.
    pub singular: u64,
    pub n_samples: u64,
    pub seed: u64,
    pub algorithm: &'static str,
}

impl McTomogram {
    /// max_k |ref_k − est_k| / (k_sigma·se_k + tol). Values ≤ 1 mean agreement.
    ///
    /// se_k is the larger of the estimate's standard error and the one the
    /// reference predicts for the bin, so empty tail bins are not over-trusted.
    pub fn max_normalized_gap(&self, reference: &[f64], k_sigma: f64, tol: f64) -> f64 {
        let n = self.n_samples as f64;
        let widths = XBins::new(&self.x_grid).map(|b| b.widths().to_vec()).unwrap_or_default();
        self.density
            .iter()
            .zip(&self.std_error)
            .zip(reference)
            .zip(&widths)
            .map(|(((d, s), r), w)| {
                let p = (r * w).clamp(0.0, 1.0);
                let se = s.max((p * (1.0 - p) / n).sqrt() / w);
                let gap = (d - r).abs();
                let band = k_sigma * se + tol;
                if gap == 0.0 {
                    0.0
                } else if band == 0.0 {
                    f64::INFINITY
                } else {
                    gap / band
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Histogram of g(Q; params) for Q drawn from `source`, on the same bins as
/// the forward engine. Shard `s` draws from stream `s` of a ChaCha8 generator
/// seeded with `seed`, so the result does not depend on thread count.
pub fn mc_tomogram(
    source: McSource<'_>,
    family: &LevelFamily,
    params: &[f64],
    x_grid: &GridSpec,
    n_samples: u64,
    seed: u64,
) -> Result<McTomogram> {
    let n = family.ndim();
    if source.ndim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: source.ndim() });
    }
    if params.len() != family.param_dim() {
        return Err(Error::DimensionMismatch { expected: family.param_dim(), found: params.len() });
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let bins = XBins::new(x_grid)?;
    let nb = bins.len();
    let shards = n_samples.div_ceil(MC_SHARD_SIZE);
    let partial: Vec<(Vec<u64>, u64, u64)> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let take = MC_SHARD_SIZE.min(n_samples - s * MC_SHARD_SIZE);
            let mut counts = vec![0u64; nb];
            let (mut overflow, mut singular) = (0u64, 0u64);
            let mut x = vec![0.0; n];
            let mut q = vec![0.0; n];
            for _ in 0..take {
                match source {
                    McSource::Phantom(p) => p.sample_into(&mut rng, &mut q),
                    McSource::Pullback { target, diffeo } => {
                        target.sample_into(&mut rng, &mut x);
                        diffeo.inverse_map(&x, &mut q);
                    }
                }
                if family.is_singular(&q) || q.iter().any(|v| !v.is_finite()) {
                    singular += 1;
                    continue;
                }
                match bins.index_of(family.eval_unchecked(&q, params)) {
                    Some(k) => counts[k] += 1,
                    None => overflow += 1,
                }
            }
            (counts, overflow, singular)
        })
        .collect();
    let mut counts = vec![0u64; nb];
    let (mut overflow, mut singular) = (0u64, 0u64);
    for (c, o, s) in partial {
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
        overflow += o;
        singular += s;
    }
    let total = n_samples as f64;
    let (density, std_error) = counts
        .iter()
        .zip(bins.widths())
        .map(|(&c, &w)| {
            let p = c as f64 / total;
            (p / w, (p * (1.0 - p) / total).sqrt() / w)
        })
        .unzip();
    Ok(McTomogram {
        x_grid: x_grid.clone(),
        density,
        std_error,
        counts,
        overflow,
        singular,
        n_samples,
        seed,
        algorithm: MC_ALGORITHM,
    })
}

/// ln Γ(k/2) for a positive integer k, by the half-integer recursion.
fn ln_gamma_half(k: u32) -> f64 {
    let (mut s, mut acc) = if k.is_multiple_of(2) { (1.0, 0.0) } else { (0.5, 0.5 * PI.ln()) };
    let target = k as f64 / 2.0;
    while s < target {
        acc += s.ln();
        s += 1.0;
    }
    acc
}

/// Density of the χ² distribution with `dof` degrees of freedom.
pub fn chi_square_density(dof: u32, x: f64) -> Result<f64> {
    if dof < 1 {
        return Err(Error::InvalidParameter("χ² needs at least one degree of freedom".into()));
    }
    if x < 0.0 {
        return Ok(0.0);
    }
    let h = dof as f64 / 2.0;
    if x == 0.0 {
        return Ok(match dof {
            1 => f64::INFINITY,
            2 => 0.5,
            _ => 0.0,
        });
    }
    Ok(((h - 1.0) * x.ln() - 0.5 * x - h * 2f64.ln() - ln_gamma_half(dof)).exp())
}

/// Hyperplane tomogram of the uniform disk of radius `radius` at the origin.
/// For |μ| ≠ 1 the homogeneity ω(X; μ) = ω(X/|μ|; μ/|μ|)/|μ| is applied.
pub fn disk_chord_tomogram(radius: f64, mu: [f64; 2], x: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {radius}")));
    }
    let norm = mu[0].hypot(mu[1]);
    if norm == 0.0 {
        return Err(Error::InvalidParameter("μ = 0 does not define a line".into()));
    }
    let x = x / norm;
    let r2 = radius * radius;
    let v = if x.abs() <= radius { 2.0 / (PI * r2) * (r2 - x * x).sqrt() } else { 0.0 };
    Ok(v / norm)
}
