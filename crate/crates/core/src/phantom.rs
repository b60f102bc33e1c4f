//! Analytic test densities: Gaussian mixtures, uniform balls and boxes.
//!
//! Every phantom is a probability density on Rⁿ: nonnegative with unit total
//! mass by construction.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// One weighted Gaussian component of a mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    weight: f64,
    mean: Vec<f64>,
    covariance: Vec<f64>,
    precision: Vec<f64>,
    chol_lower: Vec<f64>,
    norm: f64,
}

impl GaussianComponent {
    pub fn new(weight: f64, mean: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        let n = mean.len();
        if n == 0 {
            return Err(Error::InvalidPhantom("empty mean vector".into()));
        }
        if covariance.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: covariance.len() });
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidPhantom(format!("component weight {weight} must be positive")));
        }
        if mean.iter().chain(&covariance).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPhantom("non-finite mean or covariance".into()));
        }
        let cov = DMatrix::from_row_slice(n, n, &covariance);
        let scale = cov.abs().max().max(f64::MIN_POSITIVE);
        if (&cov - cov.transpose()).abs().max() > 1e-12 * scale {
            return Err(Error::InvalidPhantom("covariance is not symmetric".into()));
        }
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidPhantom("covariance is not positive definite".into()))?;
        let l = chol.l();
        let det: f64 = l.diagonal().iter().map(|d| d * d).product();
        let precision = chol.inverse();
        Ok(GaussianComponent {
            weight,
            norm: ((2.0 * PI).powi(n as i32) * det).sqrt().recip(),
            mean,
            covariance,
            precision: precision.transpose().as_slice().to_vec(),
            chol_lower: l.transpose().as_slice().to_vec(),
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Row-major covariance matrix.
    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    /// Normalized Gaussian density (weight not applied).
    pub fn density(&self, q: &[f64]) -> f64 {
        let n = self.mean.len();
        let mut quad = 0.0;
        for i in 0..n {
            let di = q[i] - self.mean[i];
            let row = &self.precision[i * n..(i + 1) * n];
            let mut s = 0.0;
            for j in 0..n {
                s += row[j] * (q[j] - self.mean[j]);
            }
            quad += di * s;
        }
        self.norm * (-0.5 * quad).exp()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let n = self.mean.len();
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for i in 0..n {
            let row = &self.chol_lower[i * n..(i + 1) * n];
            out[i] = self.mean[i] + row[..=i].iter().zip(&z).map(|(l, z)| l * z).sum::<f64>();
        }
    }
}

/// An analytic probability density.
#[derive(Debug, Clone, PartialEq)]
pub enum Phantom {
    GaussianMixture { components: Vec<GaussianComponent> },
    UniformBall { center: Vec<f64>, radius: f64 },
    UniformBox { min: Vec<f64>, max: Vec<f64> },
}

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}

impl Phantom {
    /// Single Gaussian with the given mean and row-major covariance.
    pub fn gaussian(mean: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        Ok(Phantom::GaussianMixture { components: vec![GaussianComponent::new(1.0, mean, covariance)?] })
    }

    /// Zero-mean identity-covariance Gaussian in `n` dimensions.
    pub fn standard_gaussian(n: usize) -> Self {
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            cov[i * n + i] = 1.0;
        }
        Phantom::gaussian(vec![0.0; n], cov).expect("identity covariance is valid")
    }

    /// Mixture of `(weight, mean, covariance)` components; weights must sum to 1.
    pub fn mixture(components: Vec<(f64, Vec<f64>, Vec<f64>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidPhantom("mixture has no components".into()));
        }
        let comps = components
            .into_iter()
            .map(|(w, m, c)| GaussianComponent::new(w, m, c))
            .collect::<Result<Vec<_>>>()?;
        let n = comps[0].mean.len();
        if comps.iter().any(|c| c.mean.len() != n) {
            return Err(Error::InvalidPhantom("components differ in dimension".into()));
        }
        let total: f64 = comps.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPhantom(format!("weights sum to {total}, expected 1")));
        }
        Ok(Phantom::GaussianMixture { components: comps })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidPhantom("empty center".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPhantom(format!("bad ball (radius {radius})")));
        }
        Ok(Phantom::UniformBall { center, radius })
    }

    pub fn uniform_box(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.is_empty() || min.len() != max.len() {
            return Err(Error::InvalidPhantom("box corners differ in dimension".into()));
        }
        if min.iter().zip(&max).any(|(a, b)| !(a.is_finite() && b.is_finite() && b > a)) {
            return Err(Error::InvalidPhantom("box requires max > min on every axis".into()));
        }
        Ok(Phantom::UniformBox { min, max })
    }

    pub fn ndim(&self) -> usize {
        match self {
            Phantom::GaussianMixture { components } => components[0].mean.len(),
            Phantom::UniformBall { center, .. } => center.len(),
            Phantom::UniformBox { min, .. } => min.len(),
        }
    }

    /// Pointwise density.
    pub fn density(&self, q: &[f64]) -> f64 {
        match self {
            Phantom::GaussianMixture { components } => {
                components.iter().map(|c| c.weight * c.density(q)).sum()
            }
            Phantom::UniformBall { center, radius } => {
                let r2: f64 = q.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                if r2 <= radius * radius {
                    1.0 / (unit_ball_volume(center.len()) * radius.powi(center.len() as i32))
                } else {
                    0.0
                }
            }
            Phantom::UniformBox { min, max } => {
                if q.iter().zip(min.iter().zip(max)).all(|(x, (a, b))| x >= a && x <= b) {
                    1.0 / min.iter().zip(max).map(|(a, b)| b - a).product::<f64>()
                } else {
                    0.0
                }
            }
        }
    }

    /// Draws one exact sample into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Phantom::GaussianMixture { components } => {
                let mut u: f64 = rng.random::<f64>();
                let mut pick = components.len() - 1;
                for (i, c) in components.iter().enumerate() {
                    if u < c.weight {
                        pick = i;
                        break;
                    }
                    u -= c.weight;
                }
                components[pick].sample(rng, out);
            }
            Phantom::UniformBall { center, radius } => {
                let n = center.len();
                let mut norm2 = 0.0;
                while norm2 == 0.0 {
                    for o in out.iter_mut() {
                        *o = StandardNormal.sample(rng);
                    }
                    norm2 = out.iter().map(|v| v * v).sum();
                }
                let r = radius * rng.random::<f64>().powf(1.0 / n as f64) / norm2.sqrt();
                for (o, c) in out.iter_mut().zip(center) {
                    *o = c + *o * r;
                }
            }
            Phantom::UniformBox { min, max } => {
                for ((o, a), b) in out.iter_mut().zip(min).zip(max) {
                    *o = a + (b - a) * rng.random::<f64>();
                }
            }
        }
    }
}

/// Samples the phantom density at every point of `grid`.
pub fn sample_phantom(phantom: &Phantom, grid: &GridSpec) -> Result<ScalarField> {
    if phantom.ndim() != grid.ndim() {
        return Err(Error::DimensionMismatch { expected: grid.ndim(), found: phantom.ndim() });
    }
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; grid.ndim()],
            |q, i| {
                grid.point_into(i, q);
                phantom.density(q)
            },
        )
        .collect();
    ScalarField::new(grid.clone(), values)
}
