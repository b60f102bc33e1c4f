use crate::error::{Error, Result};
use crate::geometry::FamilyTag;
use crate::grid::GridSpec;

/// Sampled tomograms ω(X; params) over a parameter grid × an X grid.
///
/// `values` is row-major with one row of X samples per parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct TomogramFamily {
    x_grid: GridSpec,
    param_grid: GridSpec,
    values: Vec<f64>,
    tag: FamilyTag,
}

impl TomogramFamily {
    pub fn new(x_grid: GridSpec, param_grid: GridSpec, values: Vec<f64>, tag: FamilyTag) -> Result<Self> {
        if x_grid.ndim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: x_grid.ndim() });
        }
        let expected = x_grid.len() * param_grid.len();
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("tomogram value at index {i}")));
        }
        Ok(TomogramFamily { x_grid, param_grid, values, tag })
    }

    pub fn x_grid(&self) -> &GridSpec {
        &self.x_grid
    }

    pub fn param_grid(&self) -> &GridSpec {
        &self.param_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tag(&self) -> FamilyTag {
        self.tag
    }

    pub fn n_x(&self) -> usize {
        self.x_grid.len()
    }

    pub fn n_params(&self) -> usize {
        self.param_grid.len()
    }

    /// ω(·; params) for parameter point `p`.
    pub fn row(&self, p: usize) -> &[f64] {
        let n = self.n_x();
        &self.values[p * n..(p + 1) * n]
    }

    pub fn scaled(&self, s: f64) -> TomogramFamily {
        TomogramFamily { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }
}

/// Trapezoid integral of `row` over a one-dimensional grid.
pub fn trapezoid_1d(x_grid: &GridSpec, row: &[f64]) -> f64 {
    let a = x_grid.axis(0);
    row.iter().enumerate().map(|(k, v)| v * a.trapezoid_weight(k)).sum::<f64>() * a.spacing()
}

/// ∫ ω dX for every parameter point.
pub fn normalization_profile(t: &TomogramFamily) -> Vec<f64> {
    (0..t.n_params()).map(|p| trapezoid_1d(t.x_grid(), t.row(p))).collect()
}
