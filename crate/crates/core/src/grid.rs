//! Uniform rectangular grids and scalar fields sampled on them.
//!
//! Values are stored row-major in declared axis order: the last axis varies
//! fastest. Integrals use the trapezoid rule.

use crate::error::{Error, Result};

/// One axis of a uniform grid: `count` points from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidGrid(format!("non-finite bounds [{min}, {max}]")));
        }
        if count < 2 {
            return Err(Error::InvalidGrid(format!("axis count {count} < 2")));
        }
        if max <= min {
            return Err(Error::InvalidGrid(format!("max {max} <= min {min}")));
        }
        Ok(Axis { min, max, count })
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }

    /// Trapezoid weight of point `i` in units of the spacing.
    #[inline]
    pub fn trapezoid_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.count {
            0.5
        } else {
            1.0
        }
    }
}

/// A uniform rectangular grid in `ndim` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    axes: Vec<Axis>,
}

/// Builds a grid from `(min, max, count)` triples, one per axis.
pub fn make_grid(ndim: usize, axes: &[(f64, f64, usize)]) -> Result<GridSpec> {
    if ndim == 0 {
        return Err(Error::InvalidGrid("ndim must be positive".into()));
    }
    if axes.len() != ndim {
        return Err(Error::DimensionMismatch { expected: ndim, found: axes.len() });
    }
    GridSpec::new(
        axes.iter()
            .map(|&(lo, hi, n)| Axis::new(lo, hi, n))
            .collect::<Result<Vec<_>>>()?,
    )
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("ndim must be positive".into()));
        }
        for a in &axes {
            Axis::new(a.min, a.max, a.count)?;
        }
        Ok(GridSpec { axes })
    }

    /// The same `(min, max, count)` on every one of `ndim` axes.
    pub fn cube(ndim: usize, min: f64, max: f64, count: usize) -> Result<Self> {
        if ndim == 0 {
            return Err(Error::InvalidGrid("ndim must be positive".into()));
        }
        GridSpec::new(vec![Axis::new(min, max, count)?; ndim])
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.axes[axis].spacing()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Multi-index of a flat row-major index.
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for (d, a) in self.axes.iter().enumerate().rev() {
            out[d] = flat % a.count;
            flat /= a.count;
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.count + i)
    }

    /// Coordinates of the point with flat index `flat`, written into `out`.
    pub fn point_into(&self, mut flat: usize, out: &mut [f64]) {
        for (d, a) in self.axes.iter().enumerate().rev() {
            out[d] = a.point(flat % a.count);
            flat /= a.count;
        }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.ndim()];
        self.point_into(flat, &mut p);
        p
    }

    /// Trapezoid weight of a point, as a fraction of the cell volume.
    pub fn trapezoid_weight(&self, mut flat: usize) -> f64 {
        let mut w = 1.0;
        for a in self.axes.iter().rev() {
            w *= a.trapezoid_weight(flat % a.count);
            flat /= a.count;
        }
        w
    }

    /// Index of the grid point nearest to `q` (clamped to the grid).
    pub fn nearest_index(&self, q: &[f64]) -> usize {
        let idx: Vec<usize> = self
            .axes
            .iter()
            .zip(q)
            .map(|(a, &x)| {
                let t = ((x - a.min) / a.spacing()).round();
                t.clamp(0.0, (a.count - 1) as f64) as usize
            })
            .collect();
        self.ravel(&idx)
    }
}

/// Sampled real values on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at index {i}")));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.len();
        ScalarField { grid, values: vec![0.0; n] }
    }

    /// Evaluates `f` at every grid point.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let mut q = vec![0.0; grid.ndim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.point_into(i, &mut q);
                f(&q)
            })
            .collect();
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, s: f64) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn max_index(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
            .0
    }
}

/// Trapezoid-rule integral of the field over its grid.
pub fn total_mass(field: &ScalarField) -> f64 {
    let g = field.grid();
    let dv = g.cell_volume();
    field
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v * g.trapezoid_weight(i))
        .sum::<f64>()
        * dv
}

/// Relative grid-weighted L2 error `|a - b| / |b|`.
///
/// Returns `+inf` when `b` vanishes but `a` does not, and `0` when both vanish.
pub fn l2_rel_error(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    l2_rel_error_masked(a, b, |_| true)
}

/// As [`l2_rel_error`], restricted to grid points where `keep(point)` holds.
pub fn l2_rel_error_masked(
    a: &ScalarField,
    b: &ScalarField,
    keep: impl Fn(&[f64]) -> bool,
) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch);
    }
    let g = a.grid();
    let mut q = vec![0.0; g.ndim()];
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..g.len() {
        g.point_into(i, &mut q);
        if !keep(&q) {
            continue;
        }
        let w = g.trapezoid_weight(i);
        let d = a.values[i] - b.values[i];
        num += w * d * d;
        den += w * b.values[i] * b.values[i];
    }
    Ok(if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    })
}
