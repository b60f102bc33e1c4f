//! Forward tomograms by binned co-area accumulation.
//!
//! The source is cut into grid cells. Each cell carries its mass and the
//! box it covers; across the box the level function is linearized, so the
//! values g takes on the cell are distributed as a sum of independent
//! uniforms with widths |∂g/∂qⱼ|·hⱼ (a box spline). That distribution is
//! integrated exactly over each X bin. Bins are the dual cells of the X grid
//! clipped to `[X_min, X_max]`, so the end bins have half width and the
//! trapezoid integral of ω over X equals the binned mass exactly. Mass that
//! falls outside the X range is kept in a per-parameter overflow counter.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Diffeomorphism, LevelFamily};
use crate::grid::{GridSpec, ScalarField};
use crate::phantom::Phantom;
use crate::tomogram::TomogramFamily;

/// Footprint widths below this fraction of the largest are treated as zero.
const WIDTH_RTOL: f64 = 1e-4;
/// Largest number of non-trivial footprint dimensions (2^n corner terms).
const MAX_FOOTPRINT_DIMS: usize = 12;

/// What the forward transform integrates.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    /// An analytic density, integrated by the midpoint rule on the cells of `grid`.
    Phantom { phantom: &'a Phantom, grid: &'a GridSpec },
    /// A sampled field; each grid point owns its (clipped) dual cell.
    Field(&'a ScalarField),
    /// The pullback f̃(φ(q))·J(q) of an analytic density, on the cells of `grid`.
    Pullback { target: &'a Phantom, diffeo: Diffeomorphism, grid: &'a GridSpec },
}

impl<'a> Source<'a> {
    pub fn ndim(&self) -> usize {
        match self {
            Source::Phantom { grid, .. } | Source::Pullback { grid, .. } => grid.ndim(),
            Source::Field(f) => f.grid().ndim(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ForwardOptions {
    /// Overflow mass fraction above which a warning is attached.
    pub overflow_threshold: f64,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        ForwardOptions { overflow_threshold: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForwardWarning {
    /// Some parameter points lost more than the threshold to the X range.
    Overflow { params: usize, max_fraction: f64 },
    /// Some parameter points make the level function constant.
    DegenerateParams { count: usize },
}

/// Tomogram rows for an arbitrary list of parameter points.
#[derive(Debug, Clone)]
pub struct ForwardProfiles {
    pub x_grid: GridSpec,
    /// Row-major, one row of `x_grid.len()` values per parameter point.
    pub values: Vec<f64>,
    /// Mass outside the X range, per parameter point.
    pub overflow: Vec<f64>,
    /// Total mass of the discretized source.
    pub source_mass: f64,
    /// Cells whose evaluation point lies on the singular set (skipped).
    pub singular_cells: usize,
    pub total_cells: usize,
    pub degenerate_params: Vec<usize>,
    pub warnings: Vec<ForwardWarning>,
}

impl ForwardProfiles {
    pub fn row(&self, p: usize) -> &[f64] {
        let n = self.x_grid.len();
        &self.values[p * n..(p + 1) * n]
    }
}

/// Output of [`forward_binned`].
#[derive(Debug, Clone)]
pub struct ForwardResult {
    pub tomogram: TomogramFamily,
    pub overflow: Vec<f64>,
    pub source_mass: f64,
    pub singular_cells: usize,
    pub total_cells: usize,
    pub degenerate_params: Vec<usize>,
    pub warnings: Vec<ForwardWarning>,
}

impl ForwardResult {
    pub fn singular_fraction(&self) -> f64 {
        if self.total_cells == 0 {
            0.0
        } else {
            self.singular_cells as f64 / self.total_cells as f64
        }
    }
}

/// Bins of a one-dimensional X grid: dual cells clipped to the grid range.
#[derive(Debug, Clone)]
pub struct XBins {
    edges: Vec<f64>,
    widths: Vec<f64>,
    xmin: f64,
    dx: f64,
}

impl XBins {
    pub fn new(x_grid: &GridSpec) -> Result<Self> {
        if x_grid.ndim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: x_grid.ndim() });
        }
        let a = *x_grid.axis(0);
        let dx = a.spacing();
        let n = a.count;
        let mut edges = Vec::with_capacity(n + 1);
        edges.push(a.min);
        for k in 1..n {
            edges.push(a.min + (k as f64 - 0.5) * dx);
        }
        edges.push(a.max);
        let widths = edges.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(XBins { edges, widths, xmin: a.min, dx })
    }

    pub fn len(&self) -> usize {
        self.widths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.widths.is_empty()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Bin holding `x` under half-open `[e_k, e_{k+1})` bins, the last one
    /// closed; `None` outside the range.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let n = self.len();
        let (lo, hi) = (self.edges[0], self.edges[n]);
        if !(x >= lo && x <= hi) {
            return None;
        }
        let mut k = (((x - self.xmin) / self.dx) + 0.5).floor().clamp(0.0, (n - 1) as f64) as usize;
        while k > 0 && x < self.edges[k] {
            k -= 1;
        }
        while k + 1 < n && x >= self.edges[k + 1] {
            k += 1;
        }
        Some(k)
    }

    /// First bin whose upper edge exceeds `x` (x assumed ≥ lower range edge).
    fn first_bin_at(&self, x: f64) -> usize {
        let n = self.len();
        let mut k = (((x - self.xmin) / self.dx) + 0.5).floor().clamp(0.0, (n - 1) as f64) as usize;
        while k > 0 && x < self.edges[k] {
            k -= 1;
        }
        while k + 1 < n && x >= self.edges[k + 1] {
            k += 1;
        }
        k
    }

    /// Spreads `mass` over the bins following the distribution of
    /// `center + Σ Uⱼ`, Uⱼ uniform on `[-wⱼ/2, wⱼ/2]`. Returns the mass that
    /// fell outside the range.
    pub fn deposit(&self, hist: &mut [f64], center: f64, widths: &[f64], mass: f64) -> f64 {
        let spline = BoxSpline::new(center, widths);
        let n = self.len();
        let (lo_edge, hi_edge) = (self.edges[0], self.edges[n]);
        match spline {
            None => match self.index_of(center) {
                Some(k) => {
                    hist[k] += mass;
                    0.0
                }
                None => mass,
            },
            Some(s) => {
                let (lo, hi) = (s.lo, s.lo + s.total);
                if hi <= lo_edge || lo > hi_edge {
                    return mass;
                }
                let mut out = 0.0;
                let mut prev = if lo < lo_edge {
                    let f = s.cdf(lo_edge);
                    out += mass * f;
                    f
                } else {
                    0.0
                };
                let start = self.first_bin_at(lo.max(lo_edge));
                for k in start..n {
                    let upper = self.edges[k + 1];
                    let next = if upper >= hi { 1.0 } else { s.cdf(upper) };
                    hist[k] += mass * (next - prev);
                    prev = next;
                    if upper >= hi {
                        break;
                    }
                }
                out + mass * (1.0 - prev)
            }
        }
    }
}

/// Distribution of `lo + Σ Uⱼ`, Uⱼ uniform on `[0, wⱼ]`.
struct BoxSpline {
    lo: f64,
    total: f64,
    order: i32,
    offsets: [f64; 1 << 6],
    signs: [f64; 1 << 6],
    n_terms: usize,
    norm: f64,
    // fallback for many dimensions
    wide: Option<(Vec<f64>, Vec<f64>)>,
}

impl BoxSpline {
    fn new(center: f64, widths: &[f64]) -> Option<Self> {
        let wmax = widths.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        if !(wmax > 0.0) || !wmax.is_finite() {
            return None;
        }
        let mut active = [0.0; MAX_FOOTPRINT_DIMS];
        let mut m = 0;
        for w in widths {
            let w = w.abs();
            if w > WIDTH_RTOL * wmax && m < MAX_FOOTPRINT_DIMS {
                active[m] = w;
                m += 1;
            }
        }
        let active = &active[..m];
        let total: f64 = active.iter().sum();
        let n_terms = 1usize << m;
        let mut fact = 1.0;
        for i in 2..=m {
            fact *= i as f64;
        }
        let norm = 1.0 / (fact * active.iter().product::<f64>());
        let mut s = BoxSpline {
            lo: center - 0.5 * total,
            total,
            order: m as i32,
            offsets: [0.0; 64],
            signs: [0.0; 64],
            n_terms,
            norm,
            wide: None,
        };
        let fill = |offsets: &mut [f64], signs: &mut [f64]| {
            for mask in 0..n_terms {
                let mut o = 0.0;
                let mut sign = 1.0;
                for (i, w) in active.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        o += w;
                        sign = -sign;
                    }
                }
                offsets[mask] = o;
                signs[mask] = sign;
            }
        };
        if n_terms <= 64 {
            fill(&mut s.offsets, &mut s.signs);
        } else {
            let mut o = vec![0.0; n_terms];
            let mut g = vec![0.0; n_terms];
            fill(&mut o, &mut g);
            s.wide = Some((o, g));
        }
        Some(s)
    }

    /// P(S < x), using the symmetry of the distribution to keep terms small.
    fn cdf(&self, x: f64) -> f64 {
        let t = x - self.lo;
        if t <= 0.0 {
            return 0.0;
        }
        if t >= self.total {
            return 1.0;
        }
        let (t, flip) = if t > 0.5 * self.total { (self.total - t, true) } else { (t, false) };
        let (offsets, signs) = match &self.wide {
            Some((o, s)) => (o.as_slice(), s.as_slice()),
            None => (&self.offsets[..self.n_terms], &self.signs[..self.n_terms]),
        };
        let mut acc = 0.0;
        for (o, s) in offsets.iter().zip(signs) {
            let d = t - o;
            if d > 0.0 {
                acc += s * d.powi(self.order);
            }
        }
        let f = (acc * self.norm).clamp(0.0, 1.0);
        if flip {
            1.0 - f
        } else {
            f
        }
    }
}

/// Precomputed per-cell data for the level function.
enum CellGeometry {
    /// Evaluation point only (hyperplane, quadric, hybrid).
    Plain,
    /// φ(center) and the derivative of φ, per cell.
    Mapped { image: Vec<f64>, derivative: Vec<f64> },
}

struct Cells {
    ndim: usize,
    centers: Vec<f64>,
    widths: Vec<f64>,
    mass: Vec<f64>,
    geometry: CellGeometry,
    singular: usize,
    total: usize,
    source_mass: f64,
}

impl Cells {
    fn len(&self) -> usize {
        self.mass.len()
    }

    fn build(source: &Source<'_>, family: &LevelFamily) -> Result<Self> {
        let n = family.ndim();
        if source.ndim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: source.ndim() });
        }
        let mut centers = Vec::new();
        let mut widths = Vec::new();
        let mut mass = Vec::new();
        let mut singular_count = 0;
        let mut total = 0;
        let mut source_mass = 0.0;
        let mut c = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut idx = vec![0usize; n];
        match source {
            Source::Phantom { grid, .. } | Source::Pullback { grid, .. } => {
                let (target, diffeo) = match source {
                    Source::Phantom { phantom, .. } => (*phantom, None),
                    Source::Pullback { target, diffeo, .. } => (*target, Some(*diffeo)),
                    Source::Field(_) => unreachable!(),
                };
                if target.ndim() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: target.ndim() });
                }
                if let Some(d) = diffeo {
                    if d.ndim() != n {
                        return Err(Error::DimensionMismatch { expected: n, found: d.ndim() });
                    }
                }
                let counts: Vec<usize> = grid.axes().iter().map(|a| a.count - 1).collect();
                let ncell: usize = counts.iter().product();
                let dv = grid.cell_volume();
                for d in 0..n {
                    w[d] = grid.spacing(d);
                }
                let mut x = vec![0.0; n];
                for flat in 0..ncell {
                    let mut f = flat;
                    for d in (0..n).rev() {
                        idx[d] = f % counts[d];
                        f /= counts[d];
                    }
                    for d in 0..n {
                        let a = grid.axis(d);
                        c[d] = a.min + (idx[d] as f64 + 0.5) * w[d];
                    }
                    total += 1;
                    let singular = family.is_singular(&c) || diffeo.is_some_and(|d| d.is_singular(&c));
                    if singular {
                        singular_count += 1;
                        continue;
                    }
                    let density = match diffeo {
                        None => target.density(&c),
                        Some(d) => {
                            d.map(&c, &mut x);
                            target.density(&x) * d.jacobian(&c)
                        }
                    };
                    let m = density * dv;
                    if m == 0.0 {
                        continue;
                    }
                    source_mass += m;
                    centers.extend_from_slice(&c);
                    widths.extend_from_slice(&w);
                    mass.push(m);
                }
            }
            Source::Field(field) => {
                let grid = field.grid();
                let mut q = vec![0.0; n];
                for (flat, &v) in field.values().iter().enumerate() {
                    total += 1;
                    grid.point_into(flat, &mut q);
                    grid.unravel(flat, &mut idx);
                    for d in 0..n {
                        let a = grid.axis(d);
                        let h = a.spacing();
                        let lo = if idx[d] == 0 { a.min } else { q[d] - 0.5 * h };
                        let hi = if idx[d] + 1 == a.count { a.max } else { q[d] + 0.5 * h };
                        c[d] = 0.5 * (lo + hi);
                        w[d] = hi - lo;
                    }
                    if family.is_singular(&q) || family.is_singular(&c) {
                        singular_count += 1;
                        continue;
                    }
                    let m = v * w.iter().product::<f64>();
                    if m == 0.0 {
                        continue;
                    }
                    source_mass += m;
                    centers.extend_from_slice(&c);
                    widths.extend_from_slice(&w);
                    mass.push(m);
                }
            }
        }
        let geometry = match family {
            LevelFamily::Deformed(d) if !matches!(d, Diffeomorphism::Identity { .. }) => {
                let count = mass.len();
                let mut image = vec![0.0; count * n];
                let mut derivative = vec![0.0; count * n * n];
                for i in 0..count {
                    let c = &centers[i * n..(i + 1) * n];
                    d.map(c, &mut image[i * n..(i + 1) * n]);
                    d.derivative(c, &mut derivative[i * n * n..(i + 1) * n * n]);
                }
                CellGeometry::Mapped { image, derivative }
            }
            _ => CellGeometry::Plain,
        };
        Ok(Cells { ndim: n, centers, widths, mass, geometry, singular: singular_count, total, source_mass })
    }

    /// Level value and footprint widths of cell `i` for parameters `mu`.
    #[inline]
    fn footprint(&self, family: &LevelFamily, i: usize, mu: &[f64], grad: &mut [f64], scratch: &mut [f64]) -> f64 {
        let n = self.ndim;
        let c = &self.centers[i * n..(i + 1) * n];
        let g = match (&self.geometry, family) {
            (CellGeometry::Mapped { image, derivative }, _) => {
                let x = &image[i * n..(i + 1) * n];
                let dm = &derivative[i * n * n..(i + 1) * n * n];
                for j in 0..n {
                    grad[j] = 0.0;
                }
                for (r, m) in mu.iter().enumerate() {
                    let row = &dm[r * n..(r + 1) * n];
                    for j in 0..n {
                        grad[j] += m * row[j];
                    }
                }
                x.iter().zip(mu).map(|(a, b)| a * b).sum()
            }
            (_, LevelFamily::Hyperplane { .. }) | (_, LevelFamily::Deformed(_)) => {
                grad.copy_from_slice(mu);
                c.iter().zip(mu).map(|(a, b)| a * b).sum()
            }
            (_, LevelFamily::Quadric(b)) | (_, LevelFamily::Hybrid(b)) => {
                for j in 0..n {
                    scratch[j] = c[j] - mu[j];
                }
                b.apply(&scratch[..n], grad);
                let mut g: f64 = scratch[..n].iter().zip(grad.iter()).map(|(v, bv)| v * bv).sum();
                for gj in grad.iter_mut() {
                    *gj *= 2.0;
                }
                // mean of the quadratic remainder δᵀBδ over the cell
                let w = &self.widths[i * n..(i + 1) * n];
                let m = b.matrix();
                for j in 0..n {
                    g += m[j * n + j] * w[j] * w[j] / 12.0;
                }
                if let Some(lin) = b.linear_axes() {
                    for &a in lin {
                        g += mu[a] * c[a];
                        grad[a] = mu[a];
                    }
                }
                g
            }
        };
        let w = &self.widths[i * n..(i + 1) * n];
        for j in 0..n {
            grad[j] = (grad[j] * w[j]).abs();
        }
        g
    }
}

/// Tomogram rows for each parameter vector in `params`.
pub fn forward_points(
    source: Source<'_>,
    family: &LevelFamily,
    params: &[Vec<f64>],
    x_grid: &GridSpec,
    opts: &ForwardOptions,
) -> Result<ForwardProfiles> {
    let bins = XBins::new(x_grid)?;
    for p in params {
        if p.len() != family.param_dim() {
            return Err(Error::DimensionMismatch { expected: family.param_dim(), found: p.len() });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter".into()));
        }
    }
    let cells = Cells::build(&source, family)?;
    let n = cells.ndim;
    let nx = bins.len();
    let rows: Vec<(Vec<f64>, f64)> = params
        .par_iter()
        .map(|mu| {
            let mut hist = vec![0.0; nx];
            let mut grad = vec![0.0; n];
            let mut scratch = vec![0.0; n];
            let mut overflow = 0.0;
            for i in 0..cells.len() {
                let g = cells.footprint(family, i, mu, &mut grad, &mut scratch);
                overflow += bins.deposit(&mut hist, g, &grad, cells.mass[i]);
            }
            for (h, w) in hist.iter_mut().zip(bins.widths()) {
                *h /= w;
            }
            (hist, overflow)
        })
        .collect();
    let mut values = Vec::with_capacity(params.len() * nx);
    let mut overflow = Vec::with_capacity(params.len());
    for (r, o) in rows {
        values.extend_from_slice(&r);
        overflow.push(o);
    }
    let degenerate_params: Vec<usize> =
        params.iter().enumerate().filter(|(_, p)| family.is_degenerate_param(p)).map(|(i, _)| i).collect();
    let mut warnings = Vec::new();
    if cells.source_mass > 0.0 {
        let fractions = overflow.iter().map(|o| o / cells.source_mass);
        let over: Vec<f64> = fractions.filter(|f| *f > opts.overflow_threshold).collect();
        if !over.is_empty() {
            warnings.push(ForwardWarning::Overflow {
                params: over.len(),
                max_fraction: over.iter().fold(0.0f64, |m, v| m.max(*v)),
            });
        }
    }
    if !degenerate_params.is_empty() {
        warnings.push(ForwardWarning::DegenerateParams { count: degenerate_params.len() });
    }
    Ok(ForwardProfiles {
        x_grid: x_grid.clone(),
        values,
        overflow,
        source_mass: cells.source_mass,
        singular_cells: cells.singular,
        total_cells: cells.total,
        degenerate_params,
        warnings,
    })
}

/// Every point of a parameter grid, in row-major order.
pub fn grid_points(grid: &GridSpec) -> Vec<Vec<f64>> {
    (0..grid.len()).map(|i| grid.point(i)).collect()
}

/// Tomograms of `source` along `family` for every point of `param_grid`.
pub fn forward_binned(
    source: Source<'_>,
    family: &LevelFamily,
    param_grid: &GridSpec,
    x_grid: &GridSpec,
    opts: &ForwardOptions,
) -> Result<ForwardResult> {
    if param_grid.ndim() != family.param_dim() {
        return Err(Error::DimensionMismatch { expected: family.param_dim(), found: param_grid.ndim() });
    }
    let prof = forward_points(source, family, &grid_points(param_grid), x_grid, opts)?;
    Ok(ForwardResult {
        tomogram: TomogramFamily::new(x_grid.clone(), param_grid.clone(), prof.values, family.tag())?,
        overflow: prof.overflow,
        source_mass: prof.source_mass,
        singular_cells: prof.singular_cells,
        total_cells: prof.total_cells,
        degenerate_params: prof.degenerate_params,
        warnings: prof.warnings,
    })
}

/// Max over the X grid of ||λ|·ω(λX; λμ) − ω(X; μ)|, with the second
/// transform binned on the scaled grid {λX_k}.
pub fn homogeneity_residual(
    source: Source<'_>,
    family: &LevelFamily,
    params: &[f64],
    lambda: f64,
    x_grid: &GridSpec,
) -> Result<f64> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("λ = {lambda}")));
    }
    if !family.is_homogeneous() {
        return Err(Error::InvalidParameter(
            "homogeneity needs parameters that enter linearly (hyperplane or deformed)".into(),
        ));
    }
    let a = *x_grid.axis(0);
    let (lo, hi) = if lambda > 0.0 { (lambda * a.min, lambda * a.max) } else { (lambda * a.max, lambda * a.min) };
    let scaled_grid = GridSpec::new(vec![crate::grid::Axis::new(lo, hi, a.count)?])?;
    let opts = ForwardOptions::default();
    let base = forward_points(source, family, &[params.to_vec()], x_grid, &opts)?;
    let scaled_params: Vec<f64> = params.iter().map(|m| m * lambda).collect();
    let scaled = forward_points(source, family, &[scaled_params], &scaled_grid, &opts)?;
    let n = a.count;
    let mut worst = 0.0f64;
    for k in 0..n {
        let k2 = if lambda > 0.0 { k } else { n - 1 - k };
        worst = worst.max((lambda.abs() * scaled.values[k2] - base.values[k]).abs());
    }
    Ok(worst)
}

/// A density pulled back through a deformation, f(q) = f̃(φ(q))·J(q).
#[derive(Debug, Clone)]
pub struct PullbackField {
    pub field: ScalarField,
    /// Grid points on the singular set; their value is 0.
    pub singular_points: usize,
}

pub fn pullback_density(target: &Phantom, diffeo: Diffeomorphism, q_grid: &GridSpec) -> Result<PullbackField> {
    let n = diffeo.ndim();
    if target.ndim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: target.ndim() });
    }
    if q_grid.ndim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: q_grid.ndim() });
    }
    let vals: Vec<(f64, bool)> = (0..q_grid.len())
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n]),
            |(q, x), i| {
                q_grid.point_into(i, q);
                if diffeo.is_singular(q) {
                    return (0.0, true);
                }
                diffeo.map(q, x);
                (target.density(x) * diffeo.jacobian(q), false)
            },
        )
        .collect();
    let singular_points = vals.iter().filter(|v| v.1).count();
    let field = ScalarField::new(q_grid.clone(), vals.into_iter().map(|v| v.0).collect())?;
    Ok(PullbackField { field, singular_points })
}

/// A one-dimensional normal distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normal1d {
    pub mean: f64,
    pub variance: f64,
}

impl Normal1d {
    pub fn pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        (-0.5 * d * d / self.variance).exp() / (2.0 * std::f64::consts::PI * self.variance).sqrt()
    }
}

/// Exact hyperplane tomogram of a Gaussian: X = μ·q is N(μ·m, μᵀΣμ).
pub fn gaussian_hyperplane_tomogram(mean: &[f64], covariance: &[f64], mu: &[f64]) -> Result<Normal1d> {
    let n = mean.len();
    if mu.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: mu.len() });
    }
    if covariance.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: covariance.len() });
    }
    if mu.iter().all(|m| *m == 0.0) {
        return Err(Error::InvalidParameter("μ = 0 does not define a hyperplane".into()));
    }
    // validates symmetry and positive definiteness
    Phantom::gaussian(mean.to_vec(), covariance.to_vec())?;
    let m = mean.iter().zip(mu).map(|(a, b)| a * b).sum();
    let mut v = 0.0;
    for i in 0..n {
        for j in 0..n {
            v += mu[i] * covariance[i * n + j] * mu[j];
        }
    }
    Ok(Normal1d { mean: m, variance: v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::QuadricForm;
    use crate::grid::{make_grid, total_mass};
    use crate::phantom::sample_phantom;
    use crate::tomogram::normalization_profile;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid2(lo: f64, hi: f64, n: usize) -> GridSpec {
        make_grid(2, &[(lo, hi, n), (lo, hi, n)]).unwrap()
    }

    fn xgrid(lo: f64, hi: f64, n: usize) -> GridSpec {
        make_grid(1, &[(lo, hi, n)]).unwrap()
    }

    #[test]
    fn bins_partition_the_range() {
        let b = XBins::new(&xgrid(-1.0, 1.0, 5)).unwrap();
        assert_eq!(b.edges(), &[-1.0, -0.75, -0.25, 0.25, 0.75, 1.0]);
        assert_eq!(b.index_of(-1.0), Some(0));
        assert_eq!(b.index_of(-0.75), Some(1));
        assert_eq!(b.index_of(0.7499), Some(3));
        assert_eq!(b.index_of(0.75), Some(4));
        assert_eq!(b.index_of(1.0), Some(4));
        assert_eq!(b.index_of(1.0 + 1e-12), None);
        assert_eq!(b.index_of(-1.5), None);
    }

    #[test]
    fn box_spline_deposit_conserves_mass() {
        let b = XBins::new(&xgrid(-1.0, 1.0, 21)).unwrap();
        let mut hist = vec![0.0; b.len()];
        let cases: &[(f64, &[f64])] = &[
            (0.03, &[0.2]),
            (0.5, &[0.3, 0.05]),
            (-0.95, &[0.4, 0.2, 0.1]),
            (0.9, &[1.0, 0.0, 1e-9]),
            (0.0, &[0.0, 0.0]),
            (3.0, &[0.1]),
        ];
        let mut out = 0.0;
        for &(c, w) in cases {
            out += b.deposit(&mut hist, c, w, 1.0);
        }
        let inside: f64 = hist.iter().sum();
        assert_relative_eq!(inside + out, cases.len() as f64, max_relative = 1e-14);
        assert!(hist.iter().all(|h| *h >= -1e-15));
    }

    #[test]
    fn box_spline_two_uniforms_is_a_trapezoid() {
        // widths 0.4 and 0.2 centered at 0: density 2.5 on [-0.1, 0.1]
        let b = XBins::new(&xgrid(-0.5, 0.5, 101)).unwrap();
        let mut hist = vec![0.0; b.len()];
        b.deposit(&mut hist, 0.0, &[0.4, 0.2], 1.0);
        let k = b.index_of(0.0).unwrap();
        assert_relative_eq!(hist[k] / b.widths()[k], 2.5, max_relative = 1e-10);
        let k = b.index_of(0.25).unwrap();
        // at 0.25 the density ramps: (0.3 - x) / (0.4*0.2)
        assert_relative_eq!(hist[k] / b.widths()[k], 0.05 / 0.08, max_relative = 1e-9);
    }

    #[test]
    fn gaussian_closed_form_tomograms() {
        let n = gaussian_hyperplane_tomogram(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert_eq!(n, Normal1d { mean: 0.0, variance: 1.0 });
        let n = gaussian_hyperplane_tomogram(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(n.variance, 2.0);
        assert_relative_eq!(n.pdf(1.0), (-0.25f64).exp() / (4.0 * PI).sqrt(), max_relative = 1e-14);
        assert!((n.pdf(1.0) - 0.21970).abs() < 1e-5);
        let n = gaussian_hyperplane_tomogram(&[3.0, 0.0], &[1.0, 0.0, 0.0, 1.0], &[2.0, 0.0]).unwrap();
        assert_eq!(n, Normal1d { mean: 6.0, variance: 4.0 });
        assert!(gaussian_hyperplane_tomogram(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn gaussian_hyperplane_forward() {
        let g = Phantom::standard_gaussian(2);
        let q = grid2(-6.0, 6.0, 256);
        let x = xgrid(-6.0, 6.0, 241);
        let prof = forward_points(
            Source::Phantom { phantom: &g, grid: &q },
            &LevelFamily::hyperplane(2),
            &[vec![1.0, 0.0]],
            &x,
            &ForwardOptions::default(),
        )
        .unwrap();
        let k0 = 120;
        assert_eq!(x.point(k0)[0], 0.0);
        assert!((prof.values[k0] - 0.39894).abs() < 2e-2);
        assert!((prof.values[k0] - 0.39894).abs() < 1e-3);
    }

    #[test]
    fn uniform_disk_chord_profile() {
        let b = Phantom::ball(vec![0.0, 0.0], 1.0).unwrap();
        let q = grid2(-1.2, 1.2, 481);
        let x = xgrid(-1.5, 1.5, 61);
        let prof = forward_points(
            Source::Phantom { phantom: &b, grid: &q },
            &LevelFamily::hyperplane(2),
            &[vec![1.0, 0.0]],
            &x,
            &ForwardOptions::default(),
        )
        .unwrap();
        let k0 = 30;
        assert!((prof.values[k0] - 2.0 / PI).abs() < 1e-2, "{}", prof.values[k0]);
        assert_eq!(prof.values[0], 0.0);
        let k = x.nearest_index(&[0.6]);
        assert!((prof.values[k] - 2.0 / PI * 0.8).abs() < 1e-2);
    }

    #[test]
    fn chi_square_quadric_profile() {
        let mean = vec![0.7, -0.4];
        let g = Phantom::gaussian(mean.clone(), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let q = grid2(-7.0, 7.0, 281);
        let x = xgrid(0.0, 20.0, 201);
        let fam = LevelFamily::quadric(QuadricForm::diagonal(&[1.0, 1.0]).unwrap()).unwrap();
        let prof = forward_points(Source::Phantom { phantom: &g, grid: &q }, &fam, &[mean], &x, &Default::default())
            .unwrap();
        assert!((prof.values[0] - 0.5).abs() < 1e-2, "{}", prof.values[0]);
        let k = x.nearest_index(&[2.0]);
        assert!((prof.values[k] - 0.5 * (-1.0f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn elliptic_quadric_vanishes_below_zero() {
        let g = Phantom::standard_gaussian(2);
        let q = grid2(-5.0, 5.0, 101);
        let x = xgrid(-2.0, 10.0, 121);
        let fam = LevelFamily::quadric(QuadricForm::diagonal(&[2.0, 0.5]).unwrap()).unwrap();
        let prof = forward_points(
            Source::Phantom { phantom: &g, grid: &q },
            &fam,
            &[vec![0.3, 0.1], vec![-1.0, 2.0]],
            &x,
            &Default::default(),
        )
        .unwrap();
        for p in 0..2 {
            let row = prof.row(p);
            for k in 0..x.len() {
                if x.point(k)[0] < 0.0 {
                    assert_eq!(row[k], 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_source_gives_zero_tomogram() {
        let q = grid2(-1.0, 1.0, 11);
        let zero = ScalarField::zeros(q);
        let x = xgrid(-2.0, 2.0, 41);
        let r = forward_binned(
            Source::Field(&zero),
            &LevelFamily::hyperplane(2),
            &grid2(-1.0, 1.0, 3),
            &x,
            &Default::default(),
        )
        .unwrap();
        assert!(r.tomogram.values().iter().all(|v| *v == 0.0));
        assert!(normalization_profile(&r.tomogram).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn half_mass_outside_range_goes_to_overflow() {
        let g = Phantom::standard_gaussian(2);
        let q = grid2(-6.0, 6.0, 121);
        let x = xgrid(0.0, 7.0, 141);
        let r = forward_binned(
            Source::Phantom { phantom: &g, grid: &q },
            &LevelFamily::hyperplane(2),
            &make_grid(2, &[(1.0, 2.0, 2), (0.0, 1.0, 2)]).unwrap(),
            &x,
            &Default::default(),
        )
        .unwrap();
        for (norm, over) in normalization_profile(&r.tomogram).iter().zip(&r.overflow) {
            assert!((norm - 0.5).abs() < 1e-3, "{norm}");
            assert!((over - 0.5).abs() < 1e-3);
        }
        assert!(matches!(r.warnings[0], ForwardWarning::Overflow { params: 4, .. }));
    }

    #[test]
    fn field_source_mass_accounting_is_exact() {
        let q = grid2(-3.0, 3.0, 61);
        let f = sample_phantom(&Phantom::standard_gaussian(2), &q).unwrap();
        let fam = LevelFamily::deformed(Diffeomorphism::ConformalInversion);
        let x = xgrid(-3.0, 3.0, 121);
        let r = forward_binned(Source::Field(&f), &fam, &grid2(-2.0, 2.0, 4), &x, &Default::default()).unwrap();
        let mass = total_mass(&f);
        // one grid point sits on the origin; the engine skips it
        assert_eq!(r.singular_cells, 1);
        let skipped = f.values()[f.grid().nearest_index(&[0.0, 0.0])] * f.grid().cell_volume();
        for (norm, over) in normalization_profile(&r.tomogram).iter().zip(&r.overflow) {
            assert_relative_eq!(norm + over, mass - skipped, max_relative = 1e-12);
        }
    }

    #[test]
    fn circle_params_at_origin_are_flagged() {
        let g = Phantom::standard_gaussian(2);
        let q = grid2(-3.0, 3.0, 30);
        let fam = LevelFamily::deformed(Diffeomorphism::ConformalInversion);
        let r = forward_binned(
            Source::Phantom { phantom: &g, grid: &q },
            &fam,
            &grid2(-1.0, 1.0, 3),
            &xgrid(-2.0, 2.0, 41),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.degenerate_params, vec![4]);
    }

    #[test]
    fn homogeneity_identity_and_reflection() {
        let g = Phantom::standard_gaussian(2);
        let q = grid2(-6.0, 6.0, 128);
        let src = Source::Phantom { phantom: &g, grid: &q };
        let x = xgrid(-6.0, 6.0, 121);
        let h = LevelFamily::hyperplane(2);
        assert_eq!(homogeneity_residual(src, &h, &[0.8, 0.6], 1.0, &x).unwrap(), 0.0);
        assert!(homogeneity_residual(src, &h, &[0.8, 0.6], -1.0, &x).unwrap() < 1e-10);
        assert!(homogeneity_residual(src, &h, &[0.8, 0.6], 2.0, &x).unwrap() < 1e-10);
        assert!(homogeneity_residual(src, &h, &[0.8, 0.6], 0.0, &x).is_err());
        let quad = LevelFamily::quadric(QuadricForm::diagonal(&[1.0, 1.0]).unwrap()).unwrap();
        assert!(homogeneity_residual(src, &quad, &[0.0, 0.0], 2.0, &x).is_err());
    }

    #[test]
    fn pullback_values() {
        let g = Phantom::standard_gaussian(2);
        let grid = make_grid(2, &[(-2.0, 2.0, 5), (-2.0, 2.0, 5)]).unwrap();
        let pb = pullback_density(&g, Diffeomorphism::ConformalInversion, &grid).unwrap();
        let v = pb.field.values()[grid.nearest_index(&[1.0, 0.0])];
        assert_relative_eq!(v, (-0.5f64).exp() / (2.0 * PI), max_relative = 1e-14);
        assert!((v - 0.09653).abs() < 1e-5);
        assert_eq!(pb.singular_points, 1);
        assert_eq!(pb.field.values()[grid.nearest_index(&[0.0, 0.0])], 0.0);

        let pb = pullback_density(&g, Diffeomorphism::AxisInversion, &grid).unwrap();
        let v = pb.field.values()[grid.nearest_index(&[2.0, 0.0])];
        assert_relative_eq!(v, 0.25 * (-0.125f64).exp() / (2.0 * PI), max_relative = 1e-14);
        assert!((v - 0.03511).abs() < 1e-5);
        assert_eq!(pb.singular_points, 5);

        let pb = pullback_density(&g, Diffeomorphism::Identity { ndim: 2 }, &grid).unwrap();
        assert_eq!(pb.field, sample_phantom(&g, &grid).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn mass_is_conserved_and_tomograms_nonnegative(
            which in 0usize..4,
            mu in prop::collection::vec(-2.0f64..2.0, 2),
            mean in prop::collection::vec(-1.0f64..1.0, 2),
            xlo in -4.0f64..-0.5,
            xhi in 0.5f64..4.0,
        ) {
            let q = grid2(-3.0, 3.0, 41);
            let src = Phantom::gaussian(mean, vec![1.0, 0.2, 0.2, 0.5]).unwrap();
            let f = sample_phantom(&src, &q).unwrap();
            let fam = match which {
                0 => LevelFamily::hyperplane(2),
                1 => LevelFamily::deformed(Diffeomorphism::AxisInversion),
                2 => LevelFamily::quadric(QuadricForm::diagonal(&[1.0, -0.5]).unwrap()).unwrap(),
                _ => LevelFamily::deformed(Diffeomorphism::ConformalInversion),
            };
            let x = xgrid(xlo, xhi, 57);
            let prof = forward_points(Source::Field(&f), &fam, &[mu], &x, &Default::default()).unwrap();
            let binned = crate::tomogram::trapezoid_1d(&x, &prof.values);
            prop_assert!((binned + prof.overflow[0] - prof.source_mass).abs() <= 1e-12 * prof.source_mass);
            if which == 0 || which == 2 {
                prop_assert!((prof.source_mass - total_mass(&f)).abs() <= 1e-12);
            } else {
                prop_assert!(prof.singular_cells > 0 && prof.source_mass < total_mass(&f));
            }
            prop_assert!(prof.values.iter().all(|v| *v >= 0.0));
        }
    }
}
