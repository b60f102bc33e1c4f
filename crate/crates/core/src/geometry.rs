//! Level-set families: hyperplanes, diffeomorphic deformations of hyperplanes,
//! and shifted quadric patterns.
//!
//! Each family is a function `g(q; params)`; a tomogram is the marginal of a
//! density along the level sets `g(q; params) = X`.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Built-in deformations of Rⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diffeomorphism {
    /// φ(q) = q. Reduces the deformed family to hyperplanes.
    Identity { ndim: usize },
    /// φ(q, p) = (q, p) / (q² + p²). Lines become circles through the origin.
    ConformalInversion,
    /// φ(q, p) = (1/q, p). Lines become hyperbolas with asymptote q = 0.
    AxisInversion,
    /// φ(q, p) = (q, q∘p) on R²ᵐ with coordinates (q₁..qₘ, p₁..pₘ).
    HyperboloidMap { pairs: usize },
}

impl Diffeomorphism {
    pub fn ndim(&self) -> usize {
        match *self {
            Diffeomorphism::Identity { ndim } => ndim,
            Diffeomorphism::ConformalInversion | Diffeomorphism::AxisInversion => 2,
            Diffeomorphism::HyperboloidMap { pairs } => 2 * pairs,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Diffeomorphism::Identity { .. } => "identity",
            Diffeomorphism::ConformalInversion => "circle",
            Diffeomorphism::AxisInversion => "hyperbola",
            Diffeomorphism::HyperboloidMap { .. } => "hyperboloid",
        }
    }

    pub fn is_singular(&self, q: &[f64]) -> bool {
        match *self {
            Diffeomorphism::Identity { .. } => false,
            Diffeomorphism::ConformalInversion => q[0] == 0.0 && q[1] == 0.0,
            Diffeomorphism::AxisInversion => q[0] == 0.0,
            Diffeomorphism::HyperboloidMap { pairs } => q[..pairs].contains(&0.0),
        }
    }

    /// Euclidean distance from `q` to the singular set (infinite if empty).
    pub fn singular_distance(&self, q: &[f64]) -> f64 {
        match *self {
            Diffeomorphism::Identity { .. } => f64::INFINITY,
            Diffeomorphism::ConformalInversion => q[0].hypot(q[1]),
            Diffeomorphism::AxisInversion => q[0].abs(),
            Diffeomorphism::HyperboloidMap { pairs } => {
                q[..pairs].iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
            }
        }
    }

    /// Writes φ(q) into `out`. `q` must be off the singular set.
    pub fn map(&self, q: &[f64], out: &mut [f64]) {
        match *self {
            Diffeomorphism::Identity { .. } => out.copy_from_slice(q),
            Diffeomorphism::ConformalInversion => {
                let r2 = q[0] * q[0] + q[1] * q[1];
                out[0] = q[0] / r2;
                out[1] = q[1] / r2;
            }
            Diffeomorphism::AxisInversion => {
                out[0] = 1.0 / q[0];
                out[1] = q[1];
            }
            Diffeomorphism::HyperboloidMap { pairs } => {
                for j in 0..pairs {
                    out[j] = q[j];
                    out[pairs + j] = q[j] * q[pairs + j];
                }
            }
        }
    }

    /// Writes φ⁻¹(x) into `out`. `x` must lie in the image of φ.
    pub fn inverse_map(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            // both inversions are involutions
            Diffeomorphism::Identity { .. } | Diffeomorphism::ConformalInversion | Diffeomorphism::AxisInversion => {
                self.map(x, out)
            }
            Diffeomorphism::HyperboloidMap { pairs } => {
                for j in 0..pairs {
                    out[j] = x[j];
                    out[pairs + j] = x[pairs + j] / x[j];
                }
            }
        }
    }

    /// Row-major derivative matrix ∂φᵢ/∂qⱼ.
    pub fn derivative(&self, q: &[f64], out: &mut [f64]) {
        let n = self.ndim();
        out[..n * n].iter_mut().for_each(|v| *v = 0.0);
        match *self {
            Diffeomorphism::Identity { .. } => {
                for i in 0..n {
                    out[i * n + i] = 1.0;
                }
            }
            Diffeomorphism::ConformalInversion => {
                let (x, y) = (q[0], q[1]);
                let r2 = x * x + y * y;
                let r4 = r2 * r2;
                out[0] = (y * y - x * x) / r4;
                out[1] = -2.0 * x * y / r4;
                out[2] = -2.0 * x * y / r4;
                out[3] = (x * x - y * y) / r4;
            }
            Diffeomorphism::AxisInversion => {
                out[0] = -1.0 / (q[0] * q[0]);
                out[3] = 1.0;
            }
            Diffeomorphism::HyperboloidMap { pairs } => {
                for j in 0..pairs {
                    out[j * n + j] = 1.0;
                    let row = (pairs + j) * n;
                    out[row + j] = q[pairs + j];
                    out[row + pairs + j] = q[j];
                }
            }
        }
    }

    /// Absolute Jacobian determinant |∂φ/∂q|.
    pub fn jacobian(&self, q: &[f64]) -> f64 {
        match *self {
            Diffeomorphism::Identity { .. } => 1.0,
            Diffeomorphism::ConformalInversion => {
                let r2 = q[0] * q[0] + q[1] * q[1];
                1.0 / (r2 * r2)
            }
            Diffeomorphism::AxisInversion => 1.0 / (q[0] * q[0]),
            Diffeomorphism::HyperboloidMap { pairs } => q[..pairs].iter().map(|x| x.abs()).product(),
        }
    }
}

/// Inertia of a symmetric matrix: counts of positive, negative and zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// Relative threshold below which an eigenvalue counts as zero.
pub const ZERO_EIGEN_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
struct Split {
    quad_axes: Vec<usize>,
    linear_axes: Vec<usize>,
    block: Vec<f64>,
    block_det: f64,
}

/// A symmetric matrix B defining the quadric pattern (q − μ, B(q − μ)).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadricForm {
    ndim: usize,
    matrix: Vec<f64>,
    eigenvalues: Vec<f64>,
    signature: Signature,
    split: Option<Split>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadricClass {
    /// Definite B: level sets are ellipsoids.
    Elliptic,
    /// Indefinite non-degenerate B: level sets are hyperboloids.
    Hyperbolic,
    /// Degenerate B: quadratic in some axes, linear in the rest.
    Hybrid,
}

fn signature_of(eigs: &[f64]) -> Signature {
    let scale = eigs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = ZERO_EIGEN_RTOL * scale;
    let mut s = Signature { positive: 0, negative: 0, zero: 0 };
    for &e in eigs {
        if e.abs() <= tol {
            s.zero += 1;
        } else if e > 0.0 {
            s.positive += 1;
        } else {
            s.negative += 1;
        }
    }
    s
}

fn sym_eigenvalues(n: usize, m: &[f64]) -> Vec<f64> {
    let mat = DMatrix::from_row_slice(n, n, m);
    let sym = (&mat + mat.transpose()) * 0.5;
    let mut e: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

impl QuadricForm {
    /// Builds a form from a row-major `ndim × ndim` matrix.
    pub fn new(ndim: usize, matrix: Vec<f64>) -> Result<Self> {
        if ndim == 0 {
            return Err(Error::InvalidParameter("quadric dimension must be positive".into()));
        }
        if matrix.len() != ndim * ndim {
            return Err(Error::DimensionMismatch { expected: ndim * ndim, found: matrix.len() });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadric matrix entry".into()));
        }
        let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut asym = 0.0f64;
        for i in 0..ndim {
            for j in 0..i {
                asym = asym.max((matrix[i * ndim + j] - matrix[j * ndim + i]).abs());
            }
        }
        if asym > 4.0 * f64::EPSILON * scale {
            return Err(Error::AsymmetricMatrix(asym));
        }
        let eigenvalues = sym_eigenvalues(ndim, &matrix);
        let signature = signature_of(&eigenvalues);
        Ok(QuadricForm { ndim, matrix, eigenvalues, signature, split: None })
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut m = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            m[i * n + i] = *d;
        }
        QuadricForm::new(n, m)
    }

    /// Declares which axes enter linearly in a hybrid transform.
    ///
    /// The rows and columns of B on the linear axes must vanish and the
    /// remaining block must be non-degenerate.
    pub fn with_split(mut self, linear_axes: &[usize]) -> Result<Self> {
        let n = self.ndim;
        let mut lin: Vec<usize> = linear_axes.to_vec();
        lin.sort_unstable();
        lin.dedup();
        if lin.is_empty() || lin.len() != linear_axes.len() || lin.len() >= n || lin.iter().any(|&a| a >= n) {
            return Err(Error::InvalidParameter(format!("bad linear axes {linear_axes:?} for ndim {n}")));
        }
        let scale = self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = ZERO_EIGEN_RTOL * scale;
        for &a in &lin {
            for j in 0..n {
                if self.matrix[a * n + j].abs() > tol || self.matrix[j * n + a].abs() > tol {
                    return Err(Error::InvalidParameter(format!(
                        "B couples linear axis {a} to axis {j}"
                    )));
                }
            }
        }
        let quad: Vec<usize> = (0..n).filter(|i| !lin.contains(i)).collect();
        let m = quad.len();
        let block: Vec<f64> = quad
            .iter()
            .flat_map(|&i| quad.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.matrix[i * n + j])
            .collect();
        let eigs = sym_eigenvalues(m, &block);
        if signature_of(&eigs).zero > 0 || eigs.iter().all(|e| *e == 0.0) {
            return Err(Error::InvalidParameter("quadratic block of B is degenerate".into()));
        }
        let block_det = eigs.iter().product();
        self.split = Some(Split { quad_axes: quad, linear_axes: lin, block, block_det });
        Ok(self)
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    /// Product of the non-zero eigenvalues (det B when non-degenerate).
    pub fn determinant(&self) -> f64 {
        let scale = self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.eigenvalues
            .iter()
            .filter(|e| e.abs() > ZERO_EIGEN_RTOL * scale)
            .product()
    }

    pub fn is_degenerate(&self) -> bool {
        self.signature.zero > 0
    }

    pub fn has_split(&self) -> bool {
        self.split.is_some()
    }

    /// Axes entering linearly, if a split was declared.
    pub fn linear_axes(&self) -> Option<&[usize]> {
        self.split.as_ref().map(|s| s.linear_axes.as_slice())
    }

    pub fn quadratic_axes(&self) -> Option<&[usize]> {
        self.split.as_ref().map(|s| s.quad_axes.as_slice())
    }

    /// Row-major B restricted to the quadratic axes.
    pub fn quadratic_block(&self) -> Option<&[f64]> {
        self.split.as_ref().map(|s| s.block.as_slice())
    }

    /// Determinant of the quadratic block of a split form.
    pub fn block_determinant(&self) -> Option<f64> {
        self.split.as_ref().map(|s| s.block_det)
    }

    /// (v, B v).
    pub fn quadratic(&self, v: &[f64]) -> f64 {
        let n = self.ndim;
        let mut s = 0.0;
        for i in 0..n {
            let row = &self.matrix[i * n..(i + 1) * n];
            s += v[i] * row.iter().zip(v).map(|(b, x)| b * x).sum::<f64>();
        }
        s
    }

    /// B v written into `out`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.ndim;
        for i in 0..n {
            out[i] = self.matrix[i * n..(i + 1) * n].iter().zip(v).map(|(b, x)| b * x).sum();
        }
    }
}

/// Classifies a quadric form by the signs of its eigenvalues.
///
/// Negative-definite forms are reported as elliptic (ellipsoids on X < 0).
pub fn classify_quadric(form: &QuadricForm) -> QuadricClass {
    let s = form.signature();
    if s.zero > 0 {
        QuadricClass::Hybrid
    } else if s.positive > 0 && s.negative > 0 {
        QuadricClass::Hyperbolic
    } else {
        QuadricClass::Elliptic
    }
}

/// Identifier of a family, as stored in tomogram files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u16)]
pub enum FamilyTag {
    Hyperplane = 0,
    Circle = 1,
    Hyperbola = 2,
    Hyperboloid = 3,
    Quadric = 4,
    Hybrid = 5,
}

impl FamilyTag {
    pub fn from_u16(v: u16) -> Option<Self> {
        Some(match v {
            0 => FamilyTag::Hyperplane,
            1 => FamilyTag::Circle,
            2 => FamilyTag::Hyperbola,
            3 => FamilyTag::Hyperboloid,
            4 => FamilyTag::Quadric,
            5 => FamilyTag::Hybrid,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            FamilyTag::Hyperplane => "hyperplane",
            FamilyTag::Circle => "circle",
            FamilyTag::Hyperbola => "hyperbola",
            FamilyTag::Hyperboloid => "hyperboloid",
            FamilyTag::Quadric => "quadric",
            FamilyTag::Hybrid => "hybrid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "hyperplane" => FamilyTag::Hyperplane,
            "circle" => FamilyTag::Circle,
            "hyperbola" => FamilyTag::Hyperbola,
            "hyperboloid" => FamilyTag::Hyperboloid,
            "quadric" => FamilyTag::Quadric,
            "hybrid" => FamilyTag::Hybrid,
            _ => return None,
        })
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A parameterized family of level functions g(q; params).
#[derive(Debug, Clone, PartialEq)]
pub enum LevelFamily {
    /// g(q; μ) = μ·q.
    Hyperplane { ndim: usize },
    /// g(q; μ) = μ·φ(q).
    Deformed(Diffeomorphism),
    /// g(q; μ) = (q − μ, B(q − μ)) with non-degenerate B.
    Quadric(QuadricForm),
    /// g(q; μ) = (q⊥ − μ⊥, B₂(q⊥ − μ⊥)) + μ_lin·q_lin.
    Hybrid(QuadricForm),
}

impl LevelFamily {
    pub fn hyperplane(ndim: usize) -> Self {
        LevelFamily::Hyperplane { ndim }
    }

    pub fn deformed(diffeo: Diffeomorphism) -> Self {
        LevelFamily::Deformed(diffeo)
    }

    /// Quadric family; rejects degenerate forms.
    pub fn quadric(form: QuadricForm) -> Result<Self> {
        if form.is_degenerate() {
            return Err(Error::DegenerateQuadric { zero: form.signature().zero });
        }
        Ok(LevelFamily::Quadric(form))
    }

    /// Hybrid family; the form must carry a split.
    pub fn hybrid(form: QuadricForm) -> Result<Self> {
        if !form.has_split() {
            return Err(Error::MissingSplit);
        }
        Ok(LevelFamily::Hybrid(form))
    }

    /// Builds a family from its name (`hyperplane`, `circle`, `hyperbola`,
    /// `hyperboloid`, `quadric`, `hybrid`) on Rⁿ. Quadric and hybrid need a
    /// row-major matrix; hybrid also needs the linear axes.
    pub fn from_name(name: &str, ndim: usize, matrix: Option<&[f64]>, split: Option<&[usize]>) -> Result<Self> {
        let tag = FamilyTag::parse(name).ok_or_else(|| Error::InvalidParameter(format!("unknown family {name:?}")))?;
        let needs_form = matches!(tag, FamilyTag::Quadric | FamilyTag::Hybrid);
        if !needs_form && matrix.is_some() {
            return Err(Error::InvalidParameter(format!("family {name} takes no matrix")));
        }
        if tag != FamilyTag::Hybrid && split.is_some() {
            return Err(Error::InvalidParameter(format!("family {name} takes no split")));
        }
        let fixed = |n: usize| {
            if ndim == n {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: n, found: ndim })
            }
        };
        match tag {
            FamilyTag::Hyperplane => Ok(LevelFamily::hyperplane(ndim)),
            FamilyTag::Circle => fixed(2).map(|_| LevelFamily::deformed(Diffeomorphism::ConformalInversion)),
            FamilyTag::Hyperbola => fixed(2).map(|_| LevelFamily::deformed(Diffeomorphism::AxisInversion)),
            FamilyTag::Hyperboloid => {
                if ndim == 0 || !ndim.is_multiple_of(2) {
                    return Err(Error::InvalidParameter(format!("hyperboloid family needs an even dimension, got {ndim}")));
                }
                Ok(LevelFamily::deformed(Diffeomorphism::HyperboloidMap { pairs: ndim / 2 }))
            }
            FamilyTag::Quadric | FamilyTag::Hybrid => {
                let m = matrix.ok_or_else(|| Error::InvalidParameter(format!("family {name} needs a matrix")))?;
                if m.len() != ndim * ndim {
                    return Err(Error::DimensionMismatch { expected: ndim * ndim, found: m.len() });
                }
                let form = QuadricForm::new(ndim, m.to_vec())?;
                if tag == FamilyTag::Quadric {
                    LevelFamily::quadric(form)
                } else {
                    LevelFamily::hybrid(form.with_split(split.ok_or(Error::MissingSplit)?)?)
                }
            }
        }
    }

    /// Dimension of the space q lives in.
    pub fn ndim(&self) -> usize {
        match self {
            LevelFamily::Hyperplane { ndim } => *ndim,
            LevelFamily::Deformed(d) => d.ndim(),
            LevelFamily::Quadric(b) | LevelFamily::Hybrid(b) => b.ndim(),
        }
    }

    /// Dimension of the parameter vector (equal to `ndim` for every family).
    pub fn param_dim(&self) -> usize {
        self.ndim()
    }

    pub fn tag(&self) -> FamilyTag {
        match self {
            LevelFamily::Hyperplane { .. } => FamilyTag::Hyperplane,
            LevelFamily::Deformed(d) => match d {
                Diffeomorphism::Identity { .. } => FamilyTag::Hyperplane,
                Diffeomorphism::ConformalInversion => FamilyTag::Circle,
                Diffeomorphism::AxisInversion => FamilyTag::Hyperbola,
                Diffeomorphism::HyperboloidMap { .. } => FamilyTag::Hyperboloid,
            },
            LevelFamily::Quadric(_) => FamilyTag::Quadric,
            LevelFamily::Hybrid(_) => FamilyTag::Hybrid,
        }
    }

    /// True when the parameters enter linearly, so ω(λX; λμ) = ω(X; μ)/|λ|.
    pub fn is_homogeneous(&self) -> bool {
        matches!(self, LevelFamily::Hyperplane { .. } | LevelFamily::Deformed(_))
    }

    pub fn diffeomorphism(&self) -> Option<Diffeomorphism> {
        match self {
            LevelFamily::Deformed(d) => Some(*d),
            LevelFamily::Hyperplane { ndim } => Some(Diffeomorphism::Identity { ndim: *ndim }),
            _ => None,
        }
    }

    pub fn is_singular(&self, q: &[f64]) -> bool {
        match self {
            LevelFamily::Deformed(d) => d.is_singular(q),
            _ => false,
        }
    }

    /// Parameter vectors for which the level function is constant in q.
    pub fn is_degenerate_param(&self, params: &[f64]) -> bool {
        match self {
            LevelFamily::Hyperplane { .. } | LevelFamily::Deformed(_) => params.iter().all(|&m| m == 0.0),
            _ => false,
        }
    }

    /// g(q; params) without dimension or singularity checks.
    pub fn eval_unchecked(&self, q: &[f64], params: &[f64]) -> f64 {
        match self {
            LevelFamily::Hyperplane { .. } => q.iter().zip(params).map(|(a, b)| a * b).sum(),
            LevelFamily::Deformed(d) => {
                let mut x = [0.0; 16];
                let n = d.ndim();
                if n <= 16 {
                    d.map(q, &mut x[..n]);
                    x[..n].iter().zip(params).map(|(a, b)| a * b).sum()
                } else {
                    let mut x = vec![0.0; n];
                    d.map(q, &mut x);
                    x.iter().zip(params).map(|(a, b)| a * b).sum()
                }
            }
            LevelFamily::Quadric(b) => {
                let v: Vec<f64> = q.iter().zip(params).map(|(a, m)| a - m).collect();
                b.quadratic(&v)
            }
            LevelFamily::Hybrid(b) => {
                let v: Vec<f64> = q.iter().zip(params).map(|(a, m)| a - m).collect();
                let lin = b.linear_axes().unwrap_or(&[]);
                // B vanishes on linear axes, so (v, Bv) only sees the quadratic block
                b.quadratic(&v) + lin.iter().map(|&a| params[a] * q[a]).sum::<f64>()
            }
        }
    }

    fn check_dims(&self, q: &[f64], params: &[f64]) -> Result<()> {
        let n = self.ndim();
        if q.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: q.len() });
        }
        if params.len() != self.param_dim() {
            return Err(Error::DimensionMismatch { expected: self.param_dim(), found: params.len() });
        }
        Ok(())
    }
}

/// g(q; params) for the family; rejects points on the singular set.
pub fn level_value(family: &LevelFamily, q: &[f64], params: &[f64]) -> Result<f64> {
    family.check_dims(q, params)?;
    if family.is_singular(q) {
        return Err(Error::SingularPoint);
    }
    Ok(family.eval_unchecked(q, params))
}

/// What a [`JacobianWeight`] value means for its family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// Hyperplanes: the weight is exactly 1.
    Unit,
    /// Deformed families: |∂φ/∂q|.
    Diffeomorphism,
    /// Quadric and hybrid families carry constant prefactors instead; value is 1.
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianWeight {
    pub value: f64,
    pub kind: WeightKind,
}

/// Jacobian weight J(q) entering the inversion kernel.
pub fn jacobian_weight(family: &LevelFamily, q: &[f64]) -> Result<JacobianWeight> {
    if q.len() != family.ndim() {
        return Err(Error::DimensionMismatch { expected: family.ndim(), found: q.len() });
    }
    if family.is_singular(q) {
        return Err(Error::SingularPoint);
    }
    Ok(match family {
        LevelFamily::Hyperplane { .. } => JacobianWeight { value: 1.0, kind: WeightKind::Unit },
        LevelFamily::Deformed(d) => JacobianWeight { value: d.jacobian(q), kind: WeightKind::Diffeomorphism },
        _ => JacobianWeight { value: 1.0, kind: WeightKind::NotApplicable },
    })
}

pub fn is_singular(family: &LevelFamily, q: &[f64]) -> bool {
    family.is_singular(q)
}

/// Geometry of a level set of the conformal-inversion family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CircleDescriptor {
    /// A circle through the origin.
    Circle { center: (f64, f64), radius: f64 },
    /// X = 0: the line μq + νp = 0 through the origin, with normal (μ, ν).
    Line { normal: (f64, f64) },
}

/// Level set X(q² + p²) − μq − νp = 0.
pub fn circle_descriptor(x: f64, mu: f64, nu: f64) -> Result<CircleDescriptor> {
    if mu == 0.0 && nu == 0.0 {
        return Err(Error::Degenerate("(μ, ν) = (0, 0) has no level set".into()));
    }
    if x == 0.0 {
        return Ok(CircleDescriptor::Line { normal: (mu, nu) });
    }
    Ok(CircleDescriptor::Circle {
        center: (mu / (2.0 * x), nu / (2.0 * x)),
        radius: mu.hypot(nu) / (2.0 * x.abs()),
    })
}

/// Quadrants occupied by hyperbola branches, in the frame centered on the
/// asymptote intersection (0, X/ν).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadrantClass {
    FirstThird,
    SecondFourth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HyperbolaDescriptor {
    /// Asymptotes q = 0 and p = `horizontal_asymptote`.
    Hyperbola { horizontal_asymptote: f64, quadrants: QuadrantClass },
    /// μ = 0: the line p = X/ν.
    HorizontalLine { p: f64 },
    /// ν = 0: the line q = μ/X.
    VerticalLine { q: f64 },
}

/// Level set X − μ/q − νp = 0 of the axis-inversion family.
///
/// In the asymptote frame (u, v) = (q, p − X/ν) the branches satisfy
/// uv = −μ/ν, so μν > 0 puts them in the second and fourth quadrants.
pub fn hyperbola_descriptor(x: f64, mu: f64, nu: f64) -> Result<HyperbolaDescriptor> {
    match (mu == 0.0, nu == 0.0) {
        (true, true) => {
            if x == 0.0 {
                Err(Error::Degenerate("μ = ν = X = 0: every point is on the level set".into()))
            } else {
                Err(Error::Degenerate("μ = ν = 0 with X ≠ 0: empty level set".into()))
            }
        }
        (true, false) => Ok(HyperbolaDescriptor::HorizontalLine { p: x / nu }),
        (false, true) => {
            if x == 0.0 {
                Err(Error::Degenerate("ν = X = 0: μ/q = 0 has no solution".into()))
            } else {
                Ok(HyperbolaDescriptor::VerticalLine { q: mu / x })
            }
        }
        (false, false) => Ok(HyperbolaDescriptor::Hyperbola {
            horizontal_asymptote: x / nu,
            quadrants: if mu * nu > 0.0 { QuadrantClass::SecondFourth } else { QuadrantClass::FirstThird },
        }),
    }
}
