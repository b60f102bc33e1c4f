//! C ABI for gentomo.
//!
//! Objects are opaque handles created by `gt_*_new`/`gt_*_load`-style
//! functions and released with the matching `gt_*_free`. Every fallible call
//! returns a [`GtStatus`]; on failure the message is available from
//! [`gt_last_error`] on the same thread until the next failing call.
//! Out-pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use gentomo::config::parse_phantom_config;
use gentomo::error::Error;
use gentomo::forward::{forward_binned, ForwardOptions, Source};
use gentomo::geometry::LevelFamily;
use gentomo::grid::{Axis, GridSpec, ScalarField};
use gentomo::inverse::{characteristic_slice, invert, InverseOptions};
use gentomo::io::{self, GtmFile};
use gentomo::phantom::{sample_phantom, Phantom};
use gentomo::tomogram::TomogramFamily;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGrid = 3,
    DimensionMismatch = 4,
    GridMismatch = 5,
    TagMismatch = 6,
    Singular = 7,
    Degenerate = 8,
    Format = 9,
    Io = 10,
    Panic = 11,
}

/// One uniform axis: `count` points from `min` to `max` inclusive.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Diagnostics of an inversion.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GtInverseDiagnostics {
    pub imag_residual_ratio: f64,
    pub boundary_decay: f64,
    /// 1 when `boundary_decay` exceeds the requested floor.
    pub decay_warning: i32,
    pub singular_points: usize,
}

/// Summary of a forward transform.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GtForwardSummary {
    pub source_mass: f64,
    pub max_overflow: f64,
    pub singular_cells: usize,
    pub total_cells: usize,
    pub degenerate_params: usize,
}

pub struct GtPhantom(Phantom);
pub struct GtFamily(LevelFamily);
pub struct GtField(ScalarField);
pub struct GtTomogram(TomogramFamily);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GtStatus {
    match e {
        Error::InvalidGrid(_) => GtStatus::InvalidGrid,
        Error::DimensionMismatch { .. } => GtStatus::DimensionMismatch,
        Error::GridMismatch => GtStatus::GridMismatch,
        Error::TagMismatch { .. } => GtStatus::TagMismatch,
        Error::SingularPoint => GtStatus::Singular,
        Error::Degenerate(_) | Error::DegenerateQuadric { .. } => GtStatus::Degenerate,
        Error::Format(_) => GtStatus::Format,
        Error::Io(_) => GtStatus::Io,
        _ => GtStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GtStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            GtStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            GtStatus::InvalidArgument
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            GtStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn opt_slice<'a, T>(p: *const T, len: usize) -> Option<&'a [T]> {
    (!p.is_null()).then(|| std::slice::from_raw_parts(p, len))
}

unsafe fn string<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Arg(format!("{what}: not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn grid(axes: *const GtAxis, ndim: usize) -> Result<GridSpec, Fail> {
    let axes = slice(axes, ndim, "axes")?;
    let axes = axes.iter().map(|a| Axis::new(a.min, a.max, a.count)).collect::<Result<Vec<_>, _>>()?;
    Ok(GridSpec::new(axes)?)
}

fn axis_of(g: &GridSpec, i: usize) -> Result<GtAxis, Fail> {
    if i >= g.ndim() {
        return Err(Fail::Arg(format!("axis {i} out of range (ndim {})", g.ndim())));
    }
    let a = g.axis(i);
    Ok(GtAxis { min: a.min, max: a.max, count: a.count })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Fail> {
    if len < src.len() {
        return Err(Fail::Arg(format!("buffer holds {len} values, need {}", src.len())));
    }
    if buf.is_null() {
        return Err(Fail::Null("buf"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Message of the last failure on this thread, or NULL. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn gt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- phantoms

/// Gaussian with a row-major `ndim`×`ndim` covariance; `cov` may be NULL for the identity.
///
/// # Safety
/// `mean` must hold `ndim` values, `cov` (if not NULL) `ndim*ndim`.
#[no_mangle]
pub unsafe extern "C" fn gt_phantom_gaussian(
    ndim: usize,
    mean: *const f64,
    cov: *const f64,
    out: *mut *mut GtPhantom,
) -> GtStatus {
    guard(|| {
        let mean = slice(mean, ndim, "mean")?.to_vec();
        let cov = match opt_slice(cov, ndim * ndim) {
            Some(c) => c.to_vec(),
            None => (0..ndim * ndim).map(|k| if k % (ndim + 1) == 0 { 1.0 } else { 0.0 }).collect(),
        };
        put(out, GtPhantom(Phantom::gaussian(mean, cov)?))
    })
}

/// Uniform ball.
///
/// # Safety
/// `center` must hold `ndim` values.
#[no_mangle]
pub unsafe extern "C" fn gt_phantom_ball(
    ndim: usize,
    center: *const f64,
    radius: f64,
    out: *mut *mut GtPhantom,
) -> GtStatus {
    guard(|| {
        let center = slice(center, ndim, "center")?.to_vec();
        put(out, GtPhantom(Phantom::ball(center, radius)?))
    })
}

/// Phantom from the text of a `key = value` description. Any grid in it is ignored.
///
/// # Safety
/// `text` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gt_phantom_parse(text: *const c_char, out: *mut *mut GtPhantom) -> GtStatus {
    guard(|| {
        let cfg = parse_phantom_config(string(text, "text")?)?;
        put(out, GtPhantom(cfg.phantom))
    })
}

/// # Safety
/// `p` must be NULL or a phantom handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gt_phantom_free(p: *mut GtPhantom) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live phantom handle.
#[no_mangle]
pub unsafe extern "C" fn gt_phantom_ndim(p: *const GtPhantom) -> usize {
    p.as_ref().map_or(0, |p| p.0.ndim())
}

/// Density at one point, or NaN on a NULL argument.
///
/// # Safety
/// `q` must hold `ndim` values of the phantom.
#[no_mangle]
pub unsafe extern "C" fn gt_phantom_density(p: *const GtPhantom, q: *const f64) -> f64 {
    match p.as_ref() {
        Some(p) if !q.is_null() => p.0.density(std::slice::from_raw_parts(q, p.0.ndim())),
        _ => f64::NAN,
    }
}

/// Samples the phantom at the nodes of a grid.
///
/// # Safety
/// `axes` must hold `ndim` entries.
#[no_mangle]
pub unsafe extern "C" fn gt_phantom_sample(
    p: *const GtPhantom,
    axes: *const GtAxis,
    ndim: usize,
    out: *mut *mut GtField,
) -> GtStatus {
    guard(|| {
        let p = get(p, "phantom")?;
        let g = grid(axes, ndim)?;
        put(out, GtField(sample_phantom(&p.0, &g)?))
    })
}

// ---- families

/// Family from its name (`hyperplane`, `circle`, `hyperbola`, `hyperboloid`,
/// `quadric`, `hybrid`). `matrix` (row-major `ndim*ndim`) is required for
/// quadric and hybrid and must be NULL otherwise; `split` lists the linear
/// axes of a hybrid form and must be NULL otherwise.
///
/// # Safety
/// `name` must be NUL-terminated; non-NULL arrays must hold the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn gt_family_new(
    name: *const c_char,
    ndim: usize,
    matrix: *const f64,
    matrix_len: usize,
    split: *const usize,
    split_len: usize,
    out: *mut *mut GtFamily,
) -> GtStatus {
    guard(|| {
        let name = string(name, "name")?;
        let fam = LevelFamily::from_name(name, ndim, opt_slice(matrix, matrix_len), opt_slice(split, split_len))?;
        put(out, GtFamily(fam))
    })
}

/// # Safety
/// `f` must be NULL or a family handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gt_family_free(f: *mut GtFamily) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Dimension of the parameter space (0 for NULL).
///
/// # Safety
/// `f` must be NULL or a live family handle.
#[no_mangle]
pub unsafe extern "C" fn gt_family_param_dim(f: *const GtFamily) -> usize {
    f.as_ref().map_or(0, |f| f.0.param_dim())
}

// ---- fields

/// Field from values in row-major order (last axis fastest).
///
/// # Safety
/// `axes` must hold `ndim` entries and `values` `len` values.
#[no_mangle]
pub unsafe extern "C" fn gt_field_new(
    axes: *const GtAxis,
    ndim: usize,
    values: *const f64,
    len: usize,
    out: *mut *mut GtField,
) -> GtStatus {
    guard(|| {
        let g = grid(axes, ndim)?;
        let v = slice(values, len, "values")?.to_vec();
        put(out, GtField(ScalarField::new(g, v)?))
    })
}

/// # Safety
/// `f` must be NULL or a field handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gt_field_free(f: *mut GtField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// `f` must be NULL or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn gt_field_ndim(f: *const GtField) -> usize {
    f.as_ref().map_or(0, |f| f.0.grid().ndim())
}

/// # Safety
/// `f` must be NULL or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn gt_field_len(f: *const GtField) -> usize {
    f.as_ref().map_or(0, |f| f.0.values().len())
}

/// # Safety
/// `f` must be a live field handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gt_field_axis(f: *const GtField, i: usize, out: *mut GtAxis) -> GtStatus {
    guard(|| {
        let a = axis_of(get(f, "field")?.0.grid(), i)?;
        *out.as_mut().ok_or(Fail::Null("out"))? = a;
        Ok(())
    })
}

/// Copies the values into `buf`, which must hold at least `gt_field_len` values.
///
/// # Safety
/// `buf` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn gt_field_values(f: *const GtField, buf: *mut f64, len: usize) -> GtStatus {
    guard(|| copy_out(get(f, "field")?.0.values(), buf, len))
}

/// # Safety
/// `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn gt_field_save(f: *const GtField, path: *const c_char) -> GtStatus {
    guard(|| Ok(io::save_field(Path::new(string(path, "path")?), &get(f, "field")?.0)?))
}

/// # Safety
/// `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn gt_field_load(path: *const c_char, out: *mut *mut GtField) -> GtStatus {
    guard(|| match io::load(Path::new(string(path, "path")?))? {
        GtmFile::Field(f) => put(out, GtField(f)),
        GtmFile::Tomogram(_) => {
            Err(Error::TagMismatch { expected: "field".into(), found: "tomogram".into() }.into())
        }
    })
}

// ---- tomograms

/// Tomograms of a sampled density over a parameter grid. `summary` may be NULL.
///
/// # Safety
/// `param_axes` must hold `param_ndim` entries and `x_axis` one.
#[no_mangle]
pub unsafe extern "C" fn gt_forward(
    field: *const GtField,
    family: *const GtFamily,
    param_axes: *const GtAxis,
    param_ndim: usize,
    x_axis: *const GtAxis,
    out: *mut *mut GtTomogram,
    summary: *mut GtForwardSummary,
) -> GtStatus {
    guard(|| {
        let field = get(field, "field")?;
        let family = get(family, "family")?;
        let params = grid(param_axes, param_ndim)?;
        let x = grid(x_axis, 1)?;
        let r = forward_binned(Source::Field(&field.0), &family.0, &params, &x, &ForwardOptions::default())?;
        if let Some(s) = summary.as_mut() {
            *s = GtForwardSummary {
                source_mass: r.source_mass,
                max_overflow: r.overflow.iter().copied().fold(0.0, f64::max),
                singular_cells: r.singular_cells,
                total_cells: r.total_cells,
                degenerate_params: r.degenerate_params.len(),
            };
        }
        put(out, GtTomogram(r.tomogram))
    })
}

/// # Safety
/// `t` must be NULL or a tomogram handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gt_tomogram_free(t: *mut GtTomogram) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of parameter points (0 for NULL).
///
/// # Safety
/// `t` must be NULL or a live tomogram handle.
#[no_mangle]
pub unsafe extern "C" fn gt_tomogram_n_params(t: *const GtTomogram) -> usize {
    t.as_ref().map_or(0, |t| t.0.n_params())
}

/// Number of X points per parameter point (0 for NULL).
///
/// # Safety
/// `t` must be NULL or a live tomogram handle.
#[no_mangle]
pub unsafe extern "C" fn gt_tomogram_n_x(t: *const GtTomogram) -> usize {
    t.as_ref().map_or(0, |t| t.0.n_x())
}

/// # Safety
/// `t` must be NULL or a live tomogram handle.
#[no_mangle]
pub unsafe extern "C" fn gt_tomogram_param_ndim(t: *const GtTomogram) -> usize {
    t.as_ref().map_or(0, |t| t.0.param_grid().ndim())
}

/// Axis `i` of the parameter grid.
///
/// # Safety
/// `t` must be a live tomogram handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gt_tomogram_param_axis(t: *const GtTomogram, i: usize, out: *mut GtAxis) -> GtStatus {
    guard(|| {
        let a = axis_of(get(t, "tomogram")?.0.param_grid(), i)?;
        *out.as_mut().ok_or(Fail::Null("out"))? = a;
        Ok(())
    })
}

/// # Safety
/// `t` must be a live tomogram handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gt_tomogram_x_axis(t: *const GtTomogram, out: *mut GtAxis) -> GtStatus {
    guard(|| {
        let a = axis_of(get(t, "tomogram")?.0.x_grid(), 0)?;
        *out.as_mut().ok_or(Fail::Null("out"))? = a;
        Ok(())
    })
}

/// Copies ω into `buf`, one row of `n_x` values per parameter point.
///
/// # Safety
/// `buf` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn gt_tomogram_values(t: *const GtTomogram, buf: *mut f64, len: usize) -> GtStatus {
    guard(|| copy_out(get(t, "tomogram")?.0.values(), buf, len))
}

/// # Safety
/// `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn gt_tomogram_save(t: *const GtTomogram, path: *const c_char) -> GtStatus {
    guard(|| Ok(io::save_tomogram(Path::new(string(path, "path")?), &get(t, "tomogram")?.0)?))
}

/// # Safety
/// `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn gt_tomogram_load(path: *const c_char, out: *mut *mut GtTomogram) -> GtStatus {
    guard(|| match io::load(Path::new(string(path, "path")?))? {
        GtmFile::Tomogram(t) => put(out, GtTomogram(t)),
        GtmFile::Field(_) => Err(Error::TagMismatch { expected: "tomogram".into(), found: "field".into() }.into()),
    })
}

// ---- inversion

/// Reconstructs the density on an output grid. `diagnostics` may be NULL.
/// A non-positive `decay_floor` selects the default.
///
/// # Safety
/// `out_axes` must hold `ndim` entries.
#[no_mangle]
pub unsafe extern "C" fn gt_invert(
    tomogram: *const GtTomogram,
    family: *const GtFamily,
    out_axes: *const GtAxis,
    ndim: usize,
    decay_floor: f64,
    taper: i32,
    out: *mut *mut GtField,
    diagnostics: *mut GtInverseDiagnostics,
) -> GtStatus {
    guard(|| {
        let t = get(tomogram, "tomogram")?;
        let family = get(family, "family")?;
        let g = grid(out_axes, ndim)?;
        let mut opts = InverseOptions { taper: taper != 0, ..Default::default() };
        if decay_floor > 0.0 {
            opts.decay_floor = decay_floor;
        }
        let rec = invert(&characteristic_slice(&t.0), &family.0, &g, &opts)?;
        if let Some(d) = diagnostics.as_mut() {
            let r = &rec.diagnostics;
            *d = GtInverseDiagnostics {
                imag_residual_ratio: r.imag_residual_ratio,
                boundary_decay: r.boundary_decay,
                decay_warning: r.decay_warning as i32,
                singular_points: r.singular_points,
            };
        }
        put(out, GtField(rec.field))
    })
}
