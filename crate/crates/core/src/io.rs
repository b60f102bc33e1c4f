//! Binary grid files and text/image export.
//!
//! GTM: `"GTM1"`, u32 ndim, per axis (f64 min, f64 max, u32 count), then the
//! row-major f64 values. GTM-T: `"GTMT"`, u16 family tag, the parameter grid
//! header, the X grid header, then the values. Everything is little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::FamilyTag;
use crate::grid::{Axis, GridSpec, ScalarField};
use crate::tomogram::TomogramFamily;

pub const GTM_MAGIC: &[u8; 4] = b"GTM1";
pub const GTMT_MAGIC: &[u8; 4] = b"GTMT";

/// Contents of a GTM or GTM-T file.
#[derive(Debug, Clone, PartialEq)]
pub enum GtmFile {
    Field(ScalarField),
    Tomogram(TomogramFamily),
}

fn write_grid<W: Write>(w: &mut W, grid: &GridSpec) -> Result<()> {
    w.write_all(&(grid.ndim() as u32).to_le_bytes())?;
    for a in grid.axes() {
        w.write_all(&a.min.to_le_bytes())?;
        w.write_all(&a.max.to_le_bytes())?;
        let count = u32::try_from(a.count).map_err(|_| Error::Format("axis count exceeds u32".into()))?;
        w.write_all(&count.to_le_bytes())?;
    }
    Ok(())
}

fn write_values<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_field<W: Write>(w: &mut W, field: &ScalarField) -> Result<()> {
    w.write_all(GTM_MAGIC)?;
    write_grid(w, field.grid())?;
    write_values(w, field.values())
}

pub fn write_tomogram<W: Write>(w: &mut W, t: &TomogramFamily) -> Result<()> {
    w.write_all(GTMT_MAGIC)?;
    w.write_all(&(t.tag() as u16).to_le_bytes())?;
    write_grid(w, t.param_grid())?;
    write_grid(w, t.x_grid())?;
    write_values(w, t.values())
}

fn read_exact<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated file".into()),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

fn read_grid<R: Read>(r: &mut R) -> Result<GridSpec> {
    let ndim = u32::from_le_bytes(read_exact(r)?) as usize;
    if ndim == 0 || ndim > 64 {
        return Err(Error::Format(format!("implausible dimension {ndim}")));
    }
    let mut axes = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let min = f64::from_le_bytes(read_exact(r)?);
        let max = f64::from_le_bytes(read_exact(r)?);
        let count = u32::from_le_bytes(read_exact(r)?) as usize;
        axes.push(Axis::new(min, max, count).map_err(|e| Error::Format(e.to_string()))?);
    }
    GridSpec::new(axes)
}

fn read_values<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(Error::Format(format!("expected {} value bytes, found {}", len * 8, bytes.len())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

/// Reads either format, dispatching on the magic bytes.
pub fn read_gtm<R: Read>(r: &mut R) -> Result<GtmFile> {
    let magic: [u8; 4] = read_exact(r)?;
    match &magic {
        m if m == GTM_MAGIC => {
            let grid = read_grid(r)?;
            let values = read_values(r, grid.len())?;
            Ok(GtmFile::Field(ScalarField::new(grid, values).map_err(|e| Error::Format(e.to_string()))?))
        }
        m if m == GTMT_MAGIC => {
            let raw = u16::from_le_bytes(read_exact(r)?);
            let tag = FamilyTag::from_u16(raw).ok_or_else(|| Error::Format(format!("unknown family tag {raw}")))?;
            let param_grid = read_grid(r)?;
            let x_grid = read_grid(r)?;
            let values = read_values(r, param_grid.len() * x_grid.len())?;
            Ok(GtmFile::Tomogram(
                TomogramFamily::new(x_grid, param_grid, values, tag).map_err(|e| Error::Format(e.to_string()))?,
            ))
        }
        _ => Err(Error::Format("not a GTM file".into())),
    }
}

pub fn save_field(path: &Path, field: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn save_tomogram(path: &Path, t: &TomogramFamily) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tomogram(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<GtmFile> {
    read_gtm(&mut BufReader::new(File::open(path)?))
}

/// True when the file starts with one of the GTM magics.
pub fn is_gtm(path: &Path) -> Result<bool> {
    let mut head = [0u8; 4];
    let mut f = File::open(path)?;
    let n = f.read(&mut head)?;
    Ok(n == 4 && (&head == GTM_MAGIC || &head == GTMT_MAGIC))
}

/// Column names used by [`write_csv`] for the parameter axes of a family.
pub fn param_names(tag: FamilyTag, ndim: usize) -> Vec<String> {
    match (tag, ndim) {
        (FamilyTag::Hyperplane | FamilyTag::Circle | FamilyTag::Hyperbola, 2) => vec!["mu".into(), "nu".into()],
        _ => (1..=ndim).map(|i| format!("mu{i}")).collect(),
    }
}

/// One row per grid point: coordinates then value. Tomograms use the
/// columns (params…, X, omega).
pub fn write_csv<W: Write>(w: &mut W, file: &GtmFile) -> Result<()> {
    match file {
        GtmFile::Field(f) => {
            let n = f.grid().ndim();
            let mut header: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
            header.push("value".into());
            writeln!(w, "{}", header.join(","))?;
            let mut q = vec![0.0; n];
            for (i, v) in f.values().iter().enumerate() {
                f.grid().point_into(i, &mut q);
                for c in &q {
                    write!(w, "{c},")?;
                }
                writeln!(w, "{v}")?;
            }
        }
        GtmFile::Tomogram(t) => {
            let pg = t.param_grid();
            let mut header = param_names(t.tag(), pg.ndim());
            header.push("X".into());
            header.push("omega".into());
            writeln!(w, "{}", header.join(","))?;
            let xs = t.x_grid().axis(0).points();
            let mut mu = vec![0.0; pg.ndim()];
            for p in 0..t.n_params() {
                pg.point_into(p, &mut mu);
                let prefix: String = mu.iter().map(|m| format!("{m},")).collect();
                for (x, v) in xs.iter().zip(t.row(p)) {
                    writeln!(w, "{prefix}{x},{v}")?;
                }
            }
        }
    }
    Ok(())
}

/// Scaling applied by [`write_pgm`]: pixel = round(255·(v − min)/(max − min)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgmScale {
    pub min: f64,
    pub max: f64,
}

/// The data of a file as a field: tomograms become fields over (params…, X).
pub fn as_field(file: &GtmFile) -> Result<ScalarField> {
    match file {
        GtmFile::Field(f) => Ok(f.clone()),
        GtmFile::Tomogram(t) => {
            let mut axes = t.param_grid().axes().to_vec();
            axes.push(*t.x_grid().axis(0));
            ScalarField::new(GridSpec::new(axes)?, t.values().to_vec())
        }
    }
}

/// Fixes every axis after the first two at the given indices.
pub fn slice_field(field: &ScalarField, fixed: &[usize]) -> Result<ScalarField> {
    let g = field.grid();
    let n = g.ndim();
    if n < 2 || fixed.len() != n - 2 {
        return Err(Error::InvalidParameter(format!(
            "a {n}-dimensional field needs {} slice indices, got {}",
            n.saturating_sub(2),
            fixed.len()
        )));
    }
    for (k, &i) in fixed.iter().enumerate() {
        if i >= g.axis(k + 2).count {
            return Err(Error::InvalidParameter(format!("slice index {i} out of range for axis {}", k + 3)));
        }
    }
    let plane = GridSpec::new(vec![*g.axis(0), *g.axis(1)])?;
    let mut idx = vec![0usize; n];
    idx[2..].copy_from_slice(fixed);
    let mut values = Vec::with_capacity(plane.len());
    for i in 0..g.axis(0).count {
        for j in 0..g.axis(1).count {
            idx[0] = i;
            idx[1] = j;
            values.push(field.values()[g.ravel(&idx)]);
        }
    }
    ScalarField::new(plane, values)
}

/// Binary P5 image of a 2D field, one image row per index of the first axis.
/// A constant field maps to all zeros.
pub fn write_pgm<W: Write>(w: &mut W, field: &ScalarField) -> Result<PgmScale> {
    let g = field.grid();
    if g.ndim() != 2 {
        return Err(Error::InvalidParameter(format!(
            "PGM export needs a 2-dimensional field, got {} dimensions (use a slice)",
            g.ndim()
        )));
    }
    let (rows, cols) = (g.axis(0).count, g.axis(1).count);
    let (min, max) = field.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let span = max - min;
    write!(w, "P5\n{cols} {rows}\n255\n")?;
    let pixels: Vec<u8> = field
        .values()
        .iter()
        .map(|v| if span > 0.0 { (255.0 * (v - min) / span).round().clamp(0.0, 255.0) as u8 } else { 0 })
        .collect();
    w.write_all(&pixels)?;
    Ok(PgmScale { min, max })
}
