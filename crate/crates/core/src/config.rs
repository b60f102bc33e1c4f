//! Flat `key = value` phantom descriptions.
//!
//! ```text
//! # two-component mixture on a 256² grid
//! phantom = mixture
//! components = 2
//! weight.1 = 0.5
//! mean.1 = 2, 0
//! weight.2 = 0.5
//! mean.2 = -2, 0
//! q_box = -6, 6
//! q_count = 256
//! ```
//!
//! Kinds: `gaussian` (mean, cov), `mixture` (components, weight.i, mean.i,
//! cov.i), `ball` (center, radius), `box` (min, max). Covariances default to
//! the identity. `q_box` holds either one `lo, hi` pair for every axis or one
//! pair per axis; `q_count` one count or one per axis.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec};
use crate::phantom::Phantom;

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomConfig {
    pub phantom: Phantom,
    pub grid: Option<GridSpec>,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {key}", lineno + 1)));
        }
    }
    Ok(map)
}

/// Comma-separated reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|_| Error::Config(format!("not a number: {t:?}")))
        })
        .collect()
}

pub fn parse_counts(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<usize>().map_err(|_| Error::Config(format!("not a count: {t:?}")))
        })
        .collect()
}

/// Grid from a box (one `lo, hi` pair or one per axis) and counts (one or one per axis).
pub fn box_grid(ndim: usize, bounds: &[f64], counts: &[usize]) -> Result<GridSpec> {
    let pairs = match bounds.len() {
        2 => vec![(bounds[0], bounds[1]); ndim],
        n if n == 2 * ndim => bounds.chunks(2).map(|c| (c[0], c[1])).collect(),
        n => {
            return Err(Error::Config(format!("box needs 2 or {} values, got {n}", 2 * ndim)));
        }
    };
    let counts = match counts.len() {
        1 => vec![counts[0]; ndim],
        n if n == ndim => counts.to_vec(),
        n => return Err(Error::Config(format!("count needs 1 or {ndim} values, got {n}"))),
    };
    let axes = pairs.iter().zip(&counts).map(|(&(lo, hi), &c)| Axis::new(lo, hi, c)).collect::<Result<Vec<_>>>()?;
    GridSpec::new(axes)
}

struct Keys {
    map: BTreeMap<String, String>,
}

impl Keys {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<String> {
        self.take(key).ok_or_else(|| Error::Config(format!("missing key {key}")))
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.take(key).map(|v| parse_list(&v)).transpose()
    }

    fn real(&mut self, key: &str) -> Result<f64> {
        let v = parse_list(&self.require(key)?)?;
        match v.as_slice() {
            [x] => Ok(*x),
            _ => Err(Error::Config(format!("{key} must be a single number"))),
        }
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

pub fn parse_phantom_config(text: &str) -> Result<PhantomConfig> {
    let mut keys = Keys { map: parse_pairs(text)? };
    let kind = keys.require("phantom")?;
    let phantom = match kind.as_str() {
        "gaussian" => {
            let mean = keys.list("mean")?.ok_or_else(|| Error::Config("missing key mean".into()))?;
            let cov = keys.list("cov")?.unwrap_or_else(|| identity(mean.len()));
            Phantom::gaussian(mean, cov)?
        }
        "mixture" => {
            let k = keys.require("components")?;
            let k: usize = k.parse().map_err(|_| Error::Config(format!("components: not a count: {k:?}")))?;
            let mut comps = Vec::with_capacity(k);
            for i in 1..=k {
                let w = keys.real(&format!("weight.{i}"))?;
                let mean = keys.list(&format!("mean.{i}"))?.ok_or_else(|| Error::Config(format!("missing key mean.{i}")))?;
                let cov = keys.list(&format!("cov.{i}"))?.unwrap_or_else(|| identity(mean.len()));
                comps.push((w, mean, cov));
            }
            Phantom::mixture(comps)?
        }
        "ball" => {
            let center = keys.list("center")?.ok_or_else(|| Error::Config("missing key center".into()))?;
            Phantom::ball(center, keys.real("radius")?)?
        }
        "box" => {
            let min = keys.list("min")?.ok_or_else(|| Error::Config("missing key min".into()))?;
            let max = keys.list("max")?.ok_or_else(|| Error::Config("missing key max".into()))?;
            Phantom::uniform_box(min, max)?
        }
        other => return Err(Error::Config(format!("unknown phantom kind {other:?}"))),
    };
    let grid = match (keys.take("q_box"), keys.take("q_count")) {
        (Some(b), Some(c)) => Some(box_grid(phantom.ndim(), &parse_list(&b)?, &parse_counts(&c)?)?),
        (None, None) => None,
        _ => return Err(Error::Config("q_box and q_count go together".into())),
    };
    if let Some(k) = keys.map.keys().next() {
        return Err(Error::Config(format!("unknown key {k}")));
    }
    Ok(PhantomConfig { phantom, grid })
}
