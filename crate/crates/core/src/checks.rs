//! Property suites run by `gentomo check`.

use std::fmt;

use crate::error::{Error, Result};
use crate::forward::{forward_points, homogeneity_residual, ForwardOptions, Source};
use crate::geometry::{Diffeomorphism, LevelFamily, QuadricForm};
use crate::grid::{make_grid, GridSpec};
use crate::oracle::{mc_tomogram, McSource};
use crate::phantom::Phantom;
use crate::tomogram::trapezoid_1d;

/// One line of a check report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl CheckLine {
    /// Passes when `measured ≤ bound`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        CheckLine { name: name.into(), measured, bound, pass: measured <= bound }
    }
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{:.6e}\t{:.6e}\t{}",
            self.name,
            self.measured,
            self.bound,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Normalization,
    Homogeneity,
    DiffeoEquivalence,
    QuadricSupport,
    OracleAgreement,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Suite> {
        Some(match s {
            "normalization" => Suite::Normalization,
            "homogeneity" => Suite::Homogeneity,
            "diffeo-equivalence" => Suite::DiffeoEquivalence,
            "quadric-support" => Suite::QuadricSupport,
            "oracle-agreement" => Suite::OracleAgreement,
            "all" => Suite::All,
            _ => return None,
        })
    }

    pub const NAMES: [&'static str; 6] =
        ["normalization", "homogeneity", "diffeo-equivalence", "quadric-support", "oracle-agreement", "all"];
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    /// Seed of the Monte-Carlo comparisons.
    pub seed: u64,
    /// Samples per Monte-Carlo histogram.
    pub samples: u64,
    /// Scale factors of the homogeneity suite.
    pub lambdas: Vec<f64>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { seed: 1, samples: 1_000_000, lambdas: vec![2.0, -1.0, 0.5] }
    }
}

pub fn run_suite(suite: Suite, opts: &CheckOptions) -> Result<Vec<CheckLine>> {
    match suite {
        Suite::Normalization => normalization(),
        Suite::Homogeneity => homogeneity(&opts.lambdas),
        Suite::DiffeoEquivalence => diffeo_equivalence(),
        Suite::QuadricSupport => quadric_support(),
        Suite::OracleAgreement => oracle_agreement(opts.seed, opts.samples),
        Suite::All => {
            let mut out = normalization()?;
            out.extend(homogeneity(&opts.lambdas)?);
            out.extend(diffeo_equivalence()?);
            out.extend(quadric_support()?);
            out.extend(oracle_agreement(opts.seed, opts.samples)?);
            Ok(out)
        }
    }
}

fn x_axis(lo: f64, hi: f64, n: usize) -> GridSpec {
    make_grid(1, &[(lo, hi, n)]).expect("static grid")
}

fn square(lo: f64, hi: f64, n: usize) -> GridSpec {
    GridSpec::cube(2, lo, hi, n).expect("static grid")
}

/// `count` unit vectors spread over the half circle.
pub fn unit_directions(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let t = std::f64::consts::PI * k as f64 / count as f64;
            vec![t.cos(), t.sin()]
        })
        .collect()
}

fn test_gaussian() -> Phantom {
    Phantom::gaussian(vec![0.5, -0.3], vec![1.0, 0.3, 0.3, 0.8]).expect("static phantom")
}

fn normalization() -> Result<Vec<CheckLine>> {
    let g = Phantom::standard_gaussian(2);
    let q = square(-6.0, 6.0, 256);
    let src = Source::Phantom { phantom: &g, grid: &q };
    let opts = ForwardOptions::default();
    let mut out = Vec::new();

    let x = x_axis(-6.0, 6.0, 241);
    let prof = forward_points(src, &LevelFamily::hyperplane(2), &unit_directions(8), &x, &opts)?;
    let dev = (0..8).map(|p| (trapezoid_1d(&x, prof.row(p)) - 1.0).abs()).fold(0.0, f64::max);
    out.push(CheckLine::at_most("normalization/hyperplane", dev, 1e-2));
    out.push(CheckLine::at_most("normalization/hyperplane-overflow", prof.overflow.iter().copied().fold(0.0, f64::max), 1e-3));

    let x = x_axis(0.0, 80.0, 801);
    let fam = LevelFamily::quadric(QuadricForm::diagonal(&[1.0, 1.0])?)?;
    let params = vec![vec![0.0, 0.0], vec![1.5, -2.0], vec![-3.0, 0.5]];
    let prof = forward_points(src, &fam, &params, &x, &opts)?;
    let dev = (0..params.len()).map(|p| (trapezoid_1d(&x, prof.row(p)) - 1.0).abs()).fold(0.0, f64::max);
    out.push(CheckLine::at_most("normalization/quadric", dev, 1e-2));
    Ok(out)
}

fn homogeneity(lambdas: &[f64]) -> Result<Vec<CheckLine>> {
    let g = test_gaussian();
    let q = square(-6.0, 6.0, 200);
    let src = Source::Phantom { phantom: &g, grid: &q };
    let x = x_axis(-8.0, 8.0, 161);
    let params = [vec![0.8, 0.6], vec![-0.3, 1.1]];
    let mut out = Vec::new();
    for (name, fam) in [
        ("hyperplane", LevelFamily::hyperplane(2)),
        ("circle", LevelFamily::deformed(Diffeomorphism::ConformalInversion)),
    ] {
        for &lambda in lambdas {
            let mut worst = 0.0f64;
            for p in &params {
                worst = worst.max(homogeneity_residual(src, &fam, p, lambda, &x)?);
            }
            out.push(CheckLine::at_most(format!("homogeneity/{name}/lambda={lambda}"), worst, 2e-2));
        }
    }
    Ok(out)
}

/// Largest L1 distance over X, across `directions`, between the deformed
/// tomograms of the pullback of `target` and its hyperplane tomograms.
pub fn diffeo_l1_gap(
    target: &Phantom,
    diffeo: Diffeomorphism,
    pullback_grid: &GridSpec,
    plain_grid: &GridSpec,
    directions: &[Vec<f64>],
    x: &GridSpec,
) -> Result<f64> {
    let opts = ForwardOptions::default();
    let deformed = forward_points(
        Source::Pullback { target, diffeo, grid: pullback_grid },
        &LevelFamily::deformed(diffeo),
        directions,
        x,
        &opts,
    )?;
    let plain =
        forward_points(Source::Phantom { phantom: target, grid: plain_grid }, &LevelFamily::hyperplane(2), directions, x, &opts)?;
    let mut worst = 0.0f64;
    for p in 0..directions.len() {
        let diff: Vec<f64> = deformed.row(p).iter().zip(plain.row(p)).map(|(a, b)| (a - b).abs()).collect();
        worst = worst.max(trapezoid_1d(x, &diff));
    }
    Ok(worst)
}

/// Source grids wide enough that the heavy tails of the pullbacks are mostly kept.
pub fn pullback_grid(diffeo: Diffeomorphism) -> GridSpec {
    match diffeo {
        Diffeomorphism::AxisInversion => {
            make_grid(2, &[(-60.0, 60.0, 6001), (-6.0, 6.0, 121)]).expect("static grid")
        }
        _ => square(-10.0, 10.0, 501),
    }
}

fn diffeo_equivalence() -> Result<Vec<CheckLine>> {
    let g = test_gaussian();
    let x = x_axis(-8.0, 8.0, 321);
    let dirs = unit_directions(8);
    let plain = square(-7.0, 7.0, 281);
    let mut out = Vec::new();
    for d in [Diffeomorphism::ConformalInversion, Diffeomorphism::AxisInversion] {
        let gap = diffeo_l1_gap(&g, d, &pullback_grid(d), &plain, &dirs, &x)?;
        out.push(CheckLine::at_most(format!("diffeo-equivalence/{}", d.name()), gap, 3e-2));
    }
    Ok(out)
}

fn quadric_support() -> Result<Vec<CheckLine>> {
    let g = test_gaussian();
    let q = square(-6.0, 6.0, 121);
    let src = Source::Phantom { phantom: &g, grid: &q };
    let x = x_axis(-20.0, 60.0, 321);
    let xs = x.axis(0).points();
    let params = vec![vec![0.0, 0.0], vec![0.5, -0.3], vec![2.0, 1.0]];
    let mut out = Vec::new();
    for (name, diag, negative_side) in [
        ("elliptic", [1.0, 1.0], true),
        ("elliptic-anisotropic", [2.0, 0.5], true),
        ("negative-definite", [-1.0, -0.5], false),
    ] {
        let fam = LevelFamily::quadric(QuadricForm::diagonal(&diag)?)?;
        let prof = forward_points(src, &fam, &params, &x, &ForwardOptions::default())?;
        let mut worst = 0.0f64;
        for p in 0..params.len() {
            for (v, xv) in prof.row(p).iter().zip(&xs) {
                if (negative_side && *xv < 0.0) || (!negative_side && *xv > 0.0) {
                    worst = worst.max(v.abs());
                }
            }
        }
        out.push(CheckLine::at_most(format!("quadric-support/{name}"), worst, 0.0));
    }
    Ok(out)
}

/// Absolute slack allowed for discretization when comparing with sampling.
pub const ORACLE_BINNING_TOL: f64 = 2e-3;

fn oracle_agreement(seed: u64, samples: u64) -> Result<Vec<CheckLine>> {
    let g = test_gaussian();
    let q = square(-6.0, 6.0, 241);
    let mut out = Vec::new();
    let cases: Vec<(&str, LevelFamily, Vec<f64>, GridSpec)> = vec![
        ("hyperplane", LevelFamily::hyperplane(2), vec![0.6, -0.8], x_axis(-5.0, 5.0, 41)),
        ("circle", LevelFamily::deformed(Diffeomorphism::ConformalInversion), vec![0.7, 0.4], x_axis(-3.0, 3.0, 41)),
        ("hyperbola", LevelFamily::deformed(Diffeomorphism::AxisInversion), vec![0.5, 1.0], x_axis(-4.0, 4.0, 41)),
        ("quadric-elliptic", LevelFamily::quadric(QuadricForm::diagonal(&[1.0, 1.0])?)?, vec![0.5, -0.3], x_axis(0.0, 12.0, 41)),
        (
            "quadric-hyperbolic",
            LevelFamily::quadric(QuadricForm::new(2, vec![1.0, 0.5, 0.5, -1.0])?)?,
            vec![0.3, 0.2],
            x_axis(-6.0, 6.0, 41),
        ),
    ];
    for (i, (name, fam, mu, x)) in cases.iter().enumerate() {
        let prof = forward_points(Source::Phantom { phantom: &g, grid: &q }, fam, std::slice::from_ref(mu), x, &ForwardOptions::default())?;
        let mc = mc_tomogram(McSource::Phantom(&g), fam, mu, x, samples, seed.wrapping_add(i as u64))?;
        out.push(CheckLine::at_most(
            format!("oracle-agreement/{name}"),
            mc.max_normalized_gap(&prof.values, 3.0, ORACLE_BINNING_TOL),
            1.0,
        ));
    }
    let g3 = Phantom::standard_gaussian(3);
    let q3 = GridSpec::cube(3, -5.0, 5.0, 61)?;
    let fam = LevelFamily::hybrid(QuadricForm::diagonal(&[1.0, 1.0, 0.0])?.with_split(&[2])?)?;
    let mu = vec![0.5, -0.5, 1.0];
    let x = x_axis(-6.0, 14.0, 41);
    let prof = forward_points(Source::Phantom { phantom: &g3, grid: &q3 }, &fam, std::slice::from_ref(&mu), &x, &ForwardOptions::default())?;
    let mc = mc_tomogram(McSource::Phantom(&g3), &fam, &mu, &x, samples, seed.wrapping_add(cases.len() as u64))?;
    out.push(CheckLine::at_most("oracle-agreement/hybrid", mc.max_normalized_gap(&prof.values, 3.0, ORACLE_BINNING_TOL), 1.0));
    Ok(out)
}

/// Parses a suite name, listing the valid ones on failure.
pub fn suite_from_name(name: &str) -> Result<Suite> {
    Suite::parse(name)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown suite {name:?} (expected one of {})", Suite::NAMES.join(", "))))
}
