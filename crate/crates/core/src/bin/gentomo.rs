use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gentomo::checks::{run_suite, suite_from_name, CheckOptions};
use gentomo::config::{box_grid, parse_counts, parse_list, parse_phantom_config};
use gentomo::error::{Error, Result};
use gentomo::forward::{forward_binned, ForwardOptions, ForwardWarning, Source, XBins};
use gentomo::geometry::{classify_quadric, LevelFamily, QuadricClass};
use gentomo::grid::{make_grid, total_mass, GridSpec};
use gentomo::inverse::{characteristic_slice, invert, InverseOptions};
use gentomo::io::{self, GtmFile};
use gentomo::phantom::sample_phantom;
use gentomo::tomogram::normalization_profile;

/// Generalized tomographic maps: phantoms, forward transforms, inversion and checks.
#[derive(Parser)]
#[command(name = "gentomo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a phantom described by a config file onto a grid.
    Phantom {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides q_box from the config.
        #[arg(long = "q-box", allow_hyphen_values = true)]
        q_box: Option<String>,
        #[arg(long = "q-count")]
        q_count: Option<String>,
    },
    /// Tomograms of a field (GTM file) or a phantom (config file).
    Forward {
        input: PathBuf,
        #[arg(long)]
        family: String,
        /// Row-major quadric matrix.
        #[arg(long = "B", allow_hyphen_values = true)]
        b: Option<String>,
        /// Linear axes of a hybrid form (0-based).
        #[arg(long)]
        split: Option<String>,
        #[arg(long = "mu-box", allow_hyphen_values = true)]
        mu_box: String,
        #[arg(long = "mu-count")]
        mu_count: String,
        #[arg(long = "x-range", allow_hyphen_values = true)]
        x_range: String,
        #[arg(long = "x-count")]
        x_count: usize,
        /// Source grid for phantom configs without one.
        #[arg(long = "q-box", allow_hyphen_values = true)]
        q_box: Option<String>,
        #[arg(long = "q-count")]
        q_count: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct a density from a tomogram file.
    Invert {
        input: PathBuf,
        #[arg(long)]
        family: String,
        #[arg(long = "B", allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long)]
        split: Option<String>,
        /// Output grid.
        #[arg(long = "q-box", allow_hyphen_values = true)]
        q_box: String,
        #[arg(long = "q-count")]
        q_count: String,
        #[arg(long = "decay-floor", default_value_t = 1e-4)]
        decay_floor: f64,
        #[arg(long)]
        taper: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a property suite and print one line per check.
    Check {
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Scale factors for the homogeneity suite.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
    },
    /// Write a GTM/GTM-T file as CSV or PGM.
    Export {
        input: PathBuf,
        #[arg(long)]
        format: String,
        #[arg(long)]
        out: PathBuf,
        /// Indices fixing the axes after the first two (PGM of 3D+ data).
        #[arg(long)]
        slice: Option<String>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 4,
        Error::TagMismatch { .. } | Error::GridMismatch | Error::DimensionMismatch { .. } => 3,
        _ => 2,
    }
}

fn warn(msg: impl AsRef<str>) {
    eprintln!("warning: {}", msg.as_ref());
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("GENTOMO_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| Error::Config(format!("GENTOMO_THREADS: not a count: {v:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn parse_family(name: &str, ndim: usize, b: Option<&str>, split: Option<&str>) -> Result<LevelFamily> {
    let matrix = b.map(parse_list).transpose()?;
    let split = split.map(parse_counts).transpose()?;
    LevelFamily::from_name(name, ndim, matrix.as_deref(), split.as_deref())
}

fn flag_grid(ndim: usize, bounds: &str, counts: &str) -> Result<GridSpec> {
    box_grid(ndim, &parse_list(bounds)?, &parse_counts(counts)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Phantom { config, out, q_box, q_count } => {
            let cfg = parse_phantom_config(&fs::read_to_string(&config)?)?;
            let grid = match (q_box, q_count, cfg.grid) {
                (Some(b), Some(c), _) => flag_grid(cfg.phantom.ndim(), &b, &c)?,
                (None, None, Some(g)) => g,
                (None, None, None) => return Err(Error::Config("no grid: set q_box/q_count".into())),
                _ => return Err(Error::Config("--q-box and --q-count go together".into())),
            };
            let field = sample_phantom(&cfg.phantom, &grid)?;
            io::save_field(&out, &field)?;
            println!("total mass {:.9e}", total_mass(&field));
        }
        Command::Forward { input, family, b, split, mu_box, mu_count, x_range, x_count, q_box, q_count, out } => {
            let x = parse_list(&x_range)?;
            if x.len() != 2 {
                return Err(Error::Config("--x-range needs lo,hi".into()));
            }
            let x_grid = make_grid(1, &[(x[0], x[1], x_count)])?;
            let loaded;
            let cfg;
            let q_grid;
            let source = if io::is_gtm(&input)? {
                loaded = match io::load(&input)? {
                    GtmFile::Field(f) => f,
                    GtmFile::Tomogram(_) => {
                        return Err(Error::TagMismatch { expected: "field".into(), found: "tomogram".into() })
                    }
                };
                Source::Field(&loaded)
            } else {
                cfg = parse_phantom_config(&fs::read_to_string(&input)?)?;
                q_grid = match (q_box, q_count, &cfg.grid) {
                    (Some(b), Some(c), _) => flag_grid(cfg.phantom.ndim(), &b, &c)?,
                    (None, None, Some(g)) => g.clone(),
                    _ => return Err(Error::Config("phantom input needs a source grid (--q-box and --q-count)".into())),
                };
                Source::Phantom { phantom: &cfg.phantom, grid: &q_grid }
            };
            let fam = parse_family(&family, source.ndim(), b.as_deref(), split.as_deref())?;
            let param_grid = flag_grid(fam.param_dim(), &mu_box, &mu_count)?;
            let result = forward_binned(source, &fam, &param_grid, &x_grid, &ForwardOptions::default())?;
            io::save_tomogram(&out, &result.tomogram)?;

            let norms = normalization_profile(&result.tomogram);
            let (lo, hi) = norms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            println!("source mass {:.6e}", result.source_mass);
            println!("normalization min {lo:.6e} max {hi:.6e}");
            println!("overflow max {:.6e}", result.overflow.iter().copied().fold(0.0, f64::max));
            if let LevelFamily::Quadric(form) = &fam {
                if classify_quadric(form) == QuadricClass::Elliptic {
                    let positive = form.eigenvalues().iter().all(|e| *e > 0.0);
                    // only bins lying wholly on the forbidden side of 0
                    let bins = XBins::new(&x_grid)?;
                    let e = bins.edges();
                    let mut worst = 0.0f64;
                    for p in 0..result.tomogram.n_params() {
                        for (k, v) in result.tomogram.row(p).iter().enumerate() {
                            if (positive && e[k + 1] <= 0.0) || (!positive && e[k] >= 0.0) {
                                worst = worst.max(v.abs());
                            }
                        }
                    }
                    let side = if positive { "X<0" } else { "X>0" };
                    println!("support max omega at {side} {worst:.6e}");
                }
            }
            for w in &result.warnings {
                match w {
                    ForwardWarning::Overflow { params, max_fraction } => warn(format!(
                        "{params} parameter points lose more than 1% of their mass outside the X range (worst {max_fraction:.3e})"
                    )),
                    ForwardWarning::DegenerateParams { .. } => {
                        let rows: Vec<String> = result
                            .degenerate_params
                            .iter()
                            .map(|&p| format!("{:?}", param_grid.point(p)))
                            .collect();
                        warn(format!("degenerate parameter rows (level function constant): {}", rows.join(" ")));
                    }
                }
            }
            if result.singular_fraction() > 0.05 {
                warn(format!(
                    "{:.1}% of source cells lie on the singular set and were skipped",
                    100.0 * result.singular_fraction()
                ));
            }
        }
        Command::Invert { input, family, b, split, q_box, q_count, decay_floor, taper, out } => {
            let t = match io::load(&input)? {
                GtmFile::Tomogram(t) => t,
                GtmFile::Field(_) => {
                    return Err(Error::TagMismatch { expected: "tomogram".into(), found: "field".into() })
                }
            };
            let ndim = t.param_grid().ndim();
            let fam = parse_family(&family, ndim, b.as_deref(), split.as_deref())?;
            if fam.tag() != t.tag() {
                return Err(Error::TagMismatch { expected: fam.tag().name().into(), found: t.tag().name().into() });
            }
            let out_grid = flag_grid(ndim, &q_box, &q_count)?;
            let slice = characteristic_slice(&t);
            let opts = InverseOptions { decay_floor, taper };
            let rec = invert(&slice, &fam, &out_grid, &opts)?;
            io::save_field(&out, &rec.field)?;
            let d = rec.diagnostics;
            println!("imaginary residual ratio {:.6e}", d.imag_residual_ratio);
            println!("boundary decay {:.6e}", d.boundary_decay);
            if d.singular_points > 0 {
                println!("singular output points {}", d.singular_points);
            }
            let peak = rec.field.values()[rec.field.max_index()];
            println!("peak {peak:.6e} at {:?}", out_grid.point(rec.field.max_index()));
            if d.decay_warning {
                warn(format!(
                    "|characteristic| at the parameter box boundary is {:.3e} of its peak (floor {decay_floor:.1e}); widen the box",
                    d.boundary_decay
                ));
            }
        }
        Command::Check { suite, seed, samples, lambda } => {
            let suite = suite_from_name(&suite)?;
            let mut opts = CheckOptions { seed, samples, ..Default::default() };
            if let Some(l) = lambda {
                opts.lambdas = parse_list(&l)?;
            }
            let lines = run_suite(suite, &opts)?;
            let mut all = true;
            for l in &lines {
                println!("{l}");
                all &= l.pass;
            }
            if !all {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Export { input, format, out, slice } => {
            let file = io::load(&input)?;
            match format.as_str() {
                "csv" => {
                    let mut w = BufWriter::new(File::create(&out)?);
                    io::write_csv(&mut w, &file)?;
                    w.flush()?;
                }
                "pgm" => {
                    let mut field = io::as_field(&file)?;
                    if let Some(s) = slice {
                        field = io::slice_field(&field, &parse_counts(&s)?)?;
                    }
                    let mut buf = Vec::new();
                    let scale = io::write_pgm(&mut buf, &field)?;
                    write_file(&out, &buf)?;
                    println!("scale min {:.6e} max {:.6e}", scale.min, scale.max);
                }
                other => return Err(Error::Config(format!("unknown format {other:?} (csv or pgm)"))),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match configure_threads().and_then(|_| run(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
