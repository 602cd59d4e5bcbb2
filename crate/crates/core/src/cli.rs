//! Problem registry, run configuration and file output for the command-line
//! tool.
//!
//! Tables are written with one row per collocation pair, `m` outer and `n`
//! inner. Numbers use Rust's shortest round-trip decimal formatting, so every
//! value reads back bit-exactly and identical runs give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::brownian::{grid_count_for, PathEnsembleConfig};
use crate::error::{Error, Result};
use crate::montecarlo::{all_points, run_ensemble, summary_table, McSummary, PathFailure, TableRow};
use crate::svie_solver::ProblemSpec;

pub const REGISTRY: &[&str] = &["paper-example", "det-xy", "zero-kernel"];

/// Source term of the reference example.
pub fn paper_source(x: f64, y: f64) -> f64 {
    x + y - x * y * (x.powi(3) + 4.0 * x * x * y + 4.0 * x * y * y + y.powi(3)) / 12.0
}

pub fn registry_lookup(name: &str) -> Result<ProblemSpec> {
    match name {
        "paper-example" => Ok(ProblemSpec::new(
            name,
            paper_source,
            |x, y, s, t| x + y + t - s,
            Some(Arc::new(|x, y, s, t| x + y + t + s)),
        )),
        // u(x, y) = xy solves g = f + ∫∫ g ds dt with this f.
        "det-xy" => Ok(ProblemSpec::new(
            name,
            |x, y| x * y - x * x * y * y / 4.0,
            |_, _, _, _| 1.0,
            None,
        )),
        "zero-kernel" => Ok(ProblemSpec::new(
            name,
            paper_source,
            |_, _, _, _| 0.0,
            Some(Arc::new(|_, _, _, _| 0.0)),
        )),
        other => Err(Error::Config(format!(
            "unknown problem '{other}'; registered: {}",
            REGISTRY.join(", ")
        ))),
    }
}

/// Reference means and confidence bands reported for the example problem:
/// `(level, x, y, mean, low, high)`.
pub const TABLE1_REFERENCE: &[(u32, f64, f64, f64, f64, f64)] = &[
    (0, 0.25, 0.75, 1.9951, 1.9951, 1.9951),
    (1, 0.125, 0.375, 1.06717, 1.06715, 1.06719),
    (1, 0.375, 0.875, 2.43481, 2.43194, 2.43769),
    (1, 0.625, 0.875, 2.72591, 2.72036, 2.73147),
    (2, 0.0625, 0.4375, 1.0498, 1.0498, 1.04981),
    (2, 0.3125, 0.6875, 2.15292, 2.15266, 2.15318),
    (2, 0.8125, 0.9375, 2.68057, 2.67707, 2.68407),
    (3, 0.03125, 0.71875, 1.51492, 1.51488, 1.51495),
    (3, 0.40625, 0.53125, 2.25846, 2.25532, 2.26159),
    (3, 0.78125, 0.96875, 2.67147, 2.67139, 2.67156),
    (4, 0.015625, 0.609375, 1.26132, 1.26129, 1.26135),
    (4, 0.296875, 0.796875, 2.25999, 2.25891, 2.26107),
    (4, 0.859375, 0.984375, 2.58876, 2.58870, 2.58881),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Stochastic,
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: String,
    pub level: u32,
    pub paths: usize,
    pub seed: u64,
    pub confidence: f64,
    pub mode: Mode,
    pub output: PathBuf,
    pub format: Format,
    pub grid_out: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths < 1 {
            return Err(Error::Config("--paths must be at least 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Config(format!("--confidence {} outside (0, 1)", self.confidence)));
        }
        if self.level > 6 {
            return Err(Error::Config(format!(
                "--level {} would need a {n}x{n} dense system; the supported maximum is 6",
                self.level,
                n = 4usize << (2 * self.level)
            )));
        }
        Ok(())
    }
}

/// Result of a completed [`run`].
#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: McSummary,
    pub rows: Vec<TableRow>,
}

/// Solves the configured ensemble without writing anything.
pub fn solve(config: &RunConfig) -> Result<McSummary> {
    config.validate()?;
    let mut problem = registry_lookup(&config.problem)?;
    if config.mode == Mode::Deterministic {
        problem = problem.deterministic();
    }
    let ensemble = PathEnsembleConfig::new(
        config.paths,
        config.seed,
        grid_count_for(config.level, config.level, 1),
    )?;
    run_ensemble(&problem, config.level, &ensemble, config.confidence)
}

pub fn run(config: &RunConfig) -> Result<RunReport> {
    let summary = solve(config)?;
    let rows = summary_table(&summary, &all_points(config.level))?;
    write_table(&config.output, config.format, &rows, &metadata(config, &summary))?;
    if let Some(grid) = &config.grid_out {
        write_surface(grid, &rows)?;
    }
    Ok(RunReport { summary, rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata<'a> {
    pub config: &'a RunConfig,
    pub version: &'static str,
    pub z: f64,
    pub r_effective: usize,
    pub failures: &'a [PathFailure],
}

pub fn metadata<'a>(config: &'a RunConfig, summary: &'a McSummary) -> Metadata<'a> {
    Metadata {
        config,
        version: env!("CARGO_PKG_VERSION"),
        z: summary.z,
        r_effective: summary.r_effective,
        failures: &summary.failures,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_rows_csv<W: Write>(mut out: W, rows: &[TableRow]) -> Result<()> {
    writeln!(out, "J,M,2M,x,y,mean,ci_low,ci_high")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.level, r.half, r.points, r.x, r.y, r.mean, r.ci_low, r.ci_high
        )?;
    }
    Ok(())
}

pub fn write_rows_json<W: Write>(mut out: W, rows: &[TableRow], meta: &Metadata<'_>) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a> {
        metadata: &'a Metadata<'a>,
        rows: &'a [TableRow],
    }
    serde_json::to_writer_pretty(&mut out, &Doc { metadata: meta, rows })
        .map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

pub fn write_table(path: &Path, format: Format, rows: &[TableRow], meta: &Metadata<'_>) -> Result<()> {
    let mut out = create(path)?;
    match format {
        Format::Csv => write_rows_csv(&mut out, rows)?,
        Format::Json => write_rows_json(&mut out, rows, meta)?,
    }
    out.flush()?;
    Ok(())
}

/// Long-format `x,y,mean` surface, one line per collocation pair.
pub fn write_surface(path: &Path, rows: &[TableRow]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "x,y,mean")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.x, r.y, r.mean)?;
    }
    out.flush()?;
    Ok(())
}

/// One comparison line between a computed row and the reference table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    #[serde(flatten)]
    pub row: TableRow,
    pub reference_mean: f64,
    pub reference_low: f64,
    pub reference_high: f64,
}

/// Runs the example problem at every level of the reference table and
/// reports the computed rows beside the reference values.
pub fn reproduce_table1(paths: usize, seed: u64, confidence: f64, max_level: u32) -> Result<Vec<ReferenceRow>> {
    let problem = registry_lookup("paper-example")?;
    let mut out = Vec::new();
    for level in 0..=max_level {
        let refs: Vec<_> = TABLE1_REFERENCE.iter().filter(|r| r.0 == level).collect();
        if refs.is_empty() {
            continue;
        }
        let ensemble = PathEnsembleConfig::new(paths, seed, grid_count_for(level, level, 1))?;
        let summary = run_ensemble(&problem, level, &ensemble, confidence)?;
        let points: Vec<(f64, f64)> = refs.iter().map(|r| (r.1, r.2)).collect();
        let rows = summary_table(&summary, &points)?;
        out.extend(rows.into_iter().zip(refs).map(|(row, r)| ReferenceRow {
            row,
            reference_mean: r.3,
            reference_low: r.4,
            reference_high: r.5,
        }));
    }
    Ok(out)
}

pub fn write_reference_csv<W: Write>(mut out: W, rows: &[ReferenceRow]) -> Result<()> {
    writeln!(out, "J,M,2M,x,y,mean,ci_low,ci_high,ref_mean,ref_low,ref_high")?;
    for r in rows {
        let t = &r.row;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            t.level, t.half, t.points, t.x, t.y, t.mean, t.ci_low, t.ci_high,
            r.reference_mean, r.reference_low, r.reference_high
        )?;
    }
    Ok(())
}

/// Process exit status for an error: 2 config, 3 numerical, 4 I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 4,
        Error::Ensemble(_) | Error::Singular { .. } | Error::Residual { .. } | Error::Assembly { .. } => 3,
        Error::Config(_) | Error::Domain(_) | Error::Shape { .. } | Error::OffGrid { .. } => 2,
    }
}
