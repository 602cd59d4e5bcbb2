//! Monte Carlo ensembles of path solves and their per-point statistics.
//!
//! Paths are solved in parallel but reduced sequentially in path-index order,
//! so a summary depends only on its inputs and never on the thread count.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::brownian::{simulate_path, PathEnsembleConfig};
use crate::error::{Error, Result};
use crate::haar_basis::{collocation_grid, CollocationGrid};
use crate::linalg::Matrix;
use crate::svie_solver::{solve_dense, Assembler, ProblemSpec};

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Kahan–Babuška compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Two-sided standard-normal quantile for a confidence level in `(0, 1)`.
pub fn z_value(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Config(format!("confidence {confidence} outside (0, 1)")));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + confidence / 2.0))
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PathFailure {
    pub path_index: usize,
    pub reason: String,
}

/// Per-collocation-point statistics; every matrix is `2M × 2N` indexed `(m, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub level: u32,
    pub mean: Matrix,
    pub std: Matrix,
    pub ci_low: Matrix,
    pub ci_high: Matrix,
    pub confidence: f64,
    pub z: f64,
    pub paths: usize,
    pub r_effective: usize,
    pub failures: Vec<PathFailure>,
}

impl McSummary {
    pub fn grid(&self) -> CollocationGrid {
        collocation_grid(self.level)
    }
}

/// Reduces per-path solution grids (in path order) to mean, standard
/// deviation and a normal confidence band.
fn summarize(level: u32, solutions: &[Matrix], z: f64) -> (Matrix, Matrix, Matrix, Matrix) {
    let (rows, cols) = (solutions[0].rows(), solutions[0].cols());
    let r = solutions.len();
    let mut mean = Matrix::zeros(rows, cols);
    let mut std = Matrix::zeros(rows, cols);
    let mut low = Matrix::zeros(rows, cols);
    let mut high = Matrix::zeros(rows, cols);
    debug_assert_eq!(rows, 2 << level);

    for k in 0..rows * cols {
        // Shift by the first sample so identical samples give an exact mean
        // and a zero deviation.
        let shift = solutions[0].as_slice()[k];
        let mut sum = KahanSum::default();
        for s in solutions {
            sum.add(s.as_slice()[k] - shift);
        }
        let mu = shift + sum.total() / r as f64;
        let sd = if r > 1 {
            let mut sq = KahanSum::default();
            for s in solutions {
                let d = s.as_slice()[k] - mu;
                sq.add(d * d);
            }
            (sq.total() / (r - 1) as f64).sqrt()
        } else {
            0.0
        };
        let half = z * sd / (r as f64).sqrt();
        mean.as_mut_slice()[k] = mu;
        std.as_mut_slice()[k] = sd;
        low.as_mut_slice()[k] = mu - half;
        high.as_mut_slice()[k] = mu + half;
    }
    (mean, std, low, high)
}

/// Solves the problem on `config.paths` Brownian paths at the given level.
///
/// Singular paths are recorded in `failures` and excluded from the
/// statistics. Problems without a stochastic kernel are solved once, since
/// every path would produce the same system.
pub fn run_ensemble(
    problem: &ProblemSpec,
    level: u32,
    config: &PathEnsembleConfig,
    confidence: f64,
) -> Result<McSummary> {
    let z = z_value(confidence)?;
    let assembler = Assembler::new(problem, level)?;

    let outcomes: Vec<Result<Matrix>> = if problem.k2.is_none() {
        match solve_dense(&assembler.deterministic()) {
            Ok(solution) => (0..config.paths).map(|_| Ok(solution.values().clone())).collect(),
            Err(Error::Singular { .. } | Error::Residual { .. }) => return Err(Error::Ensemble(config.paths)),
            Err(e) => return Err(e),
        }
    } else {
        (0..config.paths)
            .into_par_iter()
            .map(|k| {
                let path = simulate_path(config, k)?;
                let system = assembler.with_path(&path)?;
                Ok(solve_dense(&system)?.values().clone())
            })
            .collect()
    };

    let mut solutions = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (path_index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(values) => solutions.push(values),
            Err(e @ (Error::Singular { .. } | Error::Residual { .. })) => failures.push(PathFailure {
                path_index,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if solutions.is_empty() {
        return Err(Error::Ensemble(config.paths));
    }
    let (mean, std, ci_low, ci_high) = summarize(level, &solutions, z);
    Ok(McSummary {
        level,
        mean,
        std,
        ci_low,
        ci_high,
        confidence,
        z,
        paths: config.paths,
        r_effective: solutions.len(),
        failures,
    })
}

/// One line of the results table: level, `M`, `2M`, point, mean and band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    #[serde(rename = "J")]
    pub level: u32,
    #[serde(rename = "M")]
    pub half: usize,
    #[serde(rename = "2M")]
    pub points: usize,
    pub x: f64,
    pub y: f64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn summary_table(summary: &McSummary, points: &[(f64, f64)]) -> Result<Vec<TableRow>> {
    let grid = summary.grid();
    points
        .iter()
        .map(|&(x, y)| {
            let (Some(m), Some(n)) = (grid.position(x), grid.position(y)) else {
                return Err(Error::Domain(format!(
                    "({x}, {y}) is not a collocation pair at level {}",
                    summary.level
                )));
            };
            Ok(TableRow {
                level: summary.level,
                half: grid.half(),
                points: grid.len(),
                x: grid.points()[m],
                y: grid.points()[n],
                mean: summary.mean[(m, n)],
                ci_low: summary.ci_low[(m, n)],
                ci_high: summary.ci_high[(m, n)],
            })
        })
        .collect()
}

/// Every collocation pair, `m` outer and `n` inner.
pub fn all_points(level: u32) -> Vec<(f64, f64)> {
    let grid = collocation_grid(level);
    grid.points()
        .iter()
        .flat_map(|&x| grid.points().iter().map(move |&y| (x, y)))
        .collect()
}
