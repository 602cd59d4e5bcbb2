//! Collocation system for
//!
//! ```text
//! g(x, y) = f(x, y) + ∫_0^y ∫_0^x K1(x, y, s, t) g(s, t) ds dt
//!                   + ∫_0^y ∫_0^x K2(x, y, s, t) g(s, t) dB(s) dB(t)
//! ```
//!
//! Both products `K·g` are expanded in tensor Haar functions of `(s, t)` with
//! block-sum coefficients, which turns the integrals into
//! `Σ b_{i,j} p_{i,1}(x) p_{j,1}(y)` and `Σ c_{i,j} q_{i,1}(x) q_{j,1}(y)`.
//! Collocating at the grid points, where `s_p, t_q` coincide with `x_m, y_n`,
//! gives a square linear system in the unknowns `g(x_m, y_n)`.
//!
//! Because every coefficient is a signed block sum, the contribution of the
//! unknown `g(s_p, t_q)` to row `(m, n)` factors into an `x` weight and a `y`
//! weight:
//!
//! ```text
//! W[m][p] = Σ_i p_{i,1}(x_m) · sign_i(p) / ρ_i      (deterministic)
//! Q[m][p] = Σ_i q_{i,1}(x_m) · sign_i(p) / ρ_i      (per path)
//! A[(m,n),(p,q)] = δ − K1 · W[m][p] · W[n][q] − K2 · Q[m][p] · Q[n][q]
//! ```
//!
//! with `ρ_1 = 2M` and `sign_1 ≡ 1`.

use std::fmt;
use std::sync::Arc;

use crate::brownian::BrownianPath;
use crate::error::{Error, Result};
use crate::haar_basis::{basis, collocation_grid, CollocationGrid, HaarIndex};
use crate::linalg::{Lu, Matrix};
use crate::tensor_coeffs::{block_indices, reconstruct_from_samples, SampleGrid};

pub type SourceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type KernelFn = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;

/// Pivot threshold relative to `‖A‖∞`.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

/// One instance of the integral equation. `k2 = None` is the zero kernel.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub f: SourceFn,
    pub k1: KernelFn,
    pub k2: Option<KernelFn>,
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        k1: impl Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
        k2: Option<KernelFn>,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            k1: Arc::new(k1),
            k2,
        }
    }

    /// The same problem with the stochastic kernel removed.
    pub fn deterministic(&self) -> Self {
        Self {
            k2: None,
            ..self.clone()
        }
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("stochastic", &self.k2.is_some())
            .finish()
    }
}

/// `A g = rhs` with unknowns ordered `flat = n · 2M + m`.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub a: Matrix,
    pub rhs: Vec<f64>,
    level_x: u32,
    level_y: u32,
    origin: Option<(u64, usize)>,
}

impl AssembledSystem {
    pub fn levels(&self) -> (u32, u32) {
        (self.level_x, self.level_y)
    }

    pub fn origin(&self) -> Option<(u64, usize)> {
        self.origin
    }

    pub fn flat_index(&self, m: usize, n: usize) -> usize {
        n * (2 << self.level_x) + m
    }

    pub fn grid_index(&self, flat: usize) -> (usize, usize) {
        let two_m = 2 << self.level_x;
        (flat % two_m, flat / two_m)
    }
}

#[derive(Debug, Clone)]
pub struct PathSolution {
    samples: SampleGrid,
    pub min_pivot: f64,
    pub residual: f64,
}

impl PathSolution {
    /// Solution values, entry `(m, n)` = `g(x_m, y_n)`.
    pub fn values(&self) -> &Matrix {
        self.samples.values()
    }

    pub fn samples(&self) -> &SampleGrid {
        &self.samples
    }
}

/// `Σ_i v_i(x_m) · sign_i(p) / ρ_i` for every collocation pair `(m, p)`.
fn block_weights(grid: &CollocationGrid, mut integral: impl FnMut(&HaarIndex, f64) -> Result<f64>) -> Result<Matrix> {
    let n = grid.len();
    let mut w = Matrix::zeros(n, n);
    for h in basis(grid.level()) {
        for (m, &x) in grid.points().iter().enumerate() {
            let v = integral(&h, x)?;
            if v == 0.0 {
                continue;
            }
            let row = w.row_mut(m);
            match h {
                HaarIndex::Constant => {
                    let c = v / n as f64;
                    row.iter_mut().for_each(|e| *e += c);
                }
                HaarIndex::Wavelet(wv) => {
                    let b = block_indices(wv.index, n)?;
                    let c = v / b.rho as f64;
                    row[b.alpha - 1..b.beta].iter_mut().for_each(|e| *e += c);
                    row[b.beta..b.gamma].iter_mut().for_each(|e| *e -= c);
                }
            }
        }
    }
    Ok(w)
}

/// Path-independent part of the discretization: kernel samples, the
/// deterministic matrix and the right-hand side. Reused across the paths of
/// an ensemble.
#[derive(Debug, Clone)]
pub struct Assembler {
    x_grid: CollocationGrid,
    y_grid: CollocationGrid,
    base: Matrix,
    k2: Option<Matrix>,
    rhs: Vec<f64>,
}

impl Assembler {
    pub fn new(problem: &ProblemSpec, level: u32) -> Result<Self> {
        Self::with_levels(problem, level, level)
    }

    pub fn with_levels(problem: &ProblemSpec, level_x: u32, level_y: u32) -> Result<Self> {
        let x_grid = collocation_grid(level_x);
        let y_grid = collocation_grid(level_y);
        let (two_m, two_n) = (x_grid.len(), y_grid.len());
        let size = two_m * two_n;
        let xs = x_grid.points();
        let ys = y_grid.points();

        let wx = block_weights(&x_grid, |h, x| Ok(h.integral(x)))?;
        let wy = block_weights(&y_grid, |h, y| Ok(h.integral(y)))?;

        let mut rhs = Vec::with_capacity(size);
        let mut base = Matrix::zeros(size, size);
        let mut k2 = problem.k2.as_ref().map(|_| Matrix::zeros(size, size));

        for n in 0..two_n {
            for m in 0..two_m {
                let (x, y) = (xs[m], ys[n]);
                let r = n * two_m + m;
                let fv = (problem.f)(x, y);
                if !fv.is_finite() {
                    return Err(Error::Assembly { what: "source f", x, y, s: x, t: y });
                }
                rhs.push(fv);
                for q in 0..two_n {
                    for p in 0..two_m {
                        let (s, t) = (xs[p], ys[q]);
                        let c = q * two_m + p;
                        let k1 = (problem.k1)(x, y, s, t);
                        if !k1.is_finite() {
                            return Err(Error::Assembly { what: "kernel K1", x, y, s, t });
                        }
                        let delta = if r == c { 1.0 } else { 0.0 };
                        base[(r, c)] = delta - k1 * (wx[(m, p)] * wy[(n, q)]);
                        if let (Some(kernel), Some(samples)) = (&problem.k2, k2.as_mut()) {
                            let v = kernel(x, y, s, t);
                            if !v.is_finite() {
                                return Err(Error::Assembly { what: "kernel K2", x, y, s, t });
                            }
                            samples[(r, c)] = v;
                        }
                    }
                }
            }
        }
        Ok(Self {
            x_grid,
            y_grid,
            base,
            k2,
            rhs,
        })
    }

    fn system(&self, a: Matrix, origin: Option<(u64, usize)>) -> AssembledSystem {
        AssembledSystem {
            a,
            rhs: self.rhs.clone(),
            level_x: self.x_grid.level(),
            level_y: self.y_grid.level(),
            origin,
        }
    }

    /// System with the stochastic term dropped.
    pub fn deterministic(&self) -> AssembledSystem {
        self.system(self.base.clone(), None)
    }

    pub fn with_path(&self, path: &BrownianPath) -> Result<AssembledSystem> {
        let Some(k2) = &self.k2 else {
            return Ok(self.system(self.base.clone(), path.origin()));
        };
        let qx = block_weights(&self.x_grid, |h, x| path.haar_integral(h, x))?;
        let qy = block_weights(&self.y_grid, |h, y| path.haar_integral(h, y))?;
        let (two_m, two_n) = (self.x_grid.len(), self.y_grid.len());
        let mut a = self.base.clone();
        for n in 0..two_n {
            for m in 0..two_m {
                let r = n * two_m + m;
                let row = a.row_mut(r);
                let k_row = k2.row(r);
                for q in 0..two_n {
                    let wq = qy[(n, q)];
                    if wq == 0.0 {
                        continue;
                    }
                    for p in 0..two_m {
                        let c = q * two_m + p;
                        let term = k_row[c] * (qx[(m, p)] * wq);
                        if term != 0.0 {
                            row[c] -= term;
                        }
                    }
                }
            }
        }
        Ok(self.system(a, path.origin()))
    }
}

pub fn assemble(problem: &ProblemSpec, path: &BrownianPath, level: u32) -> Result<AssembledSystem> {
    Assembler::new(problem, level)?.with_path(path)
}

pub fn assemble_deterministic(problem: &ProblemSpec, level: u32) -> Result<AssembledSystem> {
    Ok(Assembler::new(problem, level)?.deterministic())
}

fn residual_inf(a: &Matrix, x: &[f64], b: &[f64]) -> f64 {
    a.mul_vec(x)
        .iter()
        .zip(b)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

/// Dense LU with partial pivoting and at most one step of iterative refinement.
pub fn solve_dense(system: &AssembledSystem) -> Result<PathSolution> {
    let lu = Lu::factor(system.a.clone(), SINGULAR_TOLERANCE).map_err(|e| match e {
        Error::Singular {
            column,
            pivot,
            threshold,
            ..
        } => Error::Singular {
            column,
            pivot,
            threshold,
            origin: system.origin,
        },
        other => other,
    })?;
    let b = &system.rhs;
    let bound = 1e-8 * (1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max));
    let mut x = lu.solve(b);
    let mut residual = residual_inf(&system.a, &x, b);
    if residual > bound {
        let r: Vec<f64> = system.a.mul_vec(&x).iter().zip(b).map(|(u, v)| v - u).collect();
        let dx = lu.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(u, d)| *u += d);
        residual = residual_inf(&system.a, &x, b);
        if residual > bound {
            return Err(Error::Residual { residual, bound });
        }
    }

    let (lx, ly) = system.levels();
    let two_m = 2usize << lx;
    let two_n = 2usize << ly;
    let values = Matrix::from_fn(two_m, two_n, |m, n| x[n * two_m + m]);
    Ok(PathSolution {
        samples: SampleGrid::new(values, lx, ly)?,
        min_pivot: lu.min_pivot(),
        residual,
    })
}

pub fn solve_once(problem: &ProblemSpec, path: &BrownianPath, level: u32) -> Result<PathSolution> {
    solve_dense(&assemble(problem, path, level)?)
}

pub fn solve_deterministic(problem: &ProblemSpec, level: u32) -> Result<PathSolution> {
    solve_dense(&assemble_deterministic(problem, level)?)
}

/// Haar interpolant of the solved collocation values at an arbitrary point.
pub fn evaluate_offgrid(solution: &PathSolution, x: f64, y: f64) -> Result<f64> {
    reconstruct_from_samples(&solution.samples, x, y)
}
