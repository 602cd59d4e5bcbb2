//! Two-dimensional Haar tensor coefficients from collocation samples.
//!
//! For samples `G(x_p, y_q)` on a `2M × 2N` collocation grid, the coefficients
//! `b_{i,j}` of `Σ b_{i,j} h_i(x) h_j(y)` are signed block sums of the samples
//! over the support windows of `h_i` and `h_j`. No linear system is solved.

use crate::error::{Error, Result};
use crate::haar_basis::{collocation_grid, decompose_index, CollocationGrid};
use crate::linalg::Matrix;

/// Support window of `h_i` expressed in 1-based collocation indices.
///
/// `h_i` is `+1` at points `alpha..=beta` and `-1` at `beta+1..=gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockIndices {
    pub tau: usize,
    pub sigma: usize,
    pub rho: usize,
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
}

/// Window of basis index `i >= 2` on a grid of `points` (= 2M) collocation points.
pub fn block_indices(i: usize, points: usize) -> Result<BlockIndices> {
    if !points.is_power_of_two() || points < 2 {
        return Err(Error::Domain(format!("grid size {points} is not 2M with M a power of two")));
    }
    if i < 2 || i > points {
        return Err(Error::Domain(format!("basis index {i} outside 2..={points}")));
    }
    let tau = 1usize << (i - 1).ilog2();
    let sigma = i - tau;
    let rho = points / tau;
    Ok(BlockIndices {
        tau,
        sigma,
        rho,
        alpha: rho * (sigma - 1) + 1,
        beta: rho * (sigma - 1) + rho / 2,
        gamma: rho * sigma,
    })
}

/// Inclusive 1-based index range plus the normalizing width for one axis and
/// one basis index. Index 1 spans the full axis with no sign change.
#[derive(Debug, Clone, Copy)]
enum Window {
    Full { len: usize },
    Split(BlockIndices),
}

fn windows(points: usize) -> Vec<Window> {
    (1..=points)
        .map(|i| {
            if i == 1 {
                Window::Full { len: points }
            } else {
                Window::Split(block_indices(i, points).expect("index in range"))
            }
        })
        .collect()
}

/// Samples of a function on the collocation grid, row `p` ↔ `x_p`, column `q` ↔ `y_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    values: Matrix,
    x_grid: CollocationGrid,
    y_grid: CollocationGrid,
}

impl SampleGrid {
    pub fn new(values: Matrix, level_x: u32, level_y: u32) -> Result<Self> {
        let x_grid = collocation_grid(level_x);
        let y_grid = collocation_grid(level_y);
        if values.rows() != x_grid.len() || values.cols() != y_grid.len() {
            return Err(Error::Shape {
                expected: format!("{}x{}", x_grid.len(), y_grid.len()),
                actual: format!("{}x{}", values.rows(), values.cols()),
            });
        }
        Ok(Self {
            values,
            x_grid,
            y_grid,
        })
    }

    pub fn from_fn(level_x: u32, level_y: u32, f: impl Fn(f64, f64) -> f64) -> Self {
        let x_grid = collocation_grid(level_x);
        let y_grid = collocation_grid(level_y);
        let values = Matrix::from_fn(x_grid.len(), y_grid.len(), |p, q| {
            f(x_grid.points()[p], y_grid.points()[q])
        });
        Self {
            values,
            x_grid,
            y_grid,
        }
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn x_grid(&self) -> &CollocationGrid {
        &self.x_grid
    }

    pub fn y_grid(&self) -> &CollocationGrid {
        &self.y_grid
    }

    /// Sum of samples over 1-based inclusive index ranges.
    fn block_sum(&self, (p0, p1): (usize, usize), (q0, q1): (usize, usize)) -> f64 {
        let mut acc = 0.0;
        for p in p0..=p1 {
            acc += self.values.row(p - 1)[q0 - 1..q1].iter().sum::<f64>();
        }
        acc
    }
}

/// Tensor Haar coefficients; entry `(i-1, j-1)` holds `b_{i,j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffGrid {
    b: Matrix,
    level_x: u32,
    level_y: u32,
}

impl CoeffGrid {
    pub fn matrix(&self) -> &Matrix {
        &self.b
    }

    /// `b_{i,j}` with 1-based indices.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.b[(i - 1, j - 1)]
    }

    pub fn levels(&self) -> (u32, u32) {
        (self.level_x, self.level_y)
    }
}

pub fn coeffs_from_samples(samples: &SampleGrid) -> CoeffGrid {
    let rows = samples.x_grid.len();
    let cols = samples.y_grid.len();
    let wx = windows(rows);
    let wy = windows(cols);
    let mut b = Matrix::zeros(rows, cols);

    for (i, win_x) in wx.iter().enumerate() {
        for (j, win_y) in wy.iter().enumerate() {
            b[(i, j)] = match (win_x, win_y) {
                (Window::Full { len: two_m }, Window::Full { len: two_n }) => {
                    samples.block_sum((1, *two_m), (1, *two_n)) / (two_m * two_n) as f64
                }
                (Window::Split(x), Window::Full { len: two_n }) => {
                    let all = (1, *two_n);
                    (samples.block_sum((x.alpha, x.beta), all)
                        - samples.block_sum((x.beta + 1, x.gamma), all))
                        / (x.rho * two_n) as f64
                }
                (Window::Full { len: two_m }, Window::Split(y)) => {
                    let all = (1, *two_m);
                    (samples.block_sum(all, (y.alpha, y.beta))
                        - samples.block_sum(all, (y.beta + 1, y.gamma)))
                        / (two_m * y.rho) as f64
                }
                (Window::Split(x), Window::Split(y)) => {
                    let (xl, xr) = ((x.alpha, x.beta), (x.beta + 1, x.gamma));
                    let (yl, yr) = ((y.alpha, y.beta), (y.beta + 1, y.gamma));
                    (samples.block_sum(xl, yl) - samples.block_sum(xl, yr)
                        - samples.block_sum(xr, yl)
                        + samples.block_sum(xr, yr))
                        / (x.rho * y.rho) as f64
                }
            };
        }
    }
    CoeffGrid {
        b,
        level_x: samples.x_grid.level(),
        level_y: samples.y_grid.level(),
    }
}

/// Coefficients `b_{p,q}(x, y)` of `s, t ↦ G(x, y, s, t)` for a fixed outer
/// point, sampling `G` at the `(s_p, t_q)` collocation points.
pub fn kernel_coeffs(
    g: impl Fn(f64, f64, f64, f64) -> f64,
    x: f64,
    y: f64,
    level_s: u32,
    level_t: u32,
) -> CoeffGrid {
    let samples = SampleGrid::from_fn(level_s, level_t, |s, t| g(x, y, s, t));
    coeffs_from_samples(&samples)
}

fn check_square(x: f64, y: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) {
        Ok(())
    } else {
        Err(Error::Domain(format!("point ({x}, {y}) outside the unit square")))
    }
}

fn basis_values(points: usize, x: f64) -> Vec<f64> {
    (1..=points)
        .map(|i| decompose_index(i).expect("index >= 1").eval(x))
        .collect()
}

/// `Σ_p Σ_q b_{p,q} h_p(x) h_q(y)`.
pub fn reconstruct(coeffs: &CoeffGrid, x: f64, y: f64) -> Result<f64> {
    check_square(x, y)?;
    let hx = basis_values(coeffs.b.rows(), x);
    let hy = basis_values(coeffs.b.cols(), y);
    let mut acc = 0.0;
    for (p, &u) in hx.iter().enumerate() {
        if u == 0.0 {
            continue;
        }
        let row = coeffs.b.row(p);
        acc += u * row.iter().zip(&hy).map(|(b, v)| b * v).sum::<f64>();
    }
    Ok(acc)
}

/// Value of the Haar interpolant at an arbitrary point, written directly in
/// terms of the samples: each block-sum coefficient is multiplied by
/// `h_i(x) h_j(y)` as it is formed.
pub fn reconstruct_from_samples(samples: &SampleGrid, x: f64, y: f64) -> Result<f64> {
    check_square(x, y)?;
    let two_m = samples.x_grid.len();
    let two_n = samples.y_grid.len();
    let hx = basis_values(two_m, x);
    let hy = basis_values(two_n, y);
    let all_x = (1, two_m);
    let all_y = (1, two_n);

    let mut value =
        samples.block_sum(all_x, all_y) / (two_m * two_n) as f64 * hx[0] * hy[0];

    for i in 2..=two_m {
        let weight = hx[i - 1] * hy[0];
        if weight == 0.0 {
            continue;
        }
        let w = block_indices(i, two_m)?;
        value += (samples.block_sum((w.alpha, w.beta), all_y)
            - samples.block_sum((w.beta + 1, w.gamma), all_y))
            / (w.rho * two_n) as f64
            * weight;
    }
    for j in 2..=two_n {
        let weight = hx[0] * hy[j - 1];
        if weight == 0.0 {
            continue;
        }
        let w = block_indices(j, two_n)?;
        value += (samples.block_sum(all_x, (w.alpha, w.beta))
            - samples.block_sum(all_x, (w.beta + 1, w.gamma)))
            / (two_m * w.rho) as f64
            * weight;
    }
    for i in 2..=two_m {
        if hx[i - 1] == 0.0 {
            continue;
        }
        let wx = block_indices(i, two_m)?;
        for j in 2..=two_n {
            let weight = hx[i - 1] * hy[j - 1];
            if weight == 0.0 {
                continue;
            }
            let wy = block_indices(j, two_n)?;
            let (xl, xr) = ((wx.alpha, wx.beta), (wx.beta + 1, wx.gamma));
            let (yl, yr) = ((wy.alpha, wy.beta), (wy.beta + 1, wy.gamma));
            value += (samples.block_sum(xl, yl) - samples.block_sum(xl, yr)
                - samples.block_sum(xr, yl)
                + samples.block_sum(xr, yr))
                / (wx.rho * wy.rho) as f64
                * weight;
        }
    }
    Ok(value)
}
