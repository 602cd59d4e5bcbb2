//! Unnormalized Haar family on `[0, 1)`.
//!
//! Index `1` is the constant function. Every index `i >= 2` is written as
//! `i = 2^level + translation + 1` with `0 <= translation < 2^level`; the
//! wavelet is `+1` on `[alpha, beta)`, `-1` on `[beta, gamma)` and zero
//! elsewhere. All supports are right-open, so every basis function vanishes
//! at `y = 1`.

use crate::error::{Error, Result};

/// Support of a non-constant Haar wavelet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavelet {
    pub index: usize,
    pub level: u32,
    pub translation: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Wavelet {
    /// Number of wavelets at this level, `2^level`.
    pub fn scale(&self) -> usize {
        1 << self.level
    }
}

/// Decomposed basis index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HaarIndex {
    /// `h_1`, identically one on `[0, 1)`.
    Constant,
    Wavelet(Wavelet),
}

impl HaarIndex {
    pub fn index(&self) -> usize {
        match self {
            HaarIndex::Constant => 1,
            HaarIndex::Wavelet(w) => w.index,
        }
    }

    /// `m_i = 2^level`, with `m_1 = 1`. The squared L2 norm of `h_i` is `1 / m_i`.
    pub fn scale(&self) -> usize {
        match self {
            HaarIndex::Constant => 1,
            HaarIndex::Wavelet(w) => w.scale(),
        }
    }

    /// `(alpha, beta, gamma)`; the constant index reports `(0, 1, 1)` so that
    /// `[alpha, gamma)` is still its support.
    pub fn breakpoints(&self) -> (f64, f64, f64) {
        match self {
            HaarIndex::Constant => (0.0, 1.0, 1.0),
            HaarIndex::Wavelet(w) => (w.alpha, w.beta, w.gamma),
        }
    }

    /// `h_i(y)` without range checking.
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            HaarIndex::Constant => {
                if (0.0..1.0).contains(&y) {
                    1.0
                } else {
                    0.0
                }
            }
            HaarIndex::Wavelet(w) => {
                if y >= w.alpha && y < w.beta {
                    1.0
                } else if y >= w.beta && y < w.gamma {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `p_{i,1}(y) = ∫_0^y h_i(u) du` without range checking.
    pub fn integral(&self, y: f64) -> f64 {
        match self {
            HaarIndex::Constant => y,
            HaarIndex::Wavelet(w) => {
                if y >= w.alpha && y < w.beta {
                    y - w.alpha
                } else if y >= w.beta && y < w.gamma {
                    w.gamma - y
                } else {
                    0.0
                }
            }
        }
    }
}

pub fn decompose_index(i: usize) -> Result<HaarIndex> {
    match i {
        0 => Err(Error::Domain("Haar index must be >= 1".into())),
        1 => Ok(HaarIndex::Constant),
        _ => {
            let level = (i - 1).ilog2();
            let m = 1usize << level;
            let translation = i - m - 1;
            let scale = m as f64;
            Ok(HaarIndex::Wavelet(Wavelet {
                index: i,
                level,
                translation,
                alpha: translation as f64 / scale,
                beta: (translation as f64 + 0.5) / scale,
                gamma: (translation as f64 + 1.0) / scale,
            }))
        }
    }
}

fn check_unit(y: f64) -> Result<()> {
    if (0.0..=1.0).contains(&y) {
        Ok(())
    } else {
        Err(Error::Domain(format!("coordinate {y} outside [0, 1]")))
    }
}

pub fn haar_eval(i: usize, y: f64) -> Result<f64> {
    check_unit(y)?;
    Ok(decompose_index(i)?.eval(y))
}

pub fn p_int(i: usize, y: f64) -> Result<f64> {
    check_unit(y)?;
    Ok(decompose_index(i)?.integral(y))
}

/// Midpoints of the `2M` dyadic cells of width `1/(2M)`, `M = 2^level`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationGrid {
    level: u32,
    points: Vec<f64>,
}

impl CollocationGrid {
    pub fn new(level: u32) -> Self {
        let two_m = 2usize << level;
        let denom = two_m as f64;
        let points = (1..=two_m).map(|k| (k as f64 - 0.5) / denom).collect();
        Self { level, points }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// `M = 2^L`.
    pub fn half(&self) -> usize {
        1 << self.level
    }

    /// `2M`, the number of points and of basis functions.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Zero-based position of `x` in the grid, if `x` is a collocation point.
    pub fn position(&self, x: f64) -> Option<usize> {
        let k = (x * self.len() as f64 - 0.5).round();
        if k < 0.0 || k >= self.len() as f64 {
            return None;
        }
        let k = k as usize;
        ((self.points[k] - x).abs() <= 1e-12).then_some(k)
    }
}

pub fn collocation_grid(level: u32) -> CollocationGrid {
    CollocationGrid::new(level)
}

/// All basis functions `h_1 .. h_{2M}` for the given level.
pub fn basis(level: u32) -> Vec<HaarIndex> {
    let two_m = 2usize << level;
    (1..=two_m)
        .map(|i| decompose_index(i).expect("index >= 1"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wavelet(i: usize) -> Wavelet {
        match decompose_index(i).unwrap() {
            HaarIndex::Wavelet(w) => w,
            HaarIndex::Constant => panic!("constant"),
        }
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(decompose_index(1).unwrap(), HaarIndex::Constant);
        let w = wavelet(2);
        assert_eq!((w.level, w.translation), (0, 0));
        assert_eq!((w.alpha, w.beta, w.gamma), (0.0, 0.5, 1.0));
        assert!(matches!(decompose_index(0), Err(Error::Domain(_))));
    }

    #[test]
    fn decompose_matches_enumeration() {
        // Walk (level, translation) in order and check i = 2^level + n + 1.
        let mut i = 2;
        for level in 0..8u32 {
            let m = 1usize << level;
            for n in 0..m {
                let w = wavelet(i);
                assert_eq!((w.level, w.translation), (level, n), "i = {i}");
                assert_eq!(w.alpha, n as f64 / m as f64);
                assert_eq!(w.gamma - w.alpha, 1.0 / m as f64);
                assert_eq!(w.beta, 0.5 * (w.alpha + w.gamma));
                i += 1;
            }
        }
        let w4 = wavelet(4);
        assert_eq!((w4.level, w4.translation, w4.alpha, w4.beta, w4.gamma), (1, 1, 0.5, 0.75, 1.0));
        let w5 = wavelet(5);
        assert_eq!((w5.level, w5.translation, w5.alpha, w5.beta, w5.gamma), (2, 0, 0.0, 0.125, 0.25));
    }

    #[test]
    fn eval_examples() {
        assert_eq!(haar_eval(2, 0.25).unwrap(), 1.0);
        assert_eq!(haar_eval(2, 0.75).unwrap(), -1.0);
        assert_eq!(haar_eval(3, 0.75).unwrap(), 0.0);
        for i in 1..20 {
            assert_eq!(haar_eval(i, 1.0).unwrap(), 0.0);
        }
        assert!(haar_eval(2, 1.5).is_err());
        assert!(haar_eval(2, -0.1).is_err());
    }

    #[test]
    fn p_int_examples() {
        assert_eq!(p_int(2, 0.25).unwrap(), 0.25);
        assert_eq!(p_int(1, 0.6).unwrap(), 0.6);
        // h_4 lives on [0.5, 1); at 0.9 the tent is on its descending side.
        assert!((p_int(4, 0.9).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(p_int(3, 0.9).unwrap(), 0.0);
        assert!(p_int(3, 2.0).is_err());
    }

    #[test]
    fn grid_examples() {
        assert_eq!(collocation_grid(0).points(), &[0.25, 0.75]);
        assert_eq!(collocation_grid(1).points(), &[0.125, 0.375, 0.625, 0.875]);
        let g2 = collocation_grid(2);
        assert_eq!(g2.points()[0], 0.0625);
        assert_eq!(*g2.points().last().unwrap(), 0.9375);
        assert_eq!(g2.position(0.4375), Some(3));
        assert_eq!(g2.position(0.5), None);
    }

    #[test]
    fn grid_avoids_breakpoints() {
        for level in 0..8 {
            let g = collocation_grid(level);
            let cells = g.len() as f64;
            for w in g.points().windows(2) {
                assert!(w[0] < w[1]);
            }
            for &x in g.points() {
                assert!(x > 0.0 && x < 1.0);
                assert_ne!((x * cells).fract(), 0.0);
            }
        }
    }

    #[test]
    fn discrete_orthogonality() {
        for level in 0..=10u32 {
            let grid = collocation_grid(level);
            let two_m = grid.len();
            // Checking every pair is quadratic; sample the pairs at high levels.
            let stride = if two_m > 64 { two_m / 32 } else { 1 };
            let idx: Vec<usize> = (1..=two_m).step_by(stride).chain([two_m]).collect();
            let values: Vec<Vec<f64>> = idx
                .iter()
                .map(|&i| {
                    let h = decompose_index(i).unwrap();
                    grid.points().iter().map(|&x| h.eval(x)).collect()
                })
                .collect();
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    let dot: f64 = values[a].iter().zip(&values[b]).map(|(u, v)| u * v).sum();
                    let ip = dot / two_m as f64;
                    let expected = if i == j {
                        1.0 / decompose_index(i).unwrap().scale() as f64
                    } else {
                        0.0
                    };
                    assert_eq!(ip, expected, "level {level}, ({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn tent_shape() {
        for i in 2..=256 {
            let w = wavelet(i);
            assert_eq!(p_int(i, w.gamma).unwrap(), 0.0);
            assert_eq!(p_int(i, w.beta).unwrap(), 0.5 / w.scale() as f64);
        }
    }

    /// Composite midpoint rule on 4096 equal cells of [0, 1]; the cell holding
    /// `y` contributes its midpoint value times the covered length.
    fn midpoint_integral(i: usize, y: f64) -> f64 {
        const CELLS: usize = 4096;
        let h = 1.0 / CELLS as f64;
        let mut acc = 0.0;
        for k in 0..CELLS {
            let lo = k as f64 * h;
            if lo >= y {
                break;
            }
            let width = (y - lo).min(h);
            acc += haar_eval(i, lo + 0.5 * h).unwrap() * width;
        }
        acc
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn p_int_matches_quadrature(i in 1usize..=64, y in 0.0f64..=1.0) {
            let exact = p_int(i, y).unwrap();
            let approx = midpoint_integral(i, y);
            prop_assert!((exact - approx).abs() <= 1e-6, "i={} y={} exact={} approx={}", i, y, exact, approx);
        }

        #[test]
        fn piecewise_constant_on_dyadic_cells(i in 2usize..=128, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let w = wavelet(i);
            let cell = 0.5 / w.scale() as f64;
            let k = (w.alpha / cell) as usize;
            // Two points inside the same half-support cell.
            for j in [k, k + 1] {
                let lo = j as f64 * cell;
                let (u, v) = (lo + a * cell, lo + b * cell);
                prop_assert_eq!(haar_eval(i, u).unwrap(), haar_eval(i, v).unwrap());
            }
        }
    }
}
