//! Brute-force reference computations, independent of the collocation code:
//! composite midpoint quadrature, left-point Itô sums over a path, and the
//! discrete double Wiener–Itô sum.

use rayon::prelude::*;

use crate::brownian::{q_int, simulate_path, BrownianPath, PathEnsembleConfig};
use crate::error::{Error, Result};
use crate::montecarlo::KahanSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadSpec {
    /// Cells per axis.
    pub subdivisions: usize,
}

impl QuadSpec {
    pub fn new(subdivisions: usize) -> Result<Self> {
        if subdivisions == 0 {
            return Err(Error::Config("quadrature needs at least one cell".into()));
        }
        Ok(Self { subdivisions })
    }
}

/// Composite midpoint rule for `∫_0^y ∫_0^x φ(s, t) ds dt`.
pub fn quad2d(phi: impl Fn(f64, f64) -> f64, x: f64, y: f64, spec: QuadSpec) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("upper limits ({x}, {y}) outside the unit square")));
    }
    let n = spec.subdivisions;
    let (hs, ht) = (x / n as f64, y / n as f64);
    let mut acc = KahanSum::default();
    for j in 0..n {
        let t = (j as f64 + 0.5) * ht;
        for i in 0..n {
            let s = (i as f64 + 0.5) * hs;
            let v = phi(s, t);
            if !v.is_finite() {
                return Err(Error::Domain(format!("integrand is {v} at ({s}, {t})")));
            }
            acc.add(v);
        }
    }
    Ok(acc.total() * hs * ht)
}

/// Left-point sum `Σ_{kδ < y} φ(kδ) (B((k+1)δ) − B(kδ))`.
pub fn ito_sum(phi: impl Fn(f64) -> f64, path: &BrownianPath, y: f64) -> Result<f64> {
    let end = path.node(y)?;
    let step = path.step();
    let v = path.values();
    let mut acc = 0.0;
    for k in 0..end {
        acc += phi(k as f64 * step) * (v[k + 1] - v[k]);
    }
    Ok(acc)
}

/// Error-free `a · b = hi + lo`.
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    (hi, a.mul_add(b, -hi))
}

/// Exact running sum of floating-point terms (Shewchuk's nonoverlapping
/// partials) with a correctly rounded result.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn add(&mut self, mut x: f64) {
        let mut kept = 0;
        for k in 0..self.partials.len() {
            let mut y = self.partials[k];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        self.partials.truncate(kept);
        self.partials.push(x);
    }

    pub fn total(&self) -> f64 {
        let p = &self.partials;
        let Some(&last) = p.last() else {
            return 0.0;
        };
        let mut n = p.len() - 1;
        let mut hi = last;
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            lo = y - (hi - x);
            if lo != 0.0 {
                break;
            }
        }
        // Round half-way cases using the sign of the next partial.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

/// `Σ_k Σ_l φ(t_k, s_l) ΔB_k ΔB_l` over the path cells with left-point
/// sampling, accumulated exactly. With `restrict_offdiag` the diagonal terms
/// `k = l` are dropped.
pub fn double_ito_sum(phi: impl Fn(f64, f64) -> f64, path: &BrownianPath, restrict_offdiag: bool) -> f64 {
    let step = path.step();
    let increments: Vec<f64> = path.increments().collect();
    let mut acc = ExactSum::default();
    for (k, &dk) in increments.iter().enumerate() {
        let t = k as f64 * step;
        for (l, &dl) in increments.iter().enumerate() {
            if restrict_offdiag && k == l {
                continue;
            }
            let w = phi(t, l as f64 * step);
            if w == 0.0 {
                continue;
            }
            let (p, e) = two_product(dk, dl);
            let (p1, e1) = two_product(w, p);
            let (p2, e2) = two_product(w, e);
            for term in [p1, e1, p2, e2] {
                if term != 0.0 {
                    acc.add(term);
                }
            }
        }
    }
    acc.total()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    /// Sample variance with the `R − 1` denominator.
    pub variance: f64,
    pub paths: usize,
}

/// Sample mean and variance of `q_{i,1}(1)` over an ensemble.
pub fn ito_moment_check(i: usize, ensemble: &PathEnsembleConfig) -> Result<MomentEstimate> {
    if ensemble.paths < 1000 {
        return Err(Error::Config(format!(
            "moment check needs at least 1000 paths, got {}",
            ensemble.paths
        )));
    }
    let samples: Vec<f64> = (0..ensemble.paths)
        .into_par_iter()
        .map(|k| simulate_path(ensemble, k).and_then(|p| q_int(i, 1.0, &p)))
        .collect::<Result<_>>()?;
    let n = samples.len() as f64;
    let mut sum = KahanSum::default();
    samples.iter().for_each(|&v| sum.add(v));
    let mean = sum.total() / n;
    let mut sq = KahanSum::default();
    samples.iter().for_each(|&v| sq.add((v - mean) * (v - mean)));
    Ok(MomentEstimate {
        mean,
        variance: sq.total() / (n - 1.0),
        paths: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::{grid_count_for, q_int};
    use crate::haar_basis::decompose_index;

    fn path(seed: u64, g: usize) -> BrownianPath {
        simulate_path(&PathEnsembleConfig::new(1, seed, g).unwrap(), 0).unwrap()
    }

    #[test]
    fn quad2d_examples() {
        let spec = QuadSpec::new(64).unwrap();
        assert!((quad2d(|_, _| 1.0, 1.0, 1.0, spec).unwrap() - 1.0).abs() < 1e-14);
        let st = quad2d(|s, t| s * t, 1.0, 1.0, QuadSpec::new(512).unwrap()).unwrap();
        assert!((st - 0.25).abs() <= 1e-5);
        // ∫_0^1 ∫_0^1 (2 + t − s)(s + t) ds dt = 2, by exact polynomial integration.
        let v = quad2d(|s, t| (2.0 + t - s) * (s + t), 1.0, 1.0, QuadSpec::new(256).unwrap()).unwrap();
        assert!((v - 2.0).abs() <= 1e-4, "{v}");
        assert!(QuadSpec::new(0).is_err());
        assert!(quad2d(|_, _| 1.0, 1.5, 1.0, spec).is_err());
        assert!(quad2d(|s, _| 1.0 / (s - s), 1.0, 1.0, spec).is_err());
    }

    #[test]
    fn quad2d_is_second_order() {
        let f = |s: f64, t: f64| (s + 2.0 * t).exp();
        // ∫_0^x e^s ds ∫_0^y e^{2t} dt
        let (x, y): (f64, f64) = (0.8, 0.6);
        let exact = (x.exp() - 1.0) * ((2.0 * y).exp() - 1.0) / 2.0;
        let e1 = (quad2d(f, x, y, QuadSpec::new(32).unwrap()).unwrap() - exact).abs();
        let e2 = (quad2d(f, x, y, QuadSpec::new(64).unwrap()).unwrap() - exact).abs();
        let ratio = e1 / e2;
        assert!((3.8..4.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn ito_sum_matches_closed_form() {
        let p = path(3, grid_count_for(3, 3, 1));
        for i in 1..=16 {
            let h = decompose_index(i).unwrap();
            for k in 0..=p.grid_count() {
                let y = k as f64 * p.step();
                let closed = q_int(i, y, &p).unwrap();
                let sum = ito_sum(|t| h.eval(t), &p, y).unwrap();
                assert_eq!(closed.to_bits(), sum.to_bits(), "i={i}, y={y}");
            }
        }
    }

    #[test]
    fn exact_sum_is_exact() {
        let mut s = ExactSum::default();
        for v in [1e100, 1.0, -1e100, 1e-30] {
            s.add(v);
        }
        assert_eq!(s.total(), 1.0 + 1e-30);
        let mut s = ExactSum::default();
        for _ in 0..10 {
            s.add(0.1);
        }
        assert_eq!(s.total(), 1.0);
        assert_eq!(ExactSum::default().total(), 0.0);
    }

    #[test]
    fn double_sum_examples() {
        let p = path(11, 32);
        assert_eq!(double_ito_sum(|_, _| 0.0, &p, false), 0.0);

        for (i, j) in [(1, 1), (2, 3), (5, 2), (4, 4), (9, 1)] {
            let (hi, hj) = (decompose_index(i).unwrap(), decompose_index(j).unwrap());
            let full = double_ito_sum(|t, s| hi.eval(s) * hj.eval(t), &p, false);
            let product = q_int(i, 1.0, &p).unwrap() * q_int(j, 1.0, &p).unwrap();
            assert_eq!(full.to_bits(), product.to_bits(), "({i}, {j})");
        }

        let b1 = *p.values().last().unwrap();
        let quad_var: f64 = p.increments().map(|d| d * d).sum();
        let off = double_ito_sum(|_, _| 1.0, &p, true);
        assert!((off - (b1 * b1 - quad_var)).abs() <= 1e-13, "{off}");
    }

    #[test]
    fn offdiagonal_gap_is_diagonal_mass() {
        // full − offdiag = Σ φ(t_k, t_k) ΔB_k², whose mean is ∫ φ(t, t) dt.
        let phi = |t: f64, s: f64| 1.0 + t * s;
        let g = 128;
        let paths = 400;
        let mut gap = 0.0;
        for k in 0..paths {
            let p = simulate_path(&PathEnsembleConfig::new(paths, 5, g).unwrap(), k).unwrap();
            gap += double_ito_sum(phi, &p, false) - double_ito_sum(phi, &p, true);
        }
        gap /= paths as f64;
        let expected = 1.0 + 1.0 / 3.0;
        assert!((gap - expected).abs() < 0.05, "{gap}");
    }

    #[test]
    fn moment_check_requires_enough_paths() {
        let c = PathEnsembleConfig::new(10, 1, 16).unwrap();
        assert!(ito_moment_check(1, &c).is_err());
    }

    #[test]
    fn moment_check_values() {
        let c = PathEnsembleConfig::new(100_000, 314, 64).unwrap();
        let m1 = ito_moment_check(1, &c).unwrap();
        assert!(m1.mean.abs() <= 0.01 && (0.95..=1.05).contains(&m1.variance), "{m1:?}");
        let m2 = ito_moment_check(2, &c).unwrap();
        assert!((0.95..=1.05).contains(&m2.variance), "{m2:?}");
        // h_5 has support width 1/4, so Var = 1/4.
        let m5 = ito_moment_check(5, &c).unwrap();
        assert!((m5.variance - 0.25).abs() <= 0.05 * 0.25, "{m5:?}");
    }
}
