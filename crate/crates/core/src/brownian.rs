//! Brownian paths on a uniform dyadic grid and the stochastic Haar integral
//! `q_{i,1}(y) = ∫_0^y h_i(u) dB(u)`.
//!
//! Increments are rounded to multiples of [`LATTICE`] before accumulation, so
//! every path value is an exact binary fraction and all sums and differences
//! of path values are computed without rounding. The closed form of
//! `q_{i,1}` and the left-point Riemann–Stieltjes sum therefore agree bit for
//! bit.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar_basis::{decompose_index, HaarIndex};

/// Quantum of the path values, `2^-36`.
pub const LATTICE: f64 = 1.0 / (1u64 << 36) as f64;

/// Absolute tolerance when matching a coordinate to a grid node.
pub const NODE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathEnsembleConfig {
    pub paths: usize,
    pub seed: u64,
    pub grid_count: usize,
}

impl PathEnsembleConfig {
    pub fn new(paths: usize, seed: u64, grid_count: usize) -> Result<Self> {
        if paths < 1 {
            return Err(Error::Config("ensemble needs at least one path".into()));
        }
        if grid_count < 4 {
            return Err(Error::Config(format!("grid count {grid_count} < 4")));
        }
        Ok(Self {
            paths,
            seed,
            grid_count,
        })
    }

    /// Ensemble whose grid serves collocation at levels `(level_x, level_y)`.
    pub fn for_levels(paths: usize, seed: u64, level_x: u32, level_y: u32) -> Result<Self> {
        Self::new(paths, seed, grid_count_for(level_x, level_y, 1))
    }
}

/// `4 · lcm(M, N) · refinement`: the coarsest grid holding every breakpoint
/// and collocation point of both axes.
pub fn grid_count_for(level_x: u32, level_y: u32, refinement: usize) -> usize {
    // M and N are powers of two, so the lcm is the larger one.
    4 * (1usize << level_x.max(level_y)) * refinement.max(1)
}

/// One realized path, `values[k] = B(k · step)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    step: f64,
    values: Vec<f64>,
    origin: Option<(u64, usize)>,
}

impl BrownianPath {
    /// Wraps externally supplied node values. `values[0]` must be zero.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Domain("a path needs at least two nodes".into()));
        }
        if values[0] != 0.0 {
            return Err(Error::Domain(format!("B(0) = {} != 0", values[0])));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite path value {v}")));
        }
        let cells = values.len() - 1;
        Ok(Self {
            step: 1.0 / cells as f64,
            values,
            origin: None,
        })
    }

    /// A path with every increment zero.
    pub fn zero(grid_count: usize) -> Self {
        Self::from_values(vec![0.0; grid_count + 1]).expect("valid zero path")
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of cells `G`.
    pub fn grid_count(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(seed, path_index)` for simulated paths.
    pub fn origin(&self) -> Option<(u64, usize)> {
        self.origin
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// Index `k` of the node `k · step` matching `t`.
    pub fn node(&self, t: f64) -> Result<usize> {
        let k = (t / self.step).round();
        if !(0.0..=self.grid_count() as f64).contains(&k) || (k * self.step - t).abs() > NODE_TOLERANCE {
            return Err(Error::OffGrid { t, step: self.step });
        }
        Ok(k as usize)
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.node(t)?])
    }

    /// `∫_0^y h dB` for a decomposed basis function.
    pub fn haar_integral(&self, h: &HaarIndex, y: f64) -> Result<f64> {
        let b_y = self.value_at(y)?;
        match h {
            HaarIndex::Constant => Ok(b_y),
            HaarIndex::Wavelet(w) => {
                let b_alpha = self.value_at(w.alpha)?;
                let b_beta = self.value_at(w.beta)?;
                let b_gamma = self.value_at(w.gamma)?;
                Ok(if y < w.alpha {
                    0.0
                } else if y < w.beta {
                    b_y - b_alpha
                } else if y < w.gamma {
                    2.0 * b_beta - b_alpha - b_y
                } else {
                    2.0 * b_beta - b_alpha - b_gamma
                })
            }
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "t", "B"]).map_err(csv_err)?;
        for (k, v) in self.values.iter().enumerate() {
            let t = k as f64 * self.step;
            w.write_record([k.to_string(), t.to_string(), v.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `k,t,B` table written by [`BrownianPath::write_csv`].
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut values = Vec::new();
        let mut times = Vec::new();
        for (row, record) in r.deserialize::<(usize, f64, f64)>().enumerate() {
            let (k, t, b) = record.map_err(csv_err)?;
            if k != row {
                return Err(Error::Domain(format!("row {row} carries node index {k}")));
            }
            times.push(t);
            values.push(b);
        }
        let path = Self::from_values(values)?;
        for (k, t) in times.into_iter().enumerate() {
            if (k as f64 * path.step - t).abs() > NODE_TOLERANCE {
                return Err(Error::OffGrid { t, step: path.step });
            }
        }
        Ok(path)
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Domain(format!("malformed path csv: {other:?}")),
    }
}

fn to_lattice(x: f64) -> f64 {
    (x / LATTICE).round() * LATTICE
}

/// Simulates path `path_index` of the ensemble. Each index draws from its own
/// ChaCha stream keyed by the ensemble seed, so results do not depend on the
/// order in which paths are generated.
pub fn simulate_path(config: &PathEnsembleConfig, path_index: usize) -> Result<BrownianPath> {
    if path_index >= config.paths {
        return Err(Error::Domain(format!(
            "path index {path_index} out of range for {} paths",
            config.paths
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(path_index as u64);
    let g = config.grid_count;
    let sd = (1.0 / g as f64).sqrt();
    let mut values = Vec::with_capacity(g + 1);
    let mut b = 0.0;
    values.push(b);
    for _ in 0..g {
        let z: f64 = rng.sample(StandardNormal);
        b += to_lattice(sd * z);
        values.push(b);
    }
    Ok(BrownianPath {
        step: 1.0 / g as f64,
        values,
        origin: Some((config.seed, path_index)),
    })
}

pub fn path_value(path: &BrownianPath, t: f64) -> Result<f64> {
    path.value_at(t)
}

/// `q_{i,1}(y)`. Zero before the support, `2B(β) − B(α) − B(γ)` past it.
pub fn q_int(i: usize, y: f64, path: &BrownianPath) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("coordinate {y} outside [0, 1]")));
    }
    path.haar_integral(&decompose_index(i)?, y)
}
