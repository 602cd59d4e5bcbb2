//! Haar wavelet collocation for two-dimensional linear stochastic Volterra
//! integral equations of the second kind, with Monte Carlo averaging over
//! Brownian paths.

pub mod brownian;
pub mod cli;
pub mod error;
pub mod haar_basis;
pub mod linalg;
pub mod montecarlo;
pub mod oracles;
pub mod svie_solver;
pub mod tensor_coeffs;

pub use error::{Error, Result};
