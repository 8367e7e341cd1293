//! Weighted symbol calculus for pseudo-difference operators on truncated
//! periodic lattices.
//!
//! The library samples symbols `sigma(k, x)` on a window `{-K, ..., K}^n`
//! of the integer lattice paired with its dual frequency grid, and builds
//! the whole operator calculus on top of exact kernel algebra:
//!
//! - [`lattice`]: box geometry, discrete Fourier transform, difference
//!   operators, falling factorials;
//! - [`weights`]: weight functions with growth/difference estimate
//!   validation;
//! - [`symbols`]: symbol grids, class seminorm reports, M-ellipticity,
//!   elliptic quotients, asymptotic sums;
//! - [`quantize`]: operator kernels, composition / adjoint / transpose
//!   (exact and asymptotic), lattice-toroidal duality, parametrices;
//! - [`sobolev`]: the weighted Sobolev scale, a-priori inequality probes,
//!   compactness probes;
//! - [`fredholm`]: nullspace dimensions, symbol traces, index reports.
//!
//! Everything numeric is generic over the floating scalar through
//! [`scalar::Scalar`] (`f32` or `f64`); the `*64` aliases below fix the
//! `f64` instantiation that the stated tolerances are calibrated for.

pub mod error;
pub mod fit;
pub mod fredholm;
pub mod lattice;
pub mod matrix;
pub mod quantize;
pub mod rng;
pub mod scalar;
pub mod sobolev;
pub mod symbols;
pub mod weights;

pub use error::{CoreError, Result};
pub use scalar::{Cplx, Scalar};

/// Complex sample type at the default precision.
pub type C64 = Cplx<f64>;

pub type LatticeBox64 = lattice::LatticeBox;
pub type LatticeFunction64 = lattice::LatticeFunction<f64>;
pub type TorusFunction64 = lattice::TorusFunction<f64>;
pub type WeightFunction64 = weights::WeightFunction<f64>;
pub type SymbolGrid64 = symbols::SymbolGrid<f64>;
pub type ClassReport64 = symbols::ClassReport<f64>;
pub type OperatorMatrix64 = quantize::OperatorMatrix<f64>;
pub type ParametrixResult64 = quantize::ParametrixResult<f64>;
pub type SobolevSpec64 = sobolev::SobolevSpec<f64>;
pub type FredholmReport64 = fredholm::FredholmReport<f64>;
