//! Explicit Poisson-kernel machinery for the nonstationary Stokes equations
//! on the half space: fundamental solutions, the composite and commutator
//! kernels, layer potentials, the velocity/pressure representation,
//! modulus-of-continuity norms, and the experiment drivers behind the
//! `stokeskernel` command-line tool.
//!
//! The library is organized like the problem:
//!
//! - [`kernels`] — closed-form and quadrature evaluation of every kernel,
//!   with the singular-integral machinery (four-region splits, principal
//!   value pairing, singularity subtraction) they require;
//! - [`quadrature`] — the deterministic integration engine (adaptive
//!   Gauss–Kronrod, graded time meshes, truncated plane convolutions, FFT
//!   grid convolution);
//! - [`representation`] — boundary fields and the solution operators
//!   (velocity, pressure, single layer, surface potential, the combined
//!   tangential operator and its stabilized cancellation form);
//! - [`moduli`] — modulus-of-continuity profiles and the Dini / logDini
//!   norms with explicit sample grids;
//! - [`experiments`] — reproducible experiment runs (identity suite, L^1
//!   study, region-bound fits, the logarithmic blow-up, the boundedness
//!   contrast) and their CSV/summary/SVG outputs.

pub mod config;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod moduli;
pub mod quadrature;
pub mod representation;
pub mod special;

pub use config::{HeatNorm, KernelConfig};
pub use error::{Error, Result};
