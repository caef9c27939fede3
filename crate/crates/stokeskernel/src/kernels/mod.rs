//! Closed-form and quadrature evaluation of the half-space Stokes kernels.
//!
//! The naming follows the objects: `laplace` holds the Laplace fundamental
//! solution and its derivatives, `heat` the Gaussian kernel family, `riesz`
//! the plane Gaussian–Riesz convolution `R_i`, `stokes` the composite kernel,
//! the commutator kernel `B_in`, the velocity kernel blocks `L_ij` / `K_ij`,
//! and the pressure kernel, `bounds` the four-region envelope estimates, and
//! `hilbert` the explicit transform of an interval indicator.

pub mod bounds;
pub mod heat;
pub mod hilbert;
pub mod laplace;
pub mod riesz;
pub mod stokes;

use crate::config::KernelConfig;
use crate::error::{Error, Result};

/// A point `x = (x', x_n)` in the open upper half space, `x_n > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpacePoint {
    pub x_prime: Vec<f64>,
    pub x_n: f64,
}

impl HalfSpacePoint {
    pub fn new(x_prime: Vec<f64>, x_n: f64, cfg: &KernelConfig) -> Result<Self> {
        if x_prime.len() != cfg.plane_dim() {
            return Err(Error::Domain(format!(
                "tangential coordinate has length {}, expected n-1 = {}",
                x_prime.len(),
                cfg.plane_dim()
            )));
        }
        if !(x_n > 0.0) {
            return Err(Error::Domain(format!("x_n must be positive, got {x_n}")));
        }
        Ok(HalfSpacePoint { x_prime, x_n })
    }

    /// Unchecked constructor for internal sweeps that already guarantee the
    /// invariants.
    pub fn unchecked(x_prime: Vec<f64>, x_n: f64) -> Self {
        HalfSpacePoint { x_prime, x_n }
    }

    pub fn norm_prime(&self) -> f64 {
        self.x_prime.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A kernel value split into its regular part and the coefficient of the
/// instantaneous `delta(t)` term. Kernels without a Dirac term carry
/// `delta_coeff = 0`; the Dirac term is never discretized, callers apply it
/// as a trace contribution at the evaluation time.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KernelValueWithDelta {
    pub regular: f64,
    pub delta_coeff: f64,
}
