//! Fundamental solution of the Laplace equation and its first and second
//! derivatives, in the split coordinates `(w', h)` the plane convolutions
//! work in.
//!
//! For `n >= 3` the solution is `E(x) = -|x|^{2-n} / ((n-2) omega_n)`; in
//! dimension two the log convention `E(x) = ln|x| / (2 pi)` is used so that
//! the boundary trace of the gradient is `D_1 E(y_1, 0) = 1 / (2 pi y_1)`.

use crate::config::KernelConfig;
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Dimension and normalization of the Laplace fundamental solution, with
/// allocation-free evaluators used in quadrature hot loops.
#[derive(Clone, Copy, Debug)]
pub struct LaplaceKernel {
    pub n: usize,
    pub omega_n: f64,
}

impl LaplaceKernel {
    pub fn new(cfg: &KernelConfig) -> Self {
        LaplaceKernel {
            n: cfg.n,
            omega_n: cfg.omega_n(),
        }
    }

    #[inline]
    fn pow_half(&self, r2: f64, k: i32) -> f64 {
        // r2^(k/2) for the small integer exponents that occur here
        match k {
            1 => r2.sqrt(),
            2 => r2,
            3 => r2 * r2.sqrt(),
            4 => r2 * r2,
            5 => r2 * r2 * r2.sqrt(),
            _ => r2.powf(k as f64 / 2.0),
        }
    }

    /// `E(w', h)`.
    #[inline]
    pub fn eval(&self, w: &[f64], h: f64) -> f64 {
        let r2 = w.iter().map(|v| v * v).sum::<f64>() + h * h;
        if self.n == 2 {
            r2.ln() / (4.0 * PI)
        } else {
            -1.0 / ((self.n as f64 - 2.0) * self.omega_n * self.pow_half(r2, self.n as i32 - 2))
        }
    }

    /// `D_i E(w', h)`, `i` zero-based; `i = n-1` selects the vertical slot.
    #[inline]
    pub fn grad(&self, i: usize, w: &[f64], h: f64) -> f64 {
        let r2 = w.iter().map(|v| v * v).sum::<f64>() + h * h;
        let xi = if i + 1 == self.n { h } else { w[i] };
        xi / (self.omega_n * self.pow_half(r2, self.n as i32))
    }

    /// `D_i D_j E(w', h)`, zero-based indices.
    #[inline]
    pub fn hessian(&self, i: usize, j: usize, w: &[f64], h: f64) -> f64 {
        let r2 = w.iter().map(|v| v * v).sum::<f64>() + h * h;
        let xi = if i + 1 == self.n { h } else { w[i] };
        let xj = if j + 1 == self.n { h } else { w[j] };
        let kron = if i == j { r2 } else { 0.0 };
        (kron - self.n as f64 * xi * xj) / (self.omega_n * self.pow_half(r2, self.n as i32 + 2))
    }
}

fn check_nonzero(x: &[f64], cfg: &KernelConfig) -> Result<()> {
    if x.len() != cfg.n {
        return Err(Error::Domain(format!(
            "point has dimension {}, expected n = {}",
            x.len(),
            cfg.n
        )));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::Domain("fundamental solution is singular at the origin".into()));
    }
    Ok(())
}

/// `E(x)` for a full point `x` in R^n.
pub fn laplace_fundamental(x: &[f64], cfg: &KernelConfig) -> Result<f64> {
    check_nonzero(x, cfg)?;
    let k = LaplaceKernel::new(cfg);
    Ok(k.eval(&x[..cfg.n - 1], x[cfg.n - 1]))
}

/// Full gradient `(D_1 E, ..., D_n E)(x)`.
pub fn laplace_fundamental_gradient(x: &[f64], cfg: &KernelConfig) -> Result<Vec<f64>> {
    check_nonzero(x, cfg)?;
    let k = LaplaceKernel::new(cfg);
    Ok((0..cfg.n).map(|i| k.grad(i, &x[..cfg.n - 1], x[cfg.n - 1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(n: usize) -> KernelConfig {
        KernelConfig::with_dim(n)
    }

    #[test]
    fn unit_distance_value_n3() {
        let v = laplace_fundamental(&[1.0, 0.0, 0.0], &cfg(3)).unwrap();
        assert_relative_eq!(v, -1.0 / (4.0 * PI), max_relative = 1e-14);
    }

    #[test]
    fn homogeneity_n3() {
        let c = cfg(3);
        let v1 = laplace_fundamental(&[1.0, 0.0, 0.0], &c).unwrap();
        let v2 = laplace_fundamental(&[2.0, 0.0, 0.0], &c).unwrap();
        assert_relative_eq!(v2, v1 / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn log_convention_vanishes_at_unit_radius() {
        let v = laplace_fundamental(&[0.6, 0.8], &cfg(2)).unwrap();
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for n in [2usize, 3] {
            let c = cfg(n);
            let x: Vec<f64> = (0..n).map(|k| 0.4 + 0.3 * k as f64).collect();
            let g = laplace_fundamental_gradient(&x, &c).unwrap();
            let h = 1e-6;
            for i in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (laplace_fundamental(&xp, &c).unwrap() - laplace_fundamental(&xm, &c).unwrap())
                    / (2.0 * h);
                assert_relative_eq!(g[i], fd, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn gradient_reference_values() {
        let g3 = laplace_fundamental_gradient(&[1.0, 0.0, 0.0], &cfg(3)).unwrap();
        assert_relative_eq!(g3[0], 1.0 / (4.0 * PI), max_relative = 1e-14);
        assert!(g3[1].abs() < 1e-16 && g3[2].abs() < 1e-16);
        let g2 = laplace_fundamental_gradient(&[1.0, 0.0], &cfg(2)).unwrap();
        assert_relative_eq!(g2[0], 1.0 / (2.0 * PI), max_relative = 1e-14);
    }

    #[test]
    fn gradient_is_odd() {
        let c = cfg(3);
        let x = [0.3, -0.2, 0.9];
        let xm = [-0.3, 0.2, -0.9];
        let g = laplace_fundamental_gradient(&x, &c).unwrap();
        let gm = laplace_fundamental_gradient(&xm, &c).unwrap();
        for i in 0..3 {
            assert_relative_eq!(g[i], -gm[i], max_relative = 1e-14);
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        for n in [2usize, 3] {
            let c = cfg(n);
            let k = LaplaceKernel::new(&c);
            let w: Vec<f64> = (0..n - 1).map(|j| 0.5 - 0.2 * j as f64).collect();
            let h0 = 0.7;
            let eps = 1e-5;
            for i in 0..n {
                for j in 0..n {
                    let grad_at = |wv: &[f64], hv: f64| k.grad(i, wv, hv);
                    let fd = if j + 1 == n {
                        (grad_at(&w, h0 + eps) - grad_at(&w, h0 - eps)) / (2.0 * eps)
                    } else {
                        let mut wp = w.clone();
                        let mut wm = w.clone();
                        wp[j] += eps;
                        wm[j] -= eps;
                        (grad_at(&wp, h0) - grad_at(&wm, h0)) / (2.0 * eps)
                    };
                    assert_relative_eq!(k.hessian(i, j, &w, h0), fd, max_relative = 1e-7);
                }
            }
        }
    }

    #[test]
    fn origin_is_domain_error() {
        assert!(laplace_fundamental(&[0.0, 0.0, 0.0], &cfg(3)).is_err());
    }
}
