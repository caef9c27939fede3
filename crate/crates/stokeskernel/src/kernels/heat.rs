//! Gaussian heat kernel family in both normalizations, its factorized plane
//! and vertical parts, derivatives up to total order two (including time),
//! and the closed-form time integrals the identity checks lean on.

use crate::config::{HeatNorm, KernelConfig};
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// `Gamma(x, t)` as a function of `|x|^2`, dimension `d`.
#[inline]
pub fn gamma_radial2(r2: f64, t: f64, d: usize, norm: HeatNorm) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let a = norm.scale();
    (a * PI * t).powf(-(d as f64) / 2.0) * (-r2 / (a * t)).exp()
}

/// One-dimensional factor `Gamma_1(z, t)`.
#[inline]
pub fn gamma1(z: f64, t: f64, norm: HeatNorm) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let a = norm.scale();
    (-z * z / (a * t)).exp() / (a * PI * t).sqrt()
}

/// `D_z Gamma_1(z, t)`.
#[inline]
pub fn gamma1_dz(z: f64, t: f64, norm: HeatNorm) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    -(2.0 * z / (norm.scale() * t)) * gamma1(z, t, norm)
}

/// `int_0^T D_z Gamma_1(x_n, s) ds` in closed form (the antiderivative is a
/// complementary error function). The total mass as `T -> inf` is `-1/2` in
/// the standard normalization and `-1` in the paper normalization.
pub fn gamma1_dz_time_integral(x_n: f64, t_upper: f64, norm: HeatNorm) -> f64 {
    let a = norm.scale();
    -(2.0 / a) * libm::erfc(x_n / (a * t_upper).sqrt())
}

/// Plane factor `Gamma'(y', t)` in dimension `n - 1`, as a function of
/// `|y'|^2`.
#[inline]
pub fn gamma_plane_radial2(r2: f64, t: f64, plane_dim: usize, norm: HeatNorm) -> f64 {
    gamma_radial2(r2, t, plane_dim, norm)
}

/// Plane Fourier symbol of `Gamma'(., t)` at squared frequency `rho^2`
/// (transform convention `exp(-2 pi i x.xi)`).
#[inline]
pub fn gauss_symbol(rho2: f64, t: f64, norm: HeatNorm) -> f64 {
    (-norm.scale() * PI * PI * t * rho2).exp()
}

/// One variable of a heat-kernel derivative multi-index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatVar {
    /// Spatial coordinate, zero-based.
    X(usize),
    /// Time.
    T,
}

/// `Gamma(x, t)` with the piecewise-in-time convention: zero for `t < 0`,
/// zero for `t = 0` away from the origin, domain error at `(0, 0)`.
pub fn heat_kernel(x: &[f64], t: f64, cfg: &KernelConfig) -> Result<f64> {
    if x.len() != cfg.n {
        return Err(Error::Domain(format!(
            "point has dimension {}, expected n = {}",
            x.len(),
            cfg.n
        )));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if t == 0.0 {
        if r2 == 0.0 {
            return Err(Error::Domain("heat kernel undefined at x = 0, t = 0".into()));
        }
        return Ok(0.0);
    }
    if t < 0.0 {
        return Ok(0.0);
    }
    Ok(gamma_radial2(r2, t, cfg.n, cfg.heat_norm))
}

/// Closed-form derivative of `Gamma` for a multi-index of total order <= 2
/// over `(x_1, ..., x_n, t)`. Requires `t > 0`.
pub fn heat_kernel_derivative(x: &[f64], t: f64, which: &[HeatVar], cfg: &KernelConfig) -> Result<f64> {
    if x.len() != cfg.n {
        return Err(Error::Domain(format!(
            "point has dimension {}, expected n = {}",
            x.len(),
            cfg.n
        )));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("derivatives need t > 0, got {t}")));
    }
    if which.len() > 2 {
        return Err(Error::Domain(format!(
            "multi-index of order {} unsupported (max 2)",
            which.len()
        )));
    }
    for v in which {
        if let HeatVar::X(i) = v {
            if *i >= cfg.n {
                return Err(Error::Domain(format!("coordinate index {i} out of range")));
            }
        }
    }
    let a = cfg.heat_norm.scale();
    let n = cfg.n as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let g = gamma_radial2(r2, t, cfg.n, cfg.heat_norm);
    // d/dt Gamma = Gamma * p(t), p = r^2/(a t^2) - n/(2t)
    let p = r2 / (a * t * t) - n / (2.0 * t);
    let val = match which {
        [] => g,
        [HeatVar::X(i)] => -(2.0 * x[*i] / (a * t)) * g,
        [HeatVar::T] => g * p,
        [HeatVar::X(i), HeatVar::X(j)] => {
            let kron = if i == j { 1.0 } else { 0.0 };
            (-2.0 * kron / (a * t) + 4.0 * x[*i] * x[*j] / (a * a * t * t)) * g
        }
        [HeatVar::X(j), HeatVar::T] | [HeatVar::T, HeatVar::X(j)] => {
            // d/dt of -(2 x_j / (a t)) Gamma
            (2.0 * x[*j] / (a * t * t)) * g - (2.0 * x[*j] / (a * t)) * g * p
        }
        [HeatVar::T, HeatVar::T] => {
            let dp = -2.0 * r2 / (a * t * t * t) + n / (2.0 * t * t);
            g * (p * p + dp)
        }
        _ => unreachable!(),
    };
    Ok(val)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(n: usize, norm: HeatNorm) -> KernelConfig {
        KernelConfig {
            n,
            heat_norm: norm,
            ..KernelConfig::default()
        }
    }

    #[test]
    fn paper_value_at_origin() {
        let c = cfg(3, HeatNorm::Paper);
        let v = heat_kernel(&[0.0, 0.0, 0.0], 1.0, &c).unwrap();
        assert_relative_eq!(v, (2.0 * PI).powf(-1.5), max_relative = 1e-14);
    }

    #[test]
    fn negative_time_is_zero() {
        for norm in [HeatNorm::Paper, HeatNorm::Standard] {
            let c = cfg(3, norm);
            assert_eq!(heat_kernel(&[0.5, 0.0, 0.0], -1.0, &c).unwrap(), 0.0);
        }
    }

    #[test]
    fn standard_mass_is_one() {
        // product quadrature of the 1-d marginal, cubed
        let c = cfg(3, HeatNorm::Standard);
        let t = 0.37;
        let mut f = |z: f64| heat_kernel(&[z, 0.0, 0.0], t, &c).unwrap() / gamma1(0.0, t, HeatNorm::Standard).powi(2);
        let m1 = crate::quadrature::adaptive_1d(&mut f, -12.0, 12.0, 1e-12).value;
        assert_relative_eq!(m1.powi(3), 1.0, max_relative = 1e-9);
    }

    #[test]
    fn odd_derivative_vanishes_at_origin() {
        let c = cfg(3, HeatNorm::Standard);
        for t in [0.1, 1.0, 10.0] {
            let v = heat_kernel_derivative(&[0.0; 3], t, &[HeatVar::X(0)], &c).unwrap();
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn vertical_derivative_is_odd() {
        let c = cfg(3, HeatNorm::Standard);
        let up = heat_kernel_derivative(&[0.4, -0.1, 0.8], 0.6, &[HeatVar::X(2)], &c).unwrap();
        let dn = heat_kernel_derivative(&[0.4, -0.1, -0.8], 0.6, &[HeatVar::X(2)], &c).unwrap();
        assert_relative_eq!(up, -dn, max_relative = 1e-14);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = cfg(3, HeatNorm::Standard);
        let x = [1.0, 1.0, 1.0];
        let t = 0.7;
        let h = 1e-5;
        let g = |xv: &[f64], tv: f64| heat_kernel(xv, tv, &c).unwrap();
        // first spatial
        let fd = (g(&[1.0 + h, 1.0, 1.0], t) - g(&[1.0 - h, 1.0, 1.0], t)) / (2.0 * h);
        let an = heat_kernel_derivative(&x, t, &[HeatVar::X(0)], &c).unwrap();
        assert_relative_eq!(an, fd, max_relative = 1e-6);
        // vertical, against the factorized form
        let an = heat_kernel_derivative(&x, t, &[HeatVar::X(2)], &c).unwrap();
        let fact = gamma_plane_radial2(2.0, t, 2, HeatNorm::Standard) * gamma1_dz(1.0, t, HeatNorm::Standard);
        assert_relative_eq!(an, fact, max_relative = 1e-12);
        // time
        let fd = (g(&x, t + h) - g(&x, t - h)) / (2.0 * h);
        let an = heat_kernel_derivative(&x, t, &[HeatVar::T], &c).unwrap();
        assert_relative_eq!(an, fd, max_relative = 1e-6);
        // mixed space-time
        let fd = (g(&[1.0 + h, 1.0, 1.0], t + h) - g(&[1.0 - h, 1.0, 1.0], t + h)
            - g(&[1.0 + h, 1.0, 1.0], t - h)
            + g(&[1.0 - h, 1.0, 1.0], t - h))
            / (4.0 * h * h);
        let an = heat_kernel_derivative(&x, t, &[HeatVar::X(0), HeatVar::T], &c).unwrap();
        assert_relative_eq!(an, fd, max_relative = 1e-4);
        // second spatial, mixed
        let fd = (g(&[1.0 + h, 1.0 + h, 1.0], t) - g(&[1.0 - h, 1.0 + h, 1.0], t)
            - g(&[1.0 + h, 1.0 - h, 1.0], t)
            + g(&[1.0 - h, 1.0 - h, 1.0], t))
            / (4.0 * h * h);
        let an = heat_kernel_derivative(&x, t, &[HeatVar::X(0), HeatVar::X(1)], &c).unwrap();
        assert_relative_eq!(an, fd, max_relative = 1e-4);
    }

    #[test]
    fn vertical_mass_closed_form_matches_quadrature() {
        for norm in [HeatNorm::Standard, HeatNorm::Paper] {
            let xn = 0.45;
            let t_up = 3.0;
            let mut f = |s: f64| gamma1_dz(xn, s, norm);
            let q = crate::quadrature::adaptive_1d(&mut f, 1e-12, t_up, 1e-12).value;
            assert_relative_eq!(q, gamma1_dz_time_integral(xn, t_up, norm), max_relative = 1e-8);
        }
    }

    #[test]
    fn order_three_is_unsupported() {
        let c = cfg(2, HeatNorm::Standard);
        let w = [HeatVar::X(0), HeatVar::X(0), HeatVar::X(1)];
        assert!(heat_kernel_derivative(&[0.1, 0.1], 1.0, &w, &c).is_err());
    }
}
