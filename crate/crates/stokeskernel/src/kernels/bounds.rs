//! Four-region envelope bounds for the Gaussian–Riesz integrand and the
//! logarithmic support factor `a(M, s)`.
//!
//! The bounds are evaluated with unit constants `c = C = 1`; callers fit the
//! single multiplicative constant over their grids. The two integral-form
//! lines reduce to one-dimensional radial integrals evaluated here by
//! adaptive quadrature.

use crate::config::KernelConfig;
use crate::error::{Error, Result};
use crate::quadrature::adaptive_1d;
use crate::special::unit_sphere_area;

/// The four integration regions, split by `|y'|` against `|x'|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// `|y'| <= |x'|/2`.
    NearOrigin,
    /// `|x'|/2 <= |y'| <= 2|x'|` with `|x' - y'| >= |x'|/2`.
    Annulus,
    /// `|x' - y'| <= |x'|/2`.
    NearSingularity,
    /// `|y'| >= 2|x'|`.
    Far,
}

/// `int_{|y| <= rho} |y|^2 e^{-|y|^2} dy` over the plane of dimension `d`.
fn ball_second_moment(rho: f64, d: usize) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let sigma = unit_sphere_area(d);
    let mut f = |r: f64| r.powi(d as i32 + 1) * (-r * r).exp();
    sigma * adaptive_1d(&mut f, 0.0, rho.min(9.0), 1e-12).value
}

/// `int_{|y| >= rho} |y|^{-n+1} e^{-|y|^2} dy` over the plane of dimension
/// `d = n - 1`; the radial weight collapses to `r^{-1} e^{-r^2}`.
fn far_tail(rho: f64, d: usize) -> f64 {
    let sigma = unit_sphere_area(d);
    let hi = (rho * rho + 45.0).sqrt();
    let mut f = |r: f64| (-r * r).exp() / r;
    sigma * adaptive_1d(&mut f, rho, hi, 1e-13).value
}

/// Right-hand side of the matching region estimate with unit constants.
pub fn region_bound(region: Region, x_prime: &[f64], t: f64, cfg: &KernelConfig) -> Result<f64> {
    if x_prime.len() != cfg.plane_dim() {
        return Err(Error::Domain(format!(
            "x' has length {}, expected {}",
            x_prime.len(),
            cfg.plane_dim()
        )));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("region bounds need t > 0, got {t}")));
    }
    let a = x_prime.iter().map(|v| v * v).sum::<f64>().sqrt();
    if a == 0.0 && !matches!(region, Region::Far) {
        return Err(Error::Domain("region split degenerates at x' = 0".into()));
    }
    let n = cfg.n as f64;
    let d = cfg.plane_dim();
    let decay = (-a * a / t).exp();
    let v = match region {
        Region::NearOrigin => {
            t.powf(-(n - 1.0) / 2.0) * decay
                + a.powf(-n + 1.0) * ball_second_moment(0.5 * a / t.sqrt(), d)
        }
        Region::Annulus => t.powf(-n / 2.0 + 0.5) * decay,
        Region::NearSingularity => t.powf(-(n + 1.0) / 2.0) * a * a * decay,
        Region::Far => {
            if a == 0.0 {
                return Err(Error::Domain("far-region bound diverges at x' = 0".into()));
            }
            t.powf((-n + 1.0) / 2.0) * far_tail(2.0 * a / t.sqrt(), d)
        }
    };
    Ok(v)
}

/// `a(M, s) = ln M - ln min(sqrt(s), M)`, the logarithmic factor in the
/// aggregate Gaussian–Riesz estimate over a support ball of radius `M`.
pub fn a_factor(m: f64, s: f64) -> Result<f64> {
    if !(m > 0.0) || !(s > 0.0) {
        return Err(Error::Domain(format!("a(M, s) needs M, s > 0, got M = {m}, s = {s}")));
    }
    Ok(m.ln() - s.sqrt().min(m).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn cfg(n: usize) -> KernelConfig {
        KernelConfig::with_dim(n)
    }

    #[test]
    fn far_bound_vanishes_as_t_shrinks() {
        let c = cfg(3);
        let x = [1.0, 0.0];
        let mut prev = f64::INFINITY;
        for t in [1.0, 0.3, 0.1, 0.03] {
            let b = region_bound(Region::Far, &x, t, &c).unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 1e-10);
    }

    #[test]
    fn annulus_bound_literal_value() {
        // |x'| = 1, t = 1: t^{-n/2+1/2} e^{-|x'|^2/t} = e^{-1} for n = 3
        let c = cfg(3);
        let b = region_bound(Region::Annulus, &[1.0, 0.0], 1.0, &c).unwrap();
        assert_relative_eq!(b, 1.0 / E, max_relative = 1e-14);
    }

    #[test]
    fn near_singularity_vanishes_quadratically() {
        let c = cfg(3);
        let t = 0.8;
        let b1 = region_bound(Region::NearSingularity, &[0.01, 0.0], t, &c).unwrap();
        let b2 = region_bound(Region::NearSingularity, &[0.005, 0.0], t, &c).unwrap();
        assert_relative_eq!(b1 / b2, 4.0, max_relative = 1e-3);
    }

    #[test]
    fn a_factor_cases() {
        assert_eq!(a_factor(2.0, 9.0).unwrap(), 0.0); // s >= M^2
        assert_relative_eq!(a_factor(2.0, 1.0).unwrap(), 2.0_f64.ln(), max_relative = 1e-15);
        // monotone nonincreasing in s
        let mut prev = f64::INFINITY;
        for s in [0.01, 0.1, 1.0, 4.0, 100.0] {
            let v = a_factor(2.0, s).unwrap();
            assert!(v <= prev && v >= 0.0);
            prev = v;
        }
    }
}
