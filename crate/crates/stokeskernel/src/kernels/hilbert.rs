//! Hilbert transform of an interval indicator, in the `1/(pi x)` convention:
//! `H[chi_(a,b)](x) = (ln|x - a| - ln|x - b|) / pi`.

use crate::error::{Error, Result};
use std::f64::consts::PI;

pub fn hilbert_of_indicator(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Domain(format!("need a < b, got a = {a}, b = {b}")));
    }
    if x == a || x == b {
        return Err(Error::Domain(format!(
            "logarithmic singularity at the interval endpoint x = {x}"
        )));
    }
    Ok(((x - a).abs().ln() - (x - b).abs().ln()) / PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_1d;
    use approx::assert_relative_eq;

    #[test]
    fn symmetric_point_vanishes() {
        assert_eq!(hilbert_of_indicator(-1.0, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn outside_value() {
        let v = hilbert_of_indicator(-1.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(v, 3.0_f64.ln() / PI, max_relative = 1e-14);
    }

    #[test]
    fn inside_value() {
        let v = hilbert_of_indicator(-1.0, 1.0, 0.9).unwrap();
        assert_relative_eq!(v, (1.9_f64.ln() - 0.1_f64.ln()) / PI, max_relative = 1e-14);
    }

    #[test]
    fn endpoint_is_domain_error() {
        assert!(hilbert_of_indicator(-1.0, 1.0, 1.0).is_err());
        assert!(hilbert_of_indicator(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn matches_principal_value_quadrature() {
        // pv int_a^b dy / (pi (x - y)), symmetric pairing around y = x when
        // x lies inside the interval
        let (a, b) = (-1.0, 1.0);
        for x in [-3.0, -1.3, 0.4, 0.85, 1.7, 5.0] {
            let pv = if x < a || x > b {
                let mut f = |y: f64| 1.0 / (PI * (x - y));
                adaptive_1d(&mut f, a, b, 1e-13).value
            } else {
                let w = (x - a).min(b - x);
                let mut paired = |u: f64| {
                    // 1/(x-y) at y = x-u plus y = x+u cancels; remainder is 0
                    let _ = u;
                    0.0
                };
                let core = adaptive_1d(&mut paired, 0.0, w, 1e-13).value;
                let rest = if x - a < b - x {
                    let mut f = |y: f64| 1.0 / (PI * (x - y));
                    adaptive_1d(&mut f, x + w, b, 1e-13).value
                } else {
                    let mut f = |y: f64| 1.0 / (PI * (x - y));
                    adaptive_1d(&mut f, a, x - w, 1e-13).value
                };
                core + rest
            };
            let closed = hilbert_of_indicator(a, b, x).unwrap();
            assert_relative_eq!(pv, closed, max_relative = 1e-9, epsilon = 1e-12);
        }
    }
}
