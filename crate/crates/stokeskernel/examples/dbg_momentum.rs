use stokeskernel::config::KernelConfig;
use stokeskernel::kernels::stokes::{kernel_k, kernel_pressure};
use stokeskernel::kernels::HalfSpacePoint;

fn main() {
    let c = KernelConfig::with_dim(2);
    let (w0, xn, tau) = (0.4_f64, 0.5_f64, 0.35_f64);
    let h = 1e-3;
    let kreg = |i: usize, j: usize, a: f64, b: f64, tt: f64| {
        kernel_k(i, j, &HalfSpacePoint::unchecked(vec![a], b), tt, &c).unwrap().regular
    };
    let preg = |j: usize, a: f64, b: f64, tt: f64| {
        kernel_pressure(j, &HalfSpacePoint::unchecked(vec![a], b), tt, &c).unwrap().regular
    };
    for j in 0..2 {
        for i in 0..2 {
            let dt = (kreg(i, j, w0, xn, tau + h) - kreg(i, j, w0, xn, tau - h)) / (2.0 * h);
            let lap = (kreg(i, j, w0 + h, xn, tau) + kreg(i, j, w0 - h, xn, tau)
                + kreg(i, j, w0, xn + h, tau) + kreg(i, j, w0, xn - h, tau)
                - 4.0 * kreg(i, j, w0, xn, tau)) / (h * h);
            let gp = if i == 0 {
                (preg(j, w0 + h, xn, tau) - preg(j, w0 - h, xn, tau)) / (2.0 * h)
            } else {
                (preg(j, w0, xn + h, tau) - preg(j, w0, xn - h, tau)) / (2.0 * h)
            };
            println!("i={i} j={j}: dt={dt:+.6e} lap={lap:+.6e} gradp={gp:+.6e} resid={:+.6e}  (dt-lap={:+.6e})",
                     dt - lap + gp, dt - lap);
        }
    }
}
