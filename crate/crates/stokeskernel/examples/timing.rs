use std::time::Instant;
use stokeskernel::config::KernelConfig;
use stokeskernel::kernels::riesz::{riesz_region_values, riesz_gauss_convolution, RieszMethod};

fn main() {
    let c = KernelConfig::with_dim(3);
    for tol in [1e-8, 1e-10] {
        let t0 = Instant::now();
        let v = riesz_region_values(0, &[1.2, 0.0], 0.8, &c, tol).unwrap();
        println!("regions tol={tol:.0e}: {:?} sum={:.9e}", t0.elapsed(), v.iter().sum::<f64>());
    }
    let t0 = Instant::now();
    let v = riesz_gauss_convolution(0, &[1.0, 0.0], 0.05, &c, RieszMethod::Direct).unwrap();
    println!("direct(1,t=0.05): {:?} v={v:.6e}", t0.elapsed());
    let t0 = Instant::now();
    let v = riesz_gauss_convolution(0, &[1.0, 0.0], 1.0, &c, RieszMethod::Spectral).unwrap();
    println!("spectral(1,1): {:?} v={v:.6e}", t0.elapsed());
}
