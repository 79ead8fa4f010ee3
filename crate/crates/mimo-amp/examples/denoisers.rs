//! The four posterior-mean denoisers on a line scan: exact discrete
//! (LAMA), mismatched Gaussian, hypercube, and the clipping limit.
//!
//! Run with: cargo run --release --example denoisers

use mimo_amp::constellation::Constellation;
use mimo_amp::denoiser::{Denoiser, Tau};
use num_complex::Complex64;

fn main() {
    let prior = Constellation::make_qam(4).unwrap();
    let energy = prior.moments().energy;
    let tau = 0.3;
    let denoisers = [
        Denoiser::Discrete(prior.clone()),
        Denoiser::Gaussian { energy },
        Denoiser::Hypercube { alpha: 1.0 },
        Denoiser::BoxClip { alpha: 1.0 },
    ];
    println!("QPSK, tau = {tau}; real-axis scan of F(z) and its derivative\n");
    print!("{:>6}", "z");
    for d in &denoisers {
        print!(" {:>10} {:>8}", d.label(), "F'");
    }
    println!();
    for i in 0..13 {
        let z = -3.0 + 0.5 * i as f64;
        print!("{z:>6.2}");
        for d in &denoisers {
            let (f, deriv) = d.apply_with_deriv(Complex64::new(z, 0.0), Tau::Value(tau));
            print!(" {:>10.4} {:>8.4}", f.re, deriv);
        }
        println!();
    }
    println!("\nAs tau -> 0 the hypercube denoiser approaches the clip function:");
    let z = Complex64::new(1.4, -0.3);
    for tau in [1.0, 0.1, 1e-2, 1e-4, 1e-8] {
        let (h, _) = denoisers[2].apply_with_deriv(z, Tau::Value(tau));
        println!("  tau = {tau:<8.0e} F_hyper({z}) = {h}");
    }
    let (clip, _) = denoisers[3].apply_with_deriv(z, Tau::Zero);
    println!("  clip limit        = {clip}");
}
