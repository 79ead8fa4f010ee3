//! Fixed-point structure of the state-evolution equation
//! sigma^2 = N0 + beta Psi*(sigma^2): uniqueness below the minimum
//! recovery threshold, multiplicity above it.
//!
//! Run with: cargo run --release --example fixed_points

use mimo_amp::amp::TuningPolicy;
use mimo_amp::constellation::Constellation;
use mimo_amp::denoiser::{Denoiser, Tau};
use mimo_amp::state_evolution::{fixed_point, MseObjective};

fn main() {
    let prior = Constellation::make_qam(4).unwrap();

    // clip denoiser: unique fixed point for every beta and N0
    let clip = MseObjective::complex(&prior, &Denoiser::BoxClip { alpha: 1.0 });
    println!("boxclip / QPSK (MRT = 2): always a unique fixed point");
    for (beta, n0) in [(0.5, 0.1), (1.5, 0.01), (2.5, 0.01)] {
        let fp = fixed_point(beta, n0, &clip, &TuningPolicy::FixedTau(Tau::Zero));
        println!(
            "  beta = {beta:<4} N0 = {n0:<5} solutions = {:?}",
            fp.solutions
        );
    }

    // matched discrete prior: the classic S-curve with three solutions
    // once beta exceeds the threshold at small noise
    let matched = MseObjective::complex(&prior, &Denoiser::Discrete(prior.clone()));
    println!("\nlama / QPSK (matched prior): multiplicity above the threshold");
    for (beta, n0) in [(1.5, 0.01), (2.2, 0.01)] {
        let fp = fixed_point(beta, n0, &matched, &TuningPolicy::Matched);
        println!(
            "  beta = {beta:<4} N0 = {n0:<5} solutions = {:?} (SE converges to {:.6})",
            fp.solutions, fp.converged_to
        );
    }
    println!("\nThe recursion always converges to the largest solution; the");
    println!("low-error branch below it is unreachable from the natural");
    println!("initialization sigma_1^2 = N0 + beta Var[S0].");
}
