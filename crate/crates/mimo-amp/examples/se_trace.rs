//! State evolution: the scalar recursion tracking the AMP decoupled noise
//! variance sigma_t^2, for several denoisers side by side.
//!
//! Run with: cargo run --release --example se_trace

use mimo_amp::amp::TuningPolicy;
use mimo_amp::constellation::Constellation;
use mimo_amp::denoiser::Denoiser;
use mimo_amp::state_evolution::{run_se, ser_prediction, MseObjective};

fn main() {
    let prior = Constellation::make_qam(4).unwrap();
    let energy = prior.moments().energy;
    let (beta, n0, t_max) = (0.5, 0.1, 10);
    let denoisers = [
        Denoiser::Discrete(prior.clone()),
        Denoiser::Gaussian { energy },
        Denoiser::Hypercube { alpha: 1.0 },
        Denoiser::BoxClip { alpha: 1.0 },
    ];
    println!("QPSK, beta = {beta}, N0 = {n0}, optimal tuning\n");
    print!("{:>3}", "t");
    for d in &denoisers {
        print!(" {:>12}", d.label());
    }
    println!();
    let traces: Vec<_> = denoisers
        .iter()
        .map(|d| {
            let obj = MseObjective::complex(&prior, d);
            run_se(beta, n0, &obj, &TuningPolicy::Optimal, t_max)
        })
        .collect();
    for t in 0..=t_max {
        print!("{:>3}", t + 1);
        for trace in &traces {
            print!(" {:>12.6}", trace.sigma_sq[t]);
        }
        println!();
    }
    println!("\npredicted SER at the final iterate:");
    for (d, trace) in denoisers.iter().zip(&traces) {
        println!(
            "  {:<10} {:.4e}",
            d.label(),
            ser_prediction(trace.final_sigma_sq(), &prior).unwrap()
        );
    }
}
