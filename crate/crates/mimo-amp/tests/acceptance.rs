//! End-to-end acceptance suite. Each test prints a single PASS/FAIL line
//! for its criterion (visible with `cargo test -- --nocapture`).

use mimo_amp::amp::TuningPolicy;
use mimo_amp::constellation::{Constellation, RealConstellation};
use mimo_amp::denoiser::{Denoiser, RealDenoiser, Tau};
use mimo_amp::sim::{decoupling_check, ser_sweep, ser_sweep_real, Detector, SweepConfig};
use mimo_amp::special::{q_func, std_normal_pdf};
use mimo_amp::state_evolution::{
    box_relaxation_tau, fixed_point, mrt, psi_numeric, psi_numeric_real, psi_pam_closed,
    psi_qam_closed, run_se, MseObjective,
};
use num_complex::Complex64;

fn report(criterion: u32, description: &str, pass: bool, detail: String) {
    println!(
        "acceptance {criterion}: {} - {description} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_minimum_recovery_thresholds() {
    let qpsk = Constellation::make_qam(4).unwrap();
    let clip_qpsk = MseObjective::complex(&qpsk, &Denoiser::BoxClip { alpha: 1.0 });
    let m2 = mrt(&clip_qpsk, &TuningPolicy::FixedTau(Tau::Zero));

    let qam16 = Constellation::make_qam(16).unwrap();
    let clip_16 = MseObjective::complex(&qam16, &Denoiser::BoxClip { alpha: 3.0 });
    let m4 = mrt(&clip_16, &TuningPolicy::FixedTau(Tau::Zero));

    let gauss = MseObjective::complex(
        &qpsk,
        &Denoiser::Gaussian {
            energy: qpsk.moments().energy,
        },
    );
    let mg = mrt(&gauss, &TuningPolicy::Optimal);

    let pass =
        (m2 - 2.0).abs() < 1e-3 && (m4 - 4.0 / 3.0).abs() < 1e-3 && (mg - 1.0).abs() < 1e-3;
    report(
        1,
        "minimum recovery thresholds (clip QPSK / clip 16QAM / Gaussian optimal)",
        pass,
        format!("{m2:.6} / {m4:.6} / {mg:.6}"),
    );
}

#[test]
fn criterion_2_quadrature_matches_closed_forms() {
    let mut worst: f64 = 0.0;
    for m in [2usize, 4] {
        let pam = RealConstellation::make_pam(m).unwrap();
        let den = RealDenoiser::BoxClip {
            alpha: (m - 1) as f64,
        };
        let qam = Constellation::make_qam(m * m).unwrap();
        let cden = Denoiser::BoxClip {
            alpha: (m - 1) as f64,
        };
        for i in 0..50 {
            let s = 10f64.powf(-3.0 + 4.0 * i as f64 / 49.0);
            let dp = (psi_numeric_real(s, 1.0, &pam, &den).unwrap() - psi_pam_closed(s, m)).abs();
            let dq = (psi_numeric(s, 1.0, &qam, &cden).unwrap() - psi_qam_closed(s, m)).abs();
            worst = worst.max(dp).max(dq);
        }
    }
    report(
        2,
        "clip-denoiser MSE: adaptive quadrature vs closed form, 50 points x M in {2, 4}",
        worst < 1e-7,
        format!("worst |numeric - closed| = {worst:.2e}"),
    );
}

#[test]
fn criterion_3_box_relaxation_identities() {
    // identity between the closed-form clip MSE at M = 2 and the scalar
    // expression coming out of the box-relaxation stationarity condition
    let mut worst_id: f64 = 0.0;
    for i in 0..200 {
        let t2 = 10f64.powf(-3.0 + 4.0 * i as f64 / 199.0);
        let tau = t2.sqrt();
        let m = 2.0 / tau;
        let rhs = t2 / 2.0 - t2 * (1.0 - m * m) * q_func(m) - t2 * m * std_normal_pdf(m);
        worst_id = worst_id.max((psi_pam_closed(t2, 2) - rhs).abs());
    }

    // the box-relaxation tau* solves the clip/BPSK fixed-point equation
    let bpsk = RealConstellation::make_pam(2).unwrap();
    let obj = MseObjective::real(&bpsk, &RealDenoiser::BoxClip { alpha: 1.0 });
    let mut worst_fp: f64 = 0.0;
    for beta in [0.5, 1.0, 1.5] {
        for n0 in [0.01, 0.1, 1.0] {
            let tau = box_relaxation_tau(beta, n0).unwrap();
            let fp = fixed_point(beta, n0, &obj, &TuningPolicy::FixedTau(Tau::Zero));
            worst_fp = worst_fp.max((tau * tau - fp.converged_to).abs());
        }
    }
    report(
        3,
        "box-relaxation identities (scalar MSE identity; tau*^2 = clip/BPSK fixed point)",
        worst_id < 1e-10 && worst_fp < 1e-8,
        format!("identity dev {worst_id:.2e}; fixed-point dev {worst_fp:.2e}"),
    );
}

#[test]
fn criterion_4_gaussian_se_fixed_points() {
    // E_s = 1 system: BPSK with the energy-matched Gaussian denoiser
    let bpsk = RealConstellation::make_pam(2).unwrap();
    let obj = MseObjective::real(&bpsk, &RealDenoiser::Gaussian { energy: 1.0 });
    let trace = run_se(0.5, 0.1, &obj, &TuningPolicy::Optimal, 80);
    let dev_opt = (trace.final_sigma_sq() - 0.17416574).abs();

    let zf = fixed_point(0.5, 0.1, &obj, &TuningPolicy::FixedTau(Tau::Zero)).converged_to;
    let dev_zf = (zf - 0.1 / (1.0 - 0.5)).abs();
    let mf = fixed_point(0.5, 0.1, &obj, &TuningPolicy::FixedTau(Tau::Infinity)).converged_to;
    let dev_mf = (mf - (0.1 + 0.5 * bpsk.moments().variance)).abs();

    report(
        4,
        "Gaussian-denoiser SE: optimal fixed point 0.17416574; ZF = N0/(1-beta); MF = N0 + beta Var",
        dev_opt < 1e-7 && dev_zf < 1e-12 && dev_mf < 1e-12,
        format!("devs {dev_opt:.2e} / {dev_zf:.2e} / {dev_mf:.2e}"),
    );
}

#[test]
fn criterion_5_decoupling_tracks_state_evolution() {
    let prior = Constellation::make_qam(4).unwrap();
    let (m_t, m_r, n0, t_max, trials) = (512, 1024, 0.2, 10, 200);
    let denoisers = [
        Denoiser::Discrete(prior.clone()),
        Denoiser::Gaussian {
            energy: prior.moments().energy,
        },
        Denoiser::Hypercube { alpha: 1.0 },
        Denoiser::BoxClip { alpha: 1.0 },
    ];
    let mut worst: f64 = 0.0;
    let mut worst_label = "";
    for den in &denoisers {
        let rep = decoupling_check(
            m_t,
            m_r,
            &prior,
            n0,
            den,
            &TuningPolicy::Optimal,
            t_max,
            trials,
            11,
        )
        .unwrap();
        let dev = rep.rel_dev_sigma.iter().cloned().fold(0.0, f64::max);
        if dev > worst {
            worst = dev;
            worst_label = den.label();
        }
    }
    report(
        5,
        "trial-averaged residual variance within 5% of SE for t <= 10 at MT = 512 (all four denoisers)",
        worst < 0.05,
        format!("worst deviation {:.2}% ({worst_label})", 100.0 * worst),
    );
}

/// SNR (dB) at which a detector's measured SER curve crosses the target,
/// by log-linear interpolation between grid points.
fn snr_at_ser(results: &[mimo_amp::sim::SerResult], detector: &str, target: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = results
        .iter()
        .filter(|r| r.detector == detector && r.ser > 0.0)
        .map(|r| (r.snr_db, r.ser))
        .collect();
    for w in pts.windows(2) {
        let ((s0, p0), (s1, p1)) = (w[0], w[1]);
        if (p0 - target) * (p1 - target) <= 0.0 && p0 != p1 {
            let t = (target.log10() - p0.log10()) / (p1.log10() - p0.log10());
            return Some(s0 + t * (s1 - s0));
        }
    }
    None
}

#[test]
fn criterion_6_qpsk_sweep_vs_exact_mmse() {
    let prior = Constellation::make_qam(4).unwrap();
    let cfg = SweepConfig {
        m_t: 64,
        m_r: 128,
        t_max: 10,
        trials: 1600, // 1600 x 64 = 102400 symbols per SNR point
        master_seed: 20,
        tuning: TuningPolicy::Optimal,
        box_max_iters: 5000,
        box_tol: 1e-12,
    };
    let grid = [5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
    let detectors = [
        Detector::Lama,
        Detector::Gauss,
        Detector::Boxclip,
        Detector::MmseExact,
    ];
    let results = ser_sweep(&cfg, &prior, &detectors, &grid).unwrap();

    // (a) the Gaussian-denoiser AMP matches exact MMSE at every SNR point
    let mut overlap_ok = true;
    for &snr in &grid {
        let g = results
            .iter()
            .find(|r| r.detector == "gauss" && r.snr_db == snr)
            .unwrap();
        let m = results
            .iter()
            .find(|r| r.detector == "mmse-exact" && r.snr_db == snr)
            .unwrap();
        overlap_ok &= g.ci_low <= m.ci_high && m.ci_low <= g.ci_high;
    }

    // (b) SNR gap between the clip-denoiser AMP and the exact-prior AMP
    // at SER 1e-3
    let snr_clip = snr_at_ser(&results, "boxclip", 1e-3);
    let snr_lama = snr_at_ser(&results, "lama", 1e-3);
    let gap = match (snr_clip, snr_lama) {
        (Some(c), Some(l)) => c - l,
        _ => f64::NAN,
    };
    report(
        6,
        "64x128 QPSK sweep: gauss vs exact MMSE CIs overlap; clip-to-exact-prior gap <= 1.5 dB at SER 1e-3",
        overlap_ok && gap.is_finite() && gap <= 1.5,
        format!("CI overlap {overlap_ok}; gap {gap:.2} dB"),
    );
}

#[test]
fn criterion_7_box_detector_equivalence() {
    let bpsk = RealConstellation::make_pam(2).unwrap();
    let cfg = SweepConfig {
        m_t: 256,
        m_r: 512,
        t_max: 10,
        trials: 250,
        master_seed: 31,
        tuning: TuningPolicy::Optimal,
        box_max_iters: 5000,
        box_tol: 1e-12,
    };
    let beta = cfg.beta();
    let grid = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
    let results =
        ser_sweep_real(&cfg, &bpsk, &[Detector::BoxCvx, Detector::Boxclip], &grid).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for &snr in &grid {
        let cvx = results
            .iter()
            .find(|r| r.detector == "box-cvx" && r.snr_db == snr)
            .unwrap();
        let amp = results
            .iter()
            .find(|r| r.detector == "boxclip" && r.snr_db == snr)
            .unwrap();
        let n0 = beta * bpsk.moments().energy / 10f64.powf(snr / 10.0);
        let analytic = q_func(1.0 / box_relaxation_tau(beta, n0).unwrap());
        let pair_overlap = cvx.ci_low <= amp.ci_high && amp.ci_low <= cvx.ci_high;
        let analytic_inside = analytic >= cvx.ci_low
            && analytic <= cvx.ci_high
            && analytic >= amp.ci_low
            && analytic <= amp.ci_high;
        if !(pair_overlap && analytic_inside) {
            pass = false;
            detail = format!(
                "at {snr} dB: box-cvx [{:.3e}, {:.3e}], clip-AMP [{:.3e}, {:.3e}], analytic {analytic:.3e}",
                cvx.ci_low, cvx.ci_high, amp.ci_low, amp.ci_high
            );
        }
    }
    if pass {
        detail = "all six SNR points consistent".to_string();
    }
    report(
        7,
        "real BPSK 256x512: box program, clip-denoiser AMP, and Q(1/tau*) agree within 95% CIs",
        pass,
        detail,
    );
}

#[test]
fn criterion_8_property_suite() {
    let prior = Constellation::make_qam(4).unwrap();
    let energy = prior.moments().energy;
    let denoisers = [
        Denoiser::Discrete(prior.clone()),
        Denoiser::Gaussian { energy },
        Denoiser::Hypercube { alpha: 1.0 },
        Denoiser::BoxClip { alpha: 1.0 },
    ];
    let mut pass = true;
    let mut detail = Vec::new();

    // derivative vs central finite differences of the per-dimension map
    for den in &denoisers {
        for &(zr, zi) in &[(0.35, -0.6), (1.2, 0.4), (-2.3, 1.9)] {
            let tau = Tau::Value(0.4);
            let z = Complex64::new(zr, zi);
            let h = 1e-6;
            let (_, deriv) = den.apply_with_deriv(z, tau);
            let fr = (den.apply_with_deriv(z + Complex64::new(h, 0.0), tau).0.re
                - den.apply_with_deriv(z - Complex64::new(h, 0.0), tau).0.re)
                / (2.0 * h);
            let fi = (den.apply_with_deriv(z + Complex64::new(0.0, h), tau).0.im
                - den.apply_with_deriv(z - Complex64::new(0.0, h), tau).0.im)
                / (2.0 * h);
            if (deriv - 0.5 * (fr + fi)).abs() > 1e-5 {
                pass = false;
                detail.push(format!("derivative mismatch for {} at {z}", den.label()));
            }
        }
    }

    // oddness, hull containment, and the hypercube -> clip limit
    for i in 0..25 {
        let z = Complex64::new(-2.9 + 0.24 * i as f64, 1.3 - 0.11 * i as f64);
        for den in &denoisers {
            let tau = Tau::Value(0.3);
            let f = den.apply_with_deriv(z, tau).0;
            let fneg = den.apply_with_deriv(-z, tau).0;
            if (f + fneg).norm() > 1e-9 {
                pass = false;
                detail.push(format!("{} not odd at {z}", den.label()));
            }
        }
        let f = denoisers[0].apply_with_deriv(z, Tau::Value(0.3)).0;
        if f.re.abs() > 1.0 + 1e-12 || f.im.abs() > 1.0 + 1e-12 {
            pass = false;
            detail.push(format!("discrete output outside hull at {z}"));
        }
        let hyper = denoisers[2].apply_with_deriv(z, Tau::Value(1e-8)).0;
        let clip = denoisers[3].apply_with_deriv(z, Tau::Zero).0;
        if (hyper - clip).norm() > 1e-5 {
            pass = false;
            detail.push(format!("hypercube/clip limit violated at {z}"));
        }
    }

    // SE is monotone under optimal tuning
    for den in &denoisers {
        let obj = MseObjective::complex(&prior, den);
        let trace = run_se(0.5, 0.1, &obj, &TuningPolicy::Optimal, 12);
        if trace.sigma_sq.windows(2).any(|w| w[1] > w[0] + 1e-9) {
            pass = false;
            detail.push(format!("SE not monotone for {}", den.label()));
        }
    }

    // same threshold for the complex grid and its real projection
    let c = MseObjective::complex(&prior, &Denoiser::BoxClip { alpha: 1.0 });
    let pam = RealConstellation::make_pam(2).unwrap();
    let r = MseObjective::real(&pam, &RealDenoiser::BoxClip { alpha: 1.0 });
    let policy = TuningPolicy::FixedTau(Tau::Zero);
    if (mrt(&c, &policy) - mrt(&r, &policy)).abs() > 1e-6 {
        pass = false;
        detail.push("complex/real threshold mismatch".to_string());
    }

    // deterministic reruns
    let cfg = SweepConfig {
        m_t: 16,
        m_r: 32,
        t_max: 6,
        trials: 30,
        master_seed: 5,
        tuning: TuningPolicy::Optimal,
        box_max_iters: 2000,
        box_tol: 1e-10,
    };
    let a = ser_sweep(&cfg, &prior, &[Detector::Boxclip, Detector::MmseExact], &[8.0]).unwrap();
    let b = ser_sweep(&cfg, &prior, &[Detector::Boxclip, Detector::MmseExact], &[8.0]).unwrap();
    if a.iter().zip(&b).any(|(x, y)| x.errors != y.errors) {
        pass = false;
        detail.push("rerun not deterministic".to_string());
    }

    report(
        8,
        "property suite (derivatives, oddness, hull, clip limit, SE monotonicity, threshold equality, determinism)",
        pass,
        if detail.is_empty() {
            "all properties hold".to_string()
        } else {
            detail.join("; ")
        },
    );
}
