//! Monte-Carlo harness: seeded instance generation, exact linear and
//! convex baselines, SER sweeps with Wilson confidence intervals, and the
//! decoupling diagnostic.
//!
//! Trials are embarrassingly parallel; per-trial seeds derive
//! deterministically from (master seed, SNR index, trial index) and
//! aggregation is an ordered reduction, so results are reproducible
//! regardless of thread count.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::amp::{run_amp, run_amp_real, run_amp_recorded, TuningPolicy};
use crate::constellation::{Constellation, RealConstellation};
use crate::denoiser::{Denoiser, RealDenoiser, Tau};
use crate::error::{Error, Result};
use crate::special::{wilson_interval, Z_95};
use crate::state_evolution::{
    box_relaxation_tau, fixed_point, run_se, ser_prediction, ser_prediction_real, MseObjective,
};

/// One generated complex MIMO problem y = H s0 + n.
#[derive(Debug, Clone)]
pub struct MimoInstance {
    pub h: DMatrix<Complex64>,
    pub y: DVector<Complex64>,
    pub s0: Vec<Complex64>,
    pub n0: f64,
    pub beta: f64,
}

/// Real-valued-system counterpart (Appendix-style BPSK experiments).
#[derive(Debug, Clone)]
pub struct RealMimoInstance {
    pub h: DMatrix<f64>,
    pub y: DVector<f64>,
    pub s0: Vec<f64>,
    pub n0: f64,
    pub beta: f64,
}

/// Counter-based per-trial seed derivation (splitmix64 mixing).
pub fn trial_seed(master_seed: u64, snr_index: u64, trial_index: u64) -> u64 {
    fn splitmix(mut x: u64) -> u64 {
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(master_seed ^ splitmix(snr_index.wrapping_add(0x51ED_270B).wrapping_mul(0x2545_F491_4F6C_DD1D) ^ splitmix(trial_index)))
}

/// Draws H with i.i.d. CN(0, 1/M_R) entries, s0 from the prior, and
/// complex noise with per-entry variance N0. Deterministic given the seed.
pub fn gen_instance(
    m_t: usize,
    m_r: usize,
    prior: &Constellation,
    n0: f64,
    seed: u64,
) -> Result<MimoInstance> {
    if m_t == 0 || m_r == 0 {
        return Err(Error::invalid("MT and MR must be at least 1"));
    }
    if n0 < 0.0 {
        return Err(Error::invalid("N0 must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entry_sd = (0.5 / m_r as f64).sqrt();
    let h = DMatrix::from_fn(m_r, m_t, |_, _| {
        Complex64::new(
            entry_sd * rng.sample::<f64, _>(StandardNormal),
            entry_sd * rng.sample::<f64, _>(StandardNormal),
        )
    });
    let s0: Vec<Complex64> = (0..m_t).map(|_| draw_symbol(prior, &mut rng)).collect();
    let s0_vec = DVector::from_column_slice(&s0);
    let noise_sd = (n0 / 2.0).sqrt();
    let mut y = &h * s0_vec;
    for i in 0..m_r {
        y[i] += Complex64::new(
            noise_sd * rng.sample::<f64, _>(StandardNormal),
            noise_sd * rng.sample::<f64, _>(StandardNormal),
        );
    }
    Ok(MimoInstance {
        h,
        y,
        s0,
        n0,
        beta: m_t as f64 / m_r as f64,
    })
}

/// Real-mode instance: H entries N(0, 1/M_R), real noise variance N0.
pub fn gen_instance_real(
    m_t: usize,
    m_r: usize,
    prior: &RealConstellation,
    n0: f64,
    seed: u64,
) -> Result<RealMimoInstance> {
    if m_t == 0 || m_r == 0 {
        return Err(Error::invalid("MT and MR must be at least 1"));
    }
    if n0 < 0.0 {
        return Err(Error::invalid("N0 must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entry_sd = (1.0 / m_r as f64).sqrt();
    let h = DMatrix::from_fn(m_r, m_t, |_, _| {
        entry_sd * rng.sample::<f64, _>(StandardNormal)
    });
    let s0: Vec<f64> = (0..m_t).map(|_| draw_symbol_real(prior, &mut rng)).collect();
    let s0_vec = DVector::from_column_slice(&s0);
    let noise_sd = n0.sqrt();
    let mut y = &h * s0_vec;
    for i in 0..m_r {
        y[i] += noise_sd * rng.sample::<f64, _>(StandardNormal);
    }
    Ok(RealMimoInstance {
        h,
        y,
        s0,
        n0,
        beta: m_t as f64 / m_r as f64,
    })
}

fn draw_symbol(prior: &Constellation, rng: &mut ChaCha8Rng) -> Complex64 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (&s, &p) in prior.symbols().iter().zip(prior.probabilities()) {
        acc += p;
        if u < acc {
            return s;
        }
    }
    *prior.symbols().last().unwrap()
}

fn draw_symbol_real(prior: &RealConstellation, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (&s, &p) in prior.symbols().iter().zip(prior.probabilities()) {
        acc += p;
        if u < acc {
            return s;
        }
    }
    *prior.symbols().last().unwrap()
}

/// Exact linear MMSE estimate (H^H H + (N0/E_s) I)^{-1} H^H y, sliced.
pub fn mmse_exact(inst: &MimoInstance, prior: &Constellation) -> Result<Vec<Complex64>> {
    let energy = prior.moments().energy;
    let m_t = inst.h.ncols();
    let mut gram = inst.h.adjoint() * &inst.h;
    let reg = Complex64::new(inst.n0 / energy, 0.0);
    for i in 0..m_t {
        gram[(i, i)] += reg;
    }
    let chol = Cholesky::new(gram)
        .ok_or_else(|| Error::numerical("MMSE normal equations are not positive definite"))?;
    let x = chol.solve(&(inst.h.adjoint() * &inst.y));
    Ok(x.iter().map(|&v| prior.slice(v)).collect())
}

/// Zero-forcing (pseudo-inverse) estimate, sliced. Requires MT <= MR.
pub fn zf_exact(inst: &MimoInstance, prior: &Constellation) -> Result<Vec<Complex64>> {
    if inst.h.ncols() > inst.h.nrows() {
        return Err(Error::invalid("zero forcing requires MT <= MR"));
    }
    let gram = inst.h.adjoint() * &inst.h;
    let chol = Cholesky::new(gram)
        .ok_or_else(|| Error::numerical("ZF Gram matrix is singular"))?;
    let x = chol.solve(&(inst.h.adjoint() * &inst.y));
    Ok(x.iter().map(|&v| prior.slice(v)).collect())
}

/// Matched-filter estimate H^H y, sliced.
pub fn mf_exact(inst: &MimoInstance, prior: &Constellation) -> Vec<Complex64> {
    let x = inst.h.adjoint() * &inst.y;
    x.iter().map(|&v| prior.slice(v)).collect()
}

/// Real-mode exact baselines.
pub fn mmse_exact_real(inst: &RealMimoInstance, prior: &RealConstellation) -> Result<Vec<f64>> {
    let energy = prior.moments().energy;
    let m_t = inst.h.ncols();
    let mut gram = inst.h.transpose() * &inst.h;
    for i in 0..m_t {
        gram[(i, i)] += inst.n0 / energy;
    }
    let chol = Cholesky::new(gram)
        .ok_or_else(|| Error::numerical("MMSE normal equations are not positive definite"))?;
    let x = chol.solve(&(inst.h.transpose() * &inst.y));
    Ok(x.iter().map(|&v| prior.slice(v)).collect())
}

pub fn zf_exact_real(inst: &RealMimoInstance, prior: &RealConstellation) -> Result<Vec<f64>> {
    if inst.h.ncols() > inst.h.nrows() {
        return Err(Error::invalid("zero forcing requires MT <= MR"));
    }
    let gram = inst.h.transpose() * &inst.h;
    let chol =
        Cholesky::new(gram).ok_or_else(|| Error::numerical("ZF Gram matrix is singular"))?;
    let x = chol.solve(&(inst.h.transpose() * &inst.y));
    Ok(x.iter().map(|&v| prior.slice(v)).collect())
}

pub fn mf_exact_real(inst: &RealMimoInstance, prior: &RealConstellation) -> Vec<f64> {
    let x = inst.h.transpose() * &inst.y;
    x.iter().map(|&v| prior.slice(v)).collect()
}

/// Result of the box-relaxation convex solve.
#[derive(Debug, Clone)]
pub struct BoxSolve<T> {
    /// Sliced symbol decisions.
    pub hard: Vec<T>,
    /// Best (lowest-objective) iterate before slicing.
    pub soft: Vec<T>,
    /// Final objective ||y - H s||^2.
    pub objective: f64,
    pub converged: bool,
}

/// Largest eigenvalue of the Gram matrix by power iteration.
fn power_lmax_complex(h: &DMatrix<Complex64>) -> f64 {
    let m_t = h.ncols();
    let mut v = DVector::from_element(m_t, Complex64::new(1.0 / (m_t as f64).sqrt(), 0.0));
    let mut lmax = 1.0;
    for _ in 0..200 {
        let w = h.adjoint() * (h * &v);
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        lmax = n;
        v = w / Complex64::new(n, 0.0);
    }
    lmax
}

fn power_lmax_real(h: &DMatrix<f64>) -> f64 {
    let m_t = h.ncols();
    let mut v = DVector::from_element(m_t, 1.0 / (m_t as f64).sqrt());
    let mut lmax = 1.0;
    for _ in 0..200 {
        let w = h.transpose() * (h * &v);
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        lmax = n;
        v = w / n;
    }
    lmax
}

/// Box-relaxation detector: minimizes ||y - H s||^2 over the unit
/// infinity-norm ball (per real dimension), by accelerated projected
/// gradient (FISTA) with step 1/L from a power-iteration estimate of L,
/// then slices onto the constellation.
///
/// The constellation must be QPSK (per-dimension symbols {-1, +1}).
pub fn box_detector(
    inst: &MimoInstance,
    prior: &Constellation,
    max_iters: usize,
    tol: f64,
) -> Result<BoxSolve<Complex64>> {
    let per_dim = prior.real_decompose()?;
    if per_dim.len() != 2 || (per_dim.alpha() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(
            "the box detector supports QPSK (complex) or BPSK (real mode) only",
        ));
    }
    let m_t = inst.h.ncols();
    let lips = 2.0 * power_lmax_complex(&inst.h) * 1.01 + 1e-30;
    let step = 1.0 / lips;
    let clip = |v: &mut DVector<Complex64>| {
        for x in v.iter_mut() {
            *x = Complex64::new(x.re.clamp(-1.0, 1.0), x.im.clamp(-1.0, 1.0));
        }
    };
    let objective = |x: &DVector<Complex64>| (&inst.y - &inst.h * x).norm_squared();
    let mut x = DVector::from_element(m_t, Complex64::new(0.0, 0.0));
    let mut momentum = x.clone();
    let mut t_k = 1.0f64;
    let mut best = x.clone();
    let mut best_obj = objective(&x);
    let mut prev_obj = best_obj;
    let mut converged = false;
    for _ in 0..max_iters {
        let grad = inst.h.adjoint() * (&inst.h * &momentum - &inst.y) * Complex64::new(2.0, 0.0);
        let mut x_next = &momentum - grad * Complex64::new(step, 0.0);
        clip(&mut x_next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
        momentum = &x_next + (&x_next - &x) * Complex64::new((t_k - 1.0) / t_next, 0.0);
        x = x_next;
        t_k = t_next;
        let obj = objective(&x);
        if obj < best_obj {
            best_obj = obj;
            best = x.clone();
        }
        if (prev_obj - obj).abs() <= tol * prev_obj.max(1e-30) {
            converged = true;
            break;
        }
        prev_obj = obj;
    }
    let hard = best.iter().map(|&v| prior.slice(v)).collect();
    Ok(BoxSolve {
        hard,
        soft: best.iter().copied().collect(),
        objective: best_obj,
        converged,
    })
}

/// Real-mode box-relaxation detector for BPSK.
pub fn box_detector_real(
    inst: &RealMimoInstance,
    prior: &RealConstellation,
    max_iters: usize,
    tol: f64,
) -> Result<BoxSolve<f64>> {
    if prior.len() != 2 || (prior.alpha() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(
            "the box detector supports QPSK (complex) or BPSK (real mode) only",
        ));
    }
    let m_t = inst.h.ncols();
    let lips = 2.0 * power_lmax_real(&inst.h) * 1.01 + 1e-30;
    let step = 1.0 / lips;
    let objective = |x: &DVector<f64>| (&inst.y - &inst.h * x).norm_squared();
    let mut x = DVector::zeros(m_t);
    let mut momentum = x.clone();
    let mut t_k = 1.0f64;
    let mut best = x.clone();
    let mut best_obj = objective(&x);
    let mut prev_obj = best_obj;
    let mut converged = false;
    for _ in 0..max_iters {
        let grad = inst.h.transpose() * (&inst.h * &momentum - &inst.y) * 2.0;
        let mut x_next = &momentum - grad * step;
        for v in x_next.iter_mut() {
            *v = v.clamp(-1.0, 1.0);
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
        momentum = &x_next + (&x_next - &x) * ((t_k - 1.0) / t_next);
        x = x_next;
        t_k = t_next;
        let obj = objective(&x);
        if obj < best_obj {
            best_obj = obj;
            best = x.clone();
        }
        if (prev_obj - obj).abs() <= tol * prev_obj.max(1e-30) {
            converged = true;
            break;
        }
        prev_obj = obj;
    }
    let hard = best.iter().map(|&v| prior.slice(v)).collect();
    Ok(BoxSolve {
        hard,
        soft: best.iter().copied().collect(),
        objective: best_obj,
        converged,
    })
}

/// Detector registry used by sweeps and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    /// AMP with the exact discrete prior.
    Lama,
    /// AMP with the Gaussian prior, tuned per the sweep policy.
    Gauss,
    /// AMP Gaussian with fixed tau -> 0 (decision-feedback / ZF limit).
    GaussZf,
    /// AMP Gaussian with fixed tau -> infinity (MF limit).
    GaussMf,
    /// AMP with the uniform hypercube prior.
    Hypercube,
    /// AMP with the clipping denoiser.
    Boxclip,
    MmseExact,
    ZfExact,
    MfExact,
    /// Box-relaxation convex program.
    BoxCvx,
}

pub const ALL_DETECTORS: [Detector; 10] = [
    Detector::Lama,
    Detector::Gauss,
    Detector::GaussZf,
    Detector::GaussMf,
    Detector::Hypercube,
    Detector::Boxclip,
    Detector::MmseExact,
    Detector::ZfExact,
    Detector::MfExact,
    Detector::BoxCvx,
];

impl Detector {
    pub fn label(&self) -> &'static str {
        match self {
            Detector::Lama => "lama",
            Detector::Gauss => "gauss",
            Detector::GaussZf => "gauss-zf",
            Detector::GaussMf => "gauss-mf",
            Detector::Hypercube => "hypercube",
            Detector::Boxclip => "boxclip",
            Detector::MmseExact => "mmse-exact",
            Detector::ZfExact => "zf-exact",
            Detector::MfExact => "mf-exact",
            Detector::BoxCvx => "box-cvx",
        }
    }

    pub fn from_label(label: &str) -> Result<Detector> {
        ALL_DETECTORS
            .iter()
            .find(|d| d.label() == label)
            .copied()
            .ok_or_else(|| {
                let valid: Vec<&str> = ALL_DETECTORS.iter().map(|d| d.label()).collect();
                Error::invalid(format!(
                    "unknown detector '{label}' (valid: {})",
                    valid.join(", ")
                ))
            })
    }

    fn is_amp(&self) -> bool {
        matches!(
            self,
            Detector::Lama
                | Detector::Gauss
                | Detector::GaussZf
                | Detector::GaussMf
                | Detector::Hypercube
                | Detector::Boxclip
        )
    }

    /// (denoiser, policy) for the AMP detectors on a complex system.
    fn amp_parts(&self, prior: &Constellation, tuning: &TuningPolicy) -> Result<(Denoiser, TuningPolicy)> {
        let energy = prior.moments().energy;
        Ok(match self {
            Detector::Lama => (Denoiser::Discrete(prior.clone()), *tuning),
            Detector::Gauss => (Denoiser::Gaussian { energy }, *tuning),
            Detector::GaussZf => (
                Denoiser::Gaussian { energy },
                TuningPolicy::FixedTau(Tau::Zero),
            ),
            Detector::GaussMf => (
                Denoiser::Gaussian { energy },
                TuningPolicy::FixedTau(Tau::Infinity),
            ),
            Detector::Hypercube => {
                let alpha = prior.real_decompose()?.alpha();
                (Denoiser::Hypercube { alpha }, *tuning)
            }
            Detector::Boxclip => {
                let alpha = prior.real_decompose()?.alpha();
                (Denoiser::BoxClip { alpha }, *tuning)
            }
            _ => return Err(Error::invalid("not an AMP detector")),
        })
    }

    fn amp_parts_real(
        &self,
        prior: &RealConstellation,
        tuning: &TuningPolicy,
    ) -> Result<(RealDenoiser, TuningPolicy)> {
        let energy = prior.moments().energy;
        Ok(match self {
            Detector::Lama => (RealDenoiser::Discrete(prior.clone()), *tuning),
            Detector::Gauss => (RealDenoiser::Gaussian { energy }, *tuning),
            Detector::GaussZf => (
                RealDenoiser::Gaussian { energy },
                TuningPolicy::FixedTau(Tau::Zero),
            ),
            Detector::GaussMf => (
                RealDenoiser::Gaussian { energy },
                TuningPolicy::FixedTau(Tau::Infinity),
            ),
            Detector::Hypercube => (
                RealDenoiser::Hypercube {
                    alpha: prior.alpha(),
                },
                *tuning,
            ),
            Detector::Boxclip => (
                RealDenoiser::BoxClip {
                    alpha: prior.alpha(),
                },
                *tuning,
            ),
            _ => return Err(Error::invalid("not an AMP detector")),
        })
    }
}

/// One (detector, SNR point) aggregate of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SerResult {
    pub detector: String,
    pub snr_db: f64,
    pub trials: usize,
    pub errors: usize,
    pub ser: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Large-system (state-evolution) SER prediction, where one exists.
    pub se_prediction: Option<f64>,
}

/// Sweep parameters shared across SNR points.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub m_t: usize,
    pub m_r: usize,
    pub t_max: usize,
    /// Trials per SNR point.
    pub trials: usize,
    pub master_seed: u64,
    /// Policy for the tunable AMP detectors (lama, gauss, hypercube, boxclip).
    pub tuning: TuningPolicy,
    pub box_max_iters: usize,
    pub box_tol: f64,
}

impl SweepConfig {
    pub fn beta(&self) -> f64 {
        self.m_t as f64 / self.m_r as f64
    }
}

fn validate_sweep(
    cfg: &SweepConfig,
    detectors: &[Detector],
    snr_db: &[f64],
    beta: f64,
) -> Result<()> {
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if detectors.is_empty() {
        return Err(Error::invalid("at least one detector is required"));
    }
    if snr_db.is_empty() {
        return Err(Error::invalid("at least one SNR point is required"));
    }
    if cfg.t_max == 0 {
        return Err(Error::invalid("t_max must be at least 1"));
    }
    if beta > 1.0 && detectors.contains(&Detector::ZfExact) {
        return Err(Error::invalid(
            "zf-exact requires beta <= 1 (MT <= MR)",
        ));
    }
    Ok(())
}

/// SNR (dB) -> N0 under the receive-SNR convention snr = beta E_s / N0.
pub fn n0_from_snr_db(snr_db: f64, beta: f64, energy: f64) -> f64 {
    beta * energy / 10f64.powf(snr_db / 10.0)
}

/// Monte-Carlo SER sweep on a complex system. All detectors share each
/// trial's instance (common random numbers).
pub fn ser_sweep(
    cfg: &SweepConfig,
    prior: &Constellation,
    detectors: &[Detector],
    snr_db: &[f64],
) -> Result<Vec<SerResult>> {
    let beta = cfg.beta();
    validate_sweep(cfg, detectors, snr_db, beta)?;
    let energy = prior.moments().energy;
    // resolve AMP parts once; also validates detector/prior combinations
    let mut parts = Vec::new();
    for d in detectors {
        if d.is_amp() {
            parts.push(Some(d.amp_parts(prior, &cfg.tuning)?));
        } else {
            if *d == Detector::BoxCvx {
                // validate the prior shape up front
                let per_dim = prior.real_decompose()?;
                if per_dim.len() != 2 || (per_dim.alpha() - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid(
                        "the box detector supports QPSK (complex) or BPSK (real mode) only",
                    ));
                }
            }
            parts.push(None);
        }
    }

    let mut out = Vec::new();
    for (snr_idx, &snr) in snr_db.iter().enumerate() {
        let n0 = n0_from_snr_db(snr, beta, energy);
        let per_trial: Vec<Vec<usize>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = trial_seed(cfg.master_seed, snr_idx as u64, trial as u64);
                let inst = gen_instance(cfg.m_t, cfg.m_r, prior, n0, seed)
                    .expect("validated dimensions");
                detectors
                    .iter()
                    .zip(&parts)
                    .map(|(d, part)| {
                        let hard = run_detector(d, part, &inst, prior, cfg)
                            .expect("validated detector configuration");
                        count_errors(&hard, &inst.s0)
                    })
                    .collect()
            })
            .collect();
        for (di, d) in detectors.iter().enumerate() {
            let errors: usize = per_trial.iter().map(|t| t[di]).sum();
            let n = cfg.trials * cfg.m_t;
            let (ci_low, ci_high) = wilson_interval(errors as u64, n as u64, Z_95);
            out.push(SerResult {
                detector: d.label().to_string(),
                snr_db: snr,
                trials: cfg.trials,
                errors,
                ser: errors as f64 / n as f64,
                ci_low,
                ci_high,
                se_prediction: se_predicted_ser(d, prior, beta, n0, cfg),
            });
        }
    }
    Ok(out)
}

fn run_detector(
    d: &Detector,
    part: &Option<(Denoiser, TuningPolicy)>,
    inst: &MimoInstance,
    prior: &Constellation,
    cfg: &SweepConfig,
) -> Result<Vec<Complex64>> {
    match d {
        Detector::MmseExact => mmse_exact(inst, prior),
        Detector::ZfExact => zf_exact(inst, prior),
        Detector::MfExact => Ok(mf_exact(inst, prior)),
        Detector::BoxCvx => {
            box_detector(inst, prior, cfg.box_max_iters, cfg.box_tol).map(|s| s.hard)
        }
        _ => {
            let (den, policy) = part.as_ref().expect("AMP parts resolved");
            run_amp(&inst.h, &inst.y, prior, den, policy, cfg.t_max).map(|t| t.hard)
        }
    }
}

fn count_errors<T: PartialEq>(hard: &[T], s0: &[T]) -> usize {
    hard.iter().zip(s0).filter(|(a, b)| a != b).count()
}

/// Large-system SER prediction for a detector, where one exists:
/// finite-t SE for the AMP detectors, SE fixed points for the exact
/// linear baselines, the box-relaxation fixed point for box-cvx.
pub fn se_predicted_ser(
    d: &Detector,
    prior: &Constellation,
    beta: f64,
    n0: f64,
    cfg: &SweepConfig,
) -> Option<f64> {
    let energy = prior.moments().energy;
    let sigma_sq = match d {
        Detector::MmseExact => {
            let obj = MseObjective::complex(prior, &Denoiser::Gaussian { energy });
            fixed_point(beta, n0, &obj, &TuningPolicy::Optimal).converged_to
        }
        Detector::ZfExact => {
            if beta < 1.0 {
                n0 / (1.0 - beta)
            } else {
                return None;
            }
        }
        Detector::MfExact => n0 + beta * prior.moments().variance,
        Detector::BoxCvx => {
            let alpha = prior.real_decompose().ok()?.alpha();
            let obj = MseObjective::complex(prior, &Denoiser::BoxClip { alpha });
            fixed_point(beta, n0, &obj, &TuningPolicy::FixedTau(Tau::Zero)).converged_to
        }
        _ => {
            let (den, policy) = d.amp_parts(prior, &cfg.tuning).ok()?;
            let obj = MseObjective::complex(prior, &den);
            run_se(beta, n0, &obj, &policy, cfg.t_max).final_sigma_sq()
        }
    };
    ser_prediction(sigma_sq, prior).ok()
}

/// Real-mode Monte-Carlo SER sweep.
pub fn ser_sweep_real(
    cfg: &SweepConfig,
    prior: &RealConstellation,
    detectors: &[Detector],
    snr_db: &[f64],
) -> Result<Vec<SerResult>> {
    let beta = cfg.beta();
    validate_sweep(cfg, detectors, snr_db, beta)?;
    let energy = prior.moments().energy;
    let mut parts = Vec::new();
    for d in detectors {
        if d.is_amp() {
            parts.push(Some(d.amp_parts_real(prior, &cfg.tuning)?));
        } else {
            if *d == Detector::BoxCvx
                && (prior.len() != 2 || (prior.alpha() - 1.0).abs() > 1e-12)
            {
                return Err(Error::invalid(
                    "the box detector supports QPSK (complex) or BPSK (real mode) only",
                ));
            }
            parts.push(None);
        }
    }

    let mut out = Vec::new();
    for (snr_idx, &snr) in snr_db.iter().enumerate() {
        let n0 = n0_from_snr_db(snr, beta, energy);
        let per_trial: Vec<Vec<usize>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = trial_seed(cfg.master_seed, snr_idx as u64, trial as u64);
                let inst = gen_instance_real(cfg.m_t, cfg.m_r, prior, n0, seed)
                    .expect("validated dimensions");
                detectors
                    .iter()
                    .zip(&parts)
                    .map(|(d, part)| {
                        let hard = run_detector_real(d, part, &inst, prior, cfg)
                            .expect("validated detector configuration");
                        count_errors(&hard, &inst.s0)
                    })
                    .collect()
            })
            .collect();
        for (di, d) in detectors.iter().enumerate() {
            let errors: usize = per_trial.iter().map(|t| t[di]).sum();
            let n = cfg.trials * cfg.m_t;
            let (ci_low, ci_high) = wilson_interval(errors as u64, n as u64, Z_95);
            out.push(SerResult {
                detector: d.label().to_string(),
                snr_db: snr,
                trials: cfg.trials,
                errors,
                ser: errors as f64 / n as f64,
                ci_low,
                ci_high,
                se_prediction: se_predicted_ser_real(d, prior, beta, n0, cfg),
            });
        }
    }
    Ok(out)
}

fn run_detector_real(
    d: &Detector,
    part: &Option<(RealDenoiser, TuningPolicy)>,
    inst: &RealMimoInstance,
    prior: &RealConstellation,
    cfg: &SweepConfig,
) -> Result<Vec<f64>> {
    match d {
        Detector::MmseExact => mmse_exact_real(inst, prior),
        Detector::ZfExact => zf_exact_real(inst, prior),
        Detector::MfExact => Ok(mf_exact_real(inst, prior)),
        Detector::BoxCvx => {
            box_detector_real(inst, prior, cfg.box_max_iters, cfg.box_tol).map(|s| s.hard)
        }
        _ => {
            let (den, policy) = part.as_ref().expect("AMP parts resolved");
            run_amp_real(&inst.h, &inst.y, prior, den, policy, cfg.t_max).map(|t| t.hard)
        }
    }
}

/// Real-mode analogue of [`se_predicted_ser`]; box-cvx uses the
/// box-relaxation tau* (BER Q(1/tau*)).
pub fn se_predicted_ser_real(
    d: &Detector,
    prior: &RealConstellation,
    beta: f64,
    n0: f64,
    cfg: &SweepConfig,
) -> Option<f64> {
    let sigma_sq = match d {
        Detector::MmseExact => {
            let obj = MseObjective::real(
                prior,
                &RealDenoiser::Gaussian {
                    energy: prior.moments().energy,
                },
            );
            fixed_point(beta, n0, &obj, &TuningPolicy::Optimal).converged_to
        }
        Detector::ZfExact => {
            if beta < 1.0 {
                n0 / (1.0 - beta)
            } else {
                return None;
            }
        }
        Detector::MfExact => n0 + beta * prior.moments().variance,
        Detector::BoxCvx => {
            let tau = box_relaxation_tau(beta, n0).ok()?;
            tau * tau
        }
        _ => {
            let (den, policy) = d.amp_parts_real(prior, &cfg.tuning).ok()?;
            let obj = MseObjective::real(prior, &den);
            run_se(beta, n0, &obj, &policy, cfg.t_max).final_sigma_sq()
        }
    };
    Some(ser_prediction_real(sigma_sq, prior))
}

/// Per-iteration decoupling diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct DecouplingReport {
    /// SE-predicted sigma_t^2, t = 1..t_max.
    pub se_sigma_sq: Vec<f64>,
    /// Trial-averaged residual estimates sigma~_t^2.
    pub sim_sigma_sq: Vec<f64>,
    /// Trial-averaged empirical Var(z^t - s0).
    pub sim_err_var: Vec<f64>,
    /// |sim - se| / se for the residual estimate.
    pub rel_dev_sigma: Vec<f64>,
    /// |sim - se| / se for the decoupled-error variance.
    pub rel_dev_err: Vec<f64>,
}

/// Compares trial-averaged AMP noise statistics against the SE trace on a
/// complex system.
#[allow(clippy::too_many_arguments)]
pub fn decoupling_check(
    m_t: usize,
    m_r: usize,
    prior: &Constellation,
    n0: f64,
    den: &Denoiser,
    policy: &TuningPolicy,
    t_max: usize,
    trials: usize,
    seed: u64,
) -> Result<DecouplingReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let beta = m_t as f64 / m_r as f64;
    let obj = MseObjective::complex(prior, den);
    let trace = run_se(beta, n0, &obj, policy, t_max);
    let per_trial: Vec<(Vec<f64>, Vec<f64>)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let inst = gen_instance(m_t, m_r, prior, n0, trial_seed(seed, 0, trial as u64))
                .expect("validated dimensions");
            let t = run_amp_recorded(&inst.h, &inst.y, prior, den, policy, t_max)
                .expect("validated configuration");
            let sigmas: Vec<f64> = t.iterations.iter().map(|it| it.sigma_tilde_sq).collect();
            let err_vars: Vec<f64> = t
                .z_history
                .iter()
                .map(|z| {
                    z.iter()
                        .zip(&inst.s0)
                        .map(|(zi, s0i)| (zi - s0i).norm_sqr())
                        .sum::<f64>()
                        / m_t as f64
                })
                .collect();
            (sigmas, err_vars)
        })
        .collect();
    let mut sim_sigma_sq = vec![0.0; t_max];
    let mut sim_err_var = vec![0.0; t_max];
    for (sigmas, err_vars) in &per_trial {
        for t in 0..t_max {
            sim_sigma_sq[t] += sigmas[t];
            sim_err_var[t] += err_vars[t];
        }
    }
    for t in 0..t_max {
        sim_sigma_sq[t] /= trials as f64;
        sim_err_var[t] /= trials as f64;
    }
    let se_sigma_sq: Vec<f64> = trace.sigma_sq[..t_max].to_vec();
    let rel_dev_sigma = sim_sigma_sq
        .iter()
        .zip(&se_sigma_sq)
        .map(|(s, p)| (s - p).abs() / p)
        .collect();
    let rel_dev_err = sim_err_var
        .iter()
        .zip(&se_sigma_sq)
        .map(|(s, p)| (s - p).abs() / p)
        .collect();
    Ok(DecouplingReport {
        se_sigma_sq,
        sim_sigma_sq,
        sim_err_var,
        rel_dev_sigma,
        rel_dev_err,
    })
}
