//! The mismatched AMP detector.
//!
//! Each iteration estimates the decoupled noise variance from the residual,
//! tunes the denoiser parameter according to the selected policy, applies
//! the denoiser to the matched-filtered signal, and updates the residual
//! with the Onsager correction beta <F'> r.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::constellation::{Constellation, RealConstellation};
use crate::denoiser::{Denoiser, RealDenoiser, Tau};
use crate::error::{Error, Result};
use crate::state_evolution::MseObjective;

/// How the denoiser parameter tau_t is chosen each iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TuningPolicy {
    /// Minimize the true-prior MSE at the current noise estimate.
    Optimal,
    /// Plug in the noise estimate directly (tau_t = sigma_t^2).
    Matched,
    /// Keep tau fixed; Tau::Zero and Tau::Infinity give the decision-feedback
    /// and prior-mean limits (ZF and MF for the Gaussian denoiser).
    FixedTau(Tau),
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct AmpIteration {
    /// Residual-based estimate ||r||^2 / M_R of the decoupled noise variance.
    pub sigma_tilde_sq: f64,
    /// Denoiser parameter used this iteration.
    pub tau: Tau,
    /// Component-averaged denoiser derivative (Onsager factor).
    pub avg_deriv: f64,
}

/// Output of a detector run.
#[derive(Debug, Clone)]
pub struct AmpTrace {
    pub iterations: Vec<AmpIteration>,
    /// Final denoised estimate s^{t+1}.
    pub soft: DVector<Complex64>,
    /// Final decoupled observation z = s + H^H r.
    pub decoupled: DVector<Complex64>,
    /// Nearest-symbol decisions on the decoupled observation.
    pub hard: Vec<Complex64>,
    /// Per-iteration decoupled observations z^t (input to the denoiser at
    /// iteration t); populated only by [`run_amp_recorded`].
    pub z_history: Vec<DVector<Complex64>>,
}

/// Real-valued-system counterpart of [`AmpTrace`].
#[derive(Debug, Clone)]
pub struct RealAmpTrace {
    pub iterations: Vec<AmpIteration>,
    pub soft: DVector<f64>,
    pub decoupled: DVector<f64>,
    pub hard: Vec<f64>,
}

fn check_policy_supported(uses_tau_limits: bool, policy: &TuningPolicy) -> Result<()> {
    match policy {
        TuningPolicy::FixedTau(Tau::Value(v)) if !(*v >= 0.0) => {
            Err(Error::invalid(format!("fixed tau must be nonnegative, got {v}")))
        }
        TuningPolicy::FixedTau(Tau::Infinity) if !uses_tau_limits => Err(Error::invalid(
            "tau = infinity is not defined for the hypercube denoiser",
        )),
        _ => Ok(()),
    }
}

/// Runs the mismatched AMP recursion on a complex system.
///
/// `prior` is the true transmit prior (used for the initialization
/// s^1 = E[S_0], for optimal tuning, and for the final hard decisions);
/// `den` is the possibly mismatched denoiser.
pub fn run_amp(
    h: &DMatrix<Complex64>,
    y: &DVector<Complex64>,
    prior: &Constellation,
    den: &Denoiser,
    policy: &TuningPolicy,
    t_max: usize,
) -> Result<AmpTrace> {
    run_amp_impl(h, y, prior, den, policy, t_max, false)
}

/// Like [`run_amp`] but also records each iteration's decoupled
/// observation z^t for decoupling diagnostics.
pub fn run_amp_recorded(
    h: &DMatrix<Complex64>,
    y: &DVector<Complex64>,
    prior: &Constellation,
    den: &Denoiser,
    policy: &TuningPolicy,
    t_max: usize,
) -> Result<AmpTrace> {
    run_amp_impl(h, y, prior, den, policy, t_max, true)
}

fn run_amp_impl(
    h: &DMatrix<Complex64>,
    y: &DVector<Complex64>,
    prior: &Constellation,
    den: &Denoiser,
    policy: &TuningPolicy,
    t_max: usize,
    record_z: bool,
) -> Result<AmpTrace> {
    let (m_r, m_t) = h.shape();
    if y.len() != m_r {
        return Err(Error::invalid(format!(
            "y has {} entries but H has {m_r} rows",
            y.len()
        )));
    }
    if m_t == 0 || m_r == 0 {
        return Err(Error::invalid("H must be nonempty"));
    }
    if t_max == 0 {
        return Err(Error::invalid("t_max must be at least 1"));
    }
    check_policy_supported(!matches!(den, Denoiser::Hypercube { .. }), policy)?;
    let obj = MseObjective::complex(prior, den);
    let beta = m_t as f64 / m_r as f64;

    let mut s = DVector::from_element(m_t, prior.moments().mean);
    let mut r = y - h * &s;
    let mut iterations = Vec::with_capacity(t_max);
    let mut z_history = Vec::new();
    for _ in 0..t_max {
        let sigma_tilde_sq = r.norm_squared() / m_r as f64;
        let tau = obj.tuned_gamma(sigma_tilde_sq, policy);
        let z = &s + h.adjoint() * &r;
        let mut deriv_sum = 0.0;
        for i in 0..m_t {
            let (f, d) = den.apply_with_deriv(z[i], tau);
            s[i] = f;
            deriv_sum += d;
        }
        let avg_deriv = deriv_sum / m_t as f64;
        r = y - h * &s + r * Complex64::new(beta * avg_deriv, 0.0);
        iterations.push(AmpIteration {
            sigma_tilde_sq,
            tau,
            avg_deriv,
        });
        if record_z {
            z_history.push(z);
        }
    }
    let z = &s + h.adjoint() * &r;
    let hard = z.iter().map(|&v| prior.slice(v)).collect();
    Ok(AmpTrace {
        iterations,
        soft: s,
        decoupled: z,
        hard,
        z_history,
    })
}

/// Real-valued-system variant of [`run_amp`]; the denoiser parameter is
/// the full (real) decoupled noise variance.
pub fn run_amp_real(
    h: &DMatrix<f64>,
    y: &DVector<f64>,
    prior: &RealConstellation,
    den: &RealDenoiser,
    policy: &TuningPolicy,
    t_max: usize,
) -> Result<RealAmpTrace> {
    let (m_r, m_t) = h.shape();
    if y.len() != m_r {
        return Err(Error::invalid(format!(
            "y has {} entries but H has {m_r} rows",
            y.len()
        )));
    }
    if m_t == 0 || m_r == 0 {
        return Err(Error::invalid("H must be nonempty"));
    }
    if t_max == 0 {
        return Err(Error::invalid("t_max must be at least 1"));
    }
    check_policy_supported(!matches!(den, RealDenoiser::Hypercube { .. }), policy)?;
    let obj = MseObjective::real(prior, den);
    let beta = m_t as f64 / m_r as f64;

    let mut s = DVector::from_element(m_t, prior.moments().mean.re);
    let mut r = y - h * &s;
    let mut iterations = Vec::with_capacity(t_max);
    for _ in 0..t_max {
        let sigma_tilde_sq = r.norm_squared() / m_r as f64;
        let tau = obj.tuned_gamma(sigma_tilde_sq, policy);
        let z = &s + h.transpose() * &r;
        let mut deriv_sum = 0.0;
        for i in 0..m_t {
            let (f, d) = den.apply_with_deriv(z[i], tau);
            s[i] = f;
            deriv_sum += d;
        }
        let avg_deriv = deriv_sum / m_t as f64;
        r = y - h * &s + r * (beta * avg_deriv);
        iterations.push(AmpIteration {
            sigma_tilde_sq,
            tau,
            avg_deriv,
        });
    }
    let z = &s + h.transpose() * &r;
    let hard = z.iter().map(|&v| prior.slice(v)).collect();
    Ok(RealAmpTrace {
        iterations,
        soft: s,
        decoupled: z,
        hard,
    })
}
