//! Posterior-mean denoisers and their average derivatives.
//!
//! Four priors are supported: the exact discrete constellation prior, a
//! Gaussian prior, a uniform prior on a hypercube, and the hypercube's
//! small-variance limit (per-dimension clipping). Each denoiser exposes the
//! value F(z, tau) and the per-entry derivative used by the Onsager
//! correction, defined through the separable real decomposition as
//! (dF_R/dz_R + dF_I/dz_I)/2.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::constellation::{Constellation, RealConstellation};
use crate::error::{Error, Result};
use crate::special::{ln_q, q_func, std_normal_pdf};

/// Variance parameter for a denoiser: a finite value or one of the two
/// limits used by the sub-optimal (fixed-parameter) variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tau {
    Value(f64),
    Zero,
    Infinity,
}

impl Tau {
    pub fn as_f64(self) -> f64 {
        match self {
            Tau::Value(v) => v,
            Tau::Zero => 0.0,
            Tau::Infinity => f64::INFINITY,
        }
    }
}

/// A posterior-mean strategy.
#[derive(Debug, Clone)]
pub enum Denoiser {
    /// Exact posterior mean for a discrete constellation prior.
    Discrete(Constellation),
    /// Linear shrinkage from a Gaussian prior with the given energy.
    Gaussian { energy: f64 },
    /// Uniform prior on the hypercube of half-width alpha.
    Hypercube { alpha: f64 },
    /// Small-variance limit of the hypercube prior: per-dimension clip.
    BoxClip { alpha: f64 },
}

/// Per-real-dimension form of a denoiser, parameterized by the
/// per-dimension noise variance v (v = tau/2 in a complex system,
/// v = tau in a real-valued system).
#[derive(Debug, Clone)]
pub enum RealDenoiser {
    Discrete(RealConstellation),
    Gaussian { energy: f64 },
    Hypercube { alpha: f64 },
    BoxClip { alpha: f64 },
}

/// Posterior mean and its z-derivative for a N(z, v) observation of a
/// uniform prior on [-alpha, alpha] (a truncated-Gaussian posterior).
///
/// The direct expression differences Gaussian CDFs and loses all precision
/// once the observation sits many standard deviations outside the box, so
/// the far tail is evaluated through log-domain tail ratios with a series
/// fallback when the second boundary term underflows entirely.
pub fn trunc_gauss_mean_deriv(z: f64, alpha: f64, v: f64) -> (f64, f64) {
    debug_assert!(v > 0.0 && alpha > 0.0);
    if z < 0.0 {
        let (m, d) = trunc_gauss_mean_deriv(-z, alpha, v);
        return (-m, d);
    }
    let s = v.sqrt();
    let a = (-alpha - z) / s;
    let b = (alpha - z) / s;
    const FAR: f64 = 8.0;
    if b > -FAR {
        let d = if b >= 0.0 {
            1.0 - q_func(b) - q_func(-a)
        } else {
            q_func(-b) - q_func(-a)
        };
        if d <= 0.0 {
            return (z.clamp(-alpha, alpha), 0.0);
        }
        let pa = std_normal_pdf(a);
        let pb = std_normal_pdf(b);
        let ratio = (pa - pb) / d;
        let mean = z + s * ratio;
        let deriv = 1.0 + (a * pa - b * pb) / d - ratio * ratio;
        (mean.clamp(-alpha, alpha), deriv.clamp(0.0, 1.0))
    } else {
        // z > alpha + FAR*s: both boundaries in the same Gaussian tail
        let u = -b;
        let w = -a;
        if u > 100.0 && 0.5 * (w * w - u * u) > 60.0 {
            // lower boundary term fully negligible: one-sided expansion of
            // the Mills ratio, mean = alpha - s*(1/u - 2/u^3 + 10/u^5)
            let ui = 1.0 / u;
            let delta = ui - 2.0 * ui.powi(3) + 10.0 * ui.powi(5);
            let mean = alpha - s * delta;
            let deriv = ui * ui - 6.0 * ui.powi(4);
            return (mean.clamp(-alpha, alpha), deriv.clamp(0.0, 1.0));
        }
        let lq_u = ln_q(u);
        let lq_w = ln_q(w);
        let e_q = (lq_w - lq_u).exp(); // Q(w)/Q(u)
        let e_p = (0.5 * (u * u - w * w)).exp(); // phi(w)/phi(u)
        let mills = (-0.5 * u * u - 0.5 * (2.0 * PI).ln() - lq_u).exp();
        let denom = 1.0 - e_q;
        if denom <= 0.0 {
            return (z.clamp(-alpha, alpha), 0.0);
        }
        let ratio = -mills * (1.0 - e_p) / denom;
        let mean = z + s * ratio;
        let t = mills * (u - w * e_p) / denom;
        let deriv = 1.0 + t - ratio * ratio;
        if !mean.is_finite() || !deriv.is_finite() {
            return (z.clamp(-alpha, alpha), 0.0);
        }
        (mean.clamp(-alpha, alpha), deriv.clamp(0.0, 1.0))
    }
}

/// Exact posterior mean for a discrete constellation under the
/// kernel exp(-|z - a|^2 / tau), evaluated with max-exponent subtraction.
pub fn f_discrete(z: Complex64, tau: f64, c: &Constellation) -> Result<Complex64> {
    if tau < 0.0 {
        return Err(Error::invalid("tau must be nonnegative"));
    }
    if tau == 0.0 {
        return Ok(c.slice(z));
    }
    let (mean, _) = discrete_posterior(z, tau, c);
    Ok(mean)
}

/// Posterior mean and the per-entry derivative (sum of the per-dimension
/// posterior variances over tau) in one pass.
fn discrete_posterior(z: Complex64, tau: f64, c: &Constellation) -> (Complex64, f64) {
    let symbols = c.symbols();
    let probs = c.probabilities();
    let inv_tau = 1.0 / tau;
    let mut max_e = f64::NEG_INFINITY;
    let mut exps = [0.0f64; 256];
    debug_assert!(symbols.len() <= 256);
    for (i, a) in symbols.iter().enumerate() {
        let e = -(z - a).norm_sqr() * inv_tau + probs[i].ln();
        exps[i] = e;
        if e > max_e {
            max_e = e;
        }
    }
    let mut sum = 0.0;
    let mut m1 = Complex64::new(0.0, 0.0);
    let mut m2_re = 0.0;
    let mut m2_im = 0.0;
    for (i, a) in symbols.iter().enumerate() {
        let w = (exps[i] - max_e).exp();
        sum += w;
        m1 += a * w;
        m2_re += a.re * a.re * w;
        m2_im += a.im * a.im * w;
    }
    let mean = m1 / sum;
    let var = m2_re / sum - mean.re * mean.re + m2_im / sum - mean.im * mean.im;
    (mean, (var * inv_tau).max(0.0))
}

/// Linear shrinkage E_s/(E_s + tau) * z of the Gaussian prior.
pub fn f_gaussian(z: Complex64, tau: f64, energy: f64) -> Complex64 {
    if tau.is_infinite() {
        return Complex64::new(0.0, 0.0);
    }
    z * (energy / (energy + tau))
}

/// Hypercube-prior posterior mean, applied per real dimension with
/// per-dimension variance tau/2.
pub fn f_hypercube(z: Complex64, tau: f64, alpha: f64) -> Result<Complex64> {
    if !(tau > 0.0) {
        return Err(Error::invalid(
            "tau must be positive for the hypercube denoiser (use f_boxclip for the limit)",
        ));
    }
    let v = tau / 2.0;
    let (re, _) = trunc_gauss_mean_deriv(z.re, alpha, v);
    let (im, _) = trunc_gauss_mean_deriv(z.im, alpha, v);
    Ok(Complex64::new(re, im))
}

/// Per-dimension clip to [-alpha, alpha].
pub fn f_boxclip(z: Complex64, alpha: f64) -> Complex64 {
    Complex64::new(z.re.clamp(-alpha, alpha), z.im.clamp(-alpha, alpha))
}

impl Denoiser {
    pub fn label(&self) -> &'static str {
        match self {
            Denoiser::Discrete(_) => "lama",
            Denoiser::Gaussian { .. } => "gauss",
            Denoiser::Hypercube { .. } => "hypercube",
            Denoiser::BoxClip { .. } => "boxclip",
        }
    }

    /// Whether the tau parameter has any effect on the output.
    pub fn uses_tau(&self) -> bool {
        !matches!(self, Denoiser::BoxClip { .. })
    }

    /// F(z, tau) together with the per-entry derivative
    /// (dF_R/dz_R + dF_I/dz_I)/2.
    pub fn apply_with_deriv(&self, z: Complex64, tau: Tau) -> (Complex64, f64) {
        match (self, tau) {
            (Denoiser::Discrete(c), Tau::Value(t)) if t > 0.0 => {
                let (mean, var_over_tau) = discrete_posterior(z, t, c);
                (mean, var_over_tau)
            }
            (Denoiser::Discrete(c), Tau::Value(_)) | (Denoiser::Discrete(c), Tau::Zero) => {
                (c.slice(z), 0.0)
            }
            (Denoiser::Discrete(c), Tau::Infinity) => (c.moments().mean, 0.0),
            (Denoiser::Gaussian { energy }, Tau::Value(t)) => {
                let g = energy / (energy + t);
                (z * g, g)
            }
            (Denoiser::Gaussian { .. }, Tau::Zero) => (z, 1.0),
            (Denoiser::Gaussian { .. }, Tau::Infinity) => (Complex64::new(0.0, 0.0), 0.0),
            (Denoiser::Hypercube { alpha }, Tau::Value(t)) if t > 0.0 => {
                let v = t / 2.0;
                let (re, dr) = trunc_gauss_mean_deriv(z.re, *alpha, v);
                let (im, di) = trunc_gauss_mean_deriv(z.im, *alpha, v);
                (Complex64::new(re, im), 0.5 * (dr + di))
            }
            (Denoiser::Hypercube { alpha }, _) | (Denoiser::BoxClip { alpha }, _) => {
                // tau -> 0 limit of the hypercube prior (Tau::Infinity is
                // excluded by the tuning-policy validation)
                let inside_r = z.re.abs() <= *alpha;
                let inside_i = z.im.abs() <= *alpha;
                (
                    f_boxclip(z, *alpha),
                    0.5 * (inside_r as u8 as f64 + inside_i as u8 as f64),
                )
            }
        }
    }

    pub fn apply(&self, z: Complex64, tau: Tau) -> Complex64 {
        self.apply_with_deriv(z, tau).0
    }

    /// Component-averaged derivative <F'> over a vector of inputs.
    pub fn divergence(&self, z_vec: &[Complex64], tau: Tau) -> f64 {
        assert!(!z_vec.is_empty());
        z_vec
            .iter()
            .map(|&z| self.apply_with_deriv(z, tau).1)
            .sum::<f64>()
            / z_vec.len() as f64
    }

    /// Per-real-dimension form, used by the scalar recursions.
    ///
    /// For the discrete prior this requires a separable constellation; the
    /// per-dimension Gaussian energy is half the complex energy.
    pub fn per_dimension(&self) -> Result<RealDenoiser> {
        match self {
            Denoiser::Discrete(c) => Ok(RealDenoiser::Discrete(c.real_decompose()?)),
            Denoiser::Gaussian { energy } => Ok(RealDenoiser::Gaussian {
                energy: energy / 2.0,
            }),
            Denoiser::Hypercube { alpha } => Ok(RealDenoiser::Hypercube { alpha: *alpha }),
            Denoiser::BoxClip { alpha } => Ok(RealDenoiser::BoxClip { alpha: *alpha }),
        }
    }
}

/// Real discrete posterior under per-dimension noise variance v.
fn real_discrete_posterior(z: f64, v: f64, c: &RealConstellation) -> (f64, f64) {
    let symbols = c.symbols();
    let probs = c.probabilities();
    let inv = 1.0 / (2.0 * v);
    let mut max_e = f64::NEG_INFINITY;
    let mut exps = [0.0f64; 64];
    debug_assert!(symbols.len() <= 64);
    for (i, &a) in symbols.iter().enumerate() {
        let e = -(z - a) * (z - a) * inv + probs[i].ln();
        exps[i] = e;
        if e > max_e {
            max_e = e;
        }
    }
    let (mut sum, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (i, &a) in symbols.iter().enumerate() {
        let w = (exps[i] - max_e).exp();
        sum += w;
        m1 += a * w;
        m2 += a * a * w;
    }
    let mean = m1 / sum;
    let var = m2 / sum - mean * mean;
    (mean, (var / v).max(0.0))
}

impl RealDenoiser {
    /// F(z, v) and dF/dz for per-dimension noise variance v.
    pub fn apply_with_deriv(&self, z: f64, v: Tau) -> (f64, f64) {
        match (self, v) {
            (RealDenoiser::Discrete(c), Tau::Value(t)) if t > 0.0 => {
                real_discrete_posterior(z, t, c)
            }
            (RealDenoiser::Discrete(c), Tau::Value(_)) | (RealDenoiser::Discrete(c), Tau::Zero) => {
                (c.slice(z), 0.0)
            }
            (RealDenoiser::Discrete(c), Tau::Infinity) => (c.moments().mean.re, 0.0),
            (RealDenoiser::Gaussian { energy }, Tau::Value(t)) => {
                let g = energy / (energy + t);
                (z * g, g)
            }
            (RealDenoiser::Gaussian { .. }, Tau::Zero) => (z, 1.0),
            (RealDenoiser::Gaussian { .. }, Tau::Infinity) => (0.0, 0.0),
            (RealDenoiser::Hypercube { alpha }, Tau::Value(t)) if t > 0.0 => {
                trunc_gauss_mean_deriv(z, *alpha, t)
            }
            (RealDenoiser::Hypercube { alpha }, _) | (RealDenoiser::BoxClip { alpha }, _) => {
                (z.clamp(-*alpha, *alpha), (z.abs() <= *alpha) as u8 as f64)
            }
        }
    }

    pub fn apply(&self, z: f64, v: Tau) -> f64 {
        self.apply_with_deriv(z, v).0
    }

    /// Locations where F(., v) has kinks or sharp transitions, used to
    /// pre-split adaptive quadrature: box boundaries for the clipped
    /// priors, decision midpoints for the discrete prior.
    pub fn feature_points(&self) -> Vec<f64> {
        match self {
            RealDenoiser::Gaussian { .. } => Vec::new(),
            RealDenoiser::Hypercube { alpha } | RealDenoiser::BoxClip { alpha } => {
                vec![-*alpha, *alpha]
            }
            RealDenoiser::Discrete(c) => c
                .symbols()
                .windows(2)
                .map(|w| 0.5 * (w[0] + w[1]))
                .collect(),
        }
    }
}
