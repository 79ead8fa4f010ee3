//! Gaussian tail helpers shared by the denoisers and the analytic MSE forms.

use std::f64::consts::PI;

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Upper Gaussian tail Q(x) = P(Z > x) for Z ~ N(0,1).
///
/// Evaluated through `erfc`, which keeps full relative accuracy deep into the
/// tail (down to the f64 underflow point near x = 38).
#[inline]
pub fn q_func(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal CDF.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// ln Q(x), finite for arbitrarily large x.
///
/// Direct `erfc` underflows past x ~ 38; beyond a safe cutoff we switch to the
/// asymptotic tail expansion Q(x) ~ phi(x)/x * (1 - 1/x^2 + 3/x^4 - ...).
pub fn ln_q(x: f64) -> f64 {
    if x < 34.0 {
        return q_func(x).ln();
    }
    let x2 = x * x;
    let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2)
        + 105.0 / (x2 * x2 * x2 * x2);
    -0.5 * x2 - x.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

/// Wilson score interval for a binomial proportion at confidence z.
pub fn wilson_interval(errors: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // zero-count boundaries are exact, not subject to rounding residue
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if p == 1.0 { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// z-score for a two-sided 95% confidence interval.
pub const Z_95: f64 = 1.959963984540054;
