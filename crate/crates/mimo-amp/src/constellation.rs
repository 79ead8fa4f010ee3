//! Transmit constellations, their moments, and the complex-to-real
//! separable decomposition used by the scalar analysis.
//!
//! Factory constellations stay on the unnormalized odd-integer grid
//! {±1, ±3, ...}; SNR is defined downstream as beta*E_s/N0, so no per-set
//! normalization is applied.

use num_complex::Complex64;

use crate::error::{Error, Result};

const PROB_SUM_TOL: f64 = 1e-12;
const FACTOR_TOL: f64 = 1e-10;
const GRID_TOL: f64 = 1e-9;

/// First and second moments of a symbol prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: Complex64,
    pub energy: f64,
    pub variance: f64,
}

/// A finite complex constellation with symbol probabilities.
///
/// Symbols are kept in canonical order (lexicographic by real part, then
/// imaginary part) so nearest-symbol tie-breaking is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    symbols: Vec<Complex64>,
    probabilities: Vec<f64>,
    label: String,
}

/// A finite real constellation together with the hypercube half-width
/// `alpha` that covers it (alpha = M-1 for M-PAM).
#[derive(Debug, Clone, PartialEq)]
pub struct RealConstellation {
    symbols: Vec<f64>,
    probabilities: Vec<f64>,
    alpha: f64,
    label: String,
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(Error::invalid("symbol probabilities must be nonnegative"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::invalid(format!(
            "symbol probabilities must sum to 1 (got {sum})"
        )));
    }
    Ok(())
}

impl Constellation {
    pub fn new(
        symbols: Vec<Complex64>,
        probabilities: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if symbols.is_empty() || symbols.len() != probabilities.len() {
            return Err(Error::invalid(
                "constellation needs matching nonempty symbol and probability lists",
            ));
        }
        check_probs(&probabilities)?;
        let mut pairs: Vec<(Complex64, f64)> =
            symbols.into_iter().zip(probabilities).collect();
        pairs.sort_by(|a, b| {
            a.0.re
                .total_cmp(&b.0.re)
                .then(a.0.im.total_cmp(&b.0.im))
        });
        for w in pairs.windows(2) {
            if (w[0].0 - w[1].0).norm() < GRID_TOL {
                return Err(Error::invalid("constellation symbols must be distinct"));
            }
        }
        Ok(Constellation {
            symbols: pairs.iter().map(|p| p.0).collect(),
            probabilities: pairs.iter().map(|p| p.1).collect(),
            label: label.into(),
        })
    }

    /// Square M^2-QAM on the per-dimension odd-integer grid, uniform symbols.
    pub fn make_qam(points: usize) -> Result<Self> {
        let m = (points as f64).sqrt().round() as usize;
        if m * m != points || !m.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "QAM size must be the square of an even integer (4, 16, 64, 256); got {points}"
            )));
        }
        let pam = RealConstellation::make_pam(m)?;
        let mut symbols = Vec::with_capacity(points);
        for &re in pam.symbols() {
            for &im in pam.symbols() {
                symbols.push(Complex64::new(re, im));
            }
        }
        let p = 1.0 / points as f64;
        let label = match points {
            4 => "QPSK".to_string(),
            n => format!("{n}QAM"),
        };
        Constellation::new(symbols, vec![p; points], label)
    }

    /// Antipodal {-1, +1} on the real axis of a complex system.
    pub fn bpsk() -> Self {
        Constellation::new(
            vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![0.5, 0.5],
            "BPSK",
        )
        .expect("static constellation")
    }

    pub fn from_label(label: &str) -> Result<Self> {
        match label.to_ascii_uppercase().as_str() {
            "BPSK" => Ok(Constellation::bpsk()),
            "QPSK" | "4QAM" => Constellation::make_qam(4),
            "16QAM" => Constellation::make_qam(16),
            "64QAM" => Constellation::make_qam(64),
            "256QAM" => Constellation::make_qam(256),
            other => Err(Error::invalid(format!(
                "unknown constellation '{other}' (expected BPSK, QPSK, 16QAM, 64QAM, 256QAM)"
            ))),
        }
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn moments(&self) -> Moments {
        let mean: Complex64 = self
            .symbols
            .iter()
            .zip(&self.probabilities)
            .map(|(s, p)| s * p)
            .sum();
        let energy: f64 = self
            .symbols
            .iter()
            .zip(&self.probabilities)
            .map(|(s, p)| s.norm_sqr() * p)
            .sum();
        Moments {
            mean,
            energy,
            variance: energy - mean.norm_sqr(),
        }
    }

    /// Nearest-symbol slicer; ties resolve to the canonically first symbol.
    pub fn slice(&self, z: Complex64) -> Complex64 {
        let mut best = self.symbols[0];
        let mut best_d = (z - best).norm_sqr();
        for &s in &self.symbols[1..] {
            let d = (z - s).norm_sqr();
            if d < best_d {
                best = s;
                best_d = d;
            }
        }
        best
    }

    /// Per-dimension real constellation of a separable set.
    ///
    /// Separability is verified explicitly: the symbol set must be the full
    /// grid R x R and the joint probability table must factor into identical
    /// marginals. Downstream scalar recursions use the Z ~ N(0, 1/2)
    /// per-dimension noise convention.
    pub fn real_decompose(&self) -> Result<RealConstellation> {
        let mut re_axis: Vec<f64> = Vec::new();
        let mut im_axis: Vec<f64> = Vec::new();
        for s in &self.symbols {
            if !re_axis.iter().any(|&v| (v - s.re).abs() < GRID_TOL) {
                re_axis.push(s.re);
            }
            if !im_axis.iter().any(|&v| (v - s.im).abs() < GRID_TOL) {
                im_axis.push(s.im);
            }
        }
        re_axis.sort_by(f64::total_cmp);
        im_axis.sort_by(f64::total_cmp);
        if re_axis.len() != im_axis.len()
            || re_axis
                .iter()
                .zip(&im_axis)
                .any(|(a, b)| (a - b).abs() > GRID_TOL)
        {
            return Err(Error::invalid(format!(
                "constellation '{}' is not separable: real and imaginary axes differ",
                self.label
            )));
        }
        let m = re_axis.len();
        if self.symbols.len() != m * m {
            return Err(Error::invalid(format!(
                "constellation '{}' is not separable: {} symbols do not fill the {m}x{m} grid",
                self.label,
                self.symbols.len()
            )));
        }
        // joint table indexed by (re, im) axis position
        let mut joint = vec![vec![0.0f64; m]; m];
        for (s, &p) in self.symbols.iter().zip(&self.probabilities) {
            let i = re_axis
                .iter()
                .position(|&v| (v - s.re).abs() < GRID_TOL)
                .unwrap();
            let j = im_axis
                .iter()
                .position(|&v| (v - s.im).abs() < GRID_TOL)
                .unwrap();
            joint[i][j] = p;
        }
        let p_re: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
        let p_im: Vec<f64> = (0..m).map(|j| joint.iter().map(|row| row[j]).sum()).collect();
        for i in 0..m {
            if (p_re[i] - p_im[i]).abs() > FACTOR_TOL {
                return Err(Error::invalid(format!(
                    "constellation '{}' is not separable: marginals differ",
                    self.label
                )));
            }
            for j in 0..m {
                if (joint[i][j] - p_re[i] * p_im[j]).abs() > FACTOR_TOL {
                    return Err(Error::invalid(format!(
                        "constellation '{}' is not separable: joint table does not factor",
                        self.label
                    )));
                }
            }
        }
        let alpha = re_axis.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        RealConstellation::new(re_axis, p_re, alpha, format!("{}-dim", self.label))
    }
}

impl RealConstellation {
    pub fn new(
        symbols: Vec<f64>,
        probabilities: Vec<f64>,
        alpha: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if symbols.is_empty() || symbols.len() != probabilities.len() {
            return Err(Error::invalid(
                "constellation needs matching nonempty symbol and probability lists",
            ));
        }
        if !(alpha > 0.0) {
            return Err(Error::invalid("hypercube half-width must be positive"));
        }
        check_probs(&probabilities)?;
        let mut pairs: Vec<(f64, f64)> = symbols.into_iter().zip(probabilities).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pairs.windows(2) {
            if (w[0].0 - w[1].0).abs() < GRID_TOL {
                return Err(Error::invalid("constellation symbols must be distinct"));
            }
        }
        Ok(RealConstellation {
            symbols: pairs.iter().map(|p| p.0).collect(),
            probabilities: pairs.iter().map(|p| p.1).collect(),
            alpha,
            label: label.into(),
        })
    }

    /// M-PAM on the odd-integer grid {2k-1 : k = -M/2+1, ..., M/2}, uniform.
    pub fn make_pam(points: usize) -> Result<Self> {
        if points < 2 || !points.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "PAM size must be even and >= 2; got {points}"
            )));
        }
        let half = points as i64 / 2;
        let symbols: Vec<f64> = (-half + 1..=half).map(|k| (2 * k - 1) as f64).collect();
        let p = 1.0 / points as f64;
        RealConstellation::new(
            symbols,
            vec![p; points],
            (points - 1) as f64,
            format!("{points}PAM"),
        )
    }

    pub fn from_label(label: &str) -> Result<Self> {
        match label.to_ascii_uppercase().as_str() {
            "BPSK" | "2PAM" => RealConstellation::make_pam(2),
            "4PAM" => RealConstellation::make_pam(4),
            "8PAM" => RealConstellation::make_pam(8),
            other => Err(Error::invalid(format!(
                "unknown real constellation '{other}' (expected BPSK, 2PAM, 4PAM, 8PAM)"
            ))),
        }
    }

    pub fn symbols(&self) -> &[f64] {
        &self.symbols
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn moments(&self) -> Moments {
        let mean: f64 = self
            .symbols
            .iter()
            .zip(&self.probabilities)
            .map(|(s, p)| s * p)
            .sum();
        let energy: f64 = self
            .symbols
            .iter()
            .zip(&self.probabilities)
            .map(|(s, p)| s * s * p)
            .sum();
        Moments {
            mean: Complex64::new(mean, 0.0),
            energy,
            variance: energy - mean * mean,
        }
    }

    pub fn slice(&self, z: f64) -> f64 {
        let mut best = self.symbols[0];
        let mut best_d = (z - best).abs();
        for &s in &self.symbols[1..] {
            let d = (z - s).abs();
            if d < best_d {
                best = s;
                best_d = d;
            }
        }
        best
    }
}
