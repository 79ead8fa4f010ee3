//! Mismatched AMP data detection for large MIMO systems.
//!
//! The crate implements an approximate message passing detector whose
//! denoiser may use a prior that differs from the true transmit prior
//! (Gaussian, uniform hypercube, per-dimension clip, or the exact discrete
//! constellation), together with:
//!
//! * a per-iteration tuning stage that picks the denoiser variance
//!   parameter minimizing the true-prior mean-squared error,
//! * the scalar state-evolution recursion that tracks the decoupled noise
//!   variance exactly in the large-system limit, including fixed-point
//!   solving, minimum recovery thresholds, and closed-form MSE profiles of
//!   the clip denoiser for PAM/QAM,
//! * exact linear baselines (MMSE, ZF, MF), a box-relaxation convex
//!   detector, and a seeded Monte-Carlo symbol-error-rate harness,
//! * a thin CLI (`mimo-amp`) for running sweeps and analyses to CSV/JSON.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod amp;
pub mod cli;
pub mod constellation;
pub mod denoiser;
pub mod error;
pub mod quadrature;
pub mod sim;
pub mod special;
pub mod state_evolution;

pub use constellation::{Constellation, Moments, RealConstellation};
pub use denoiser::{Denoiser, RealDenoiser, Tau};
pub use error::{Error, Result};
