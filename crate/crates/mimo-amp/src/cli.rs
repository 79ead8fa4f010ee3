//! Config-driven front end: SE traces, MRT computation, fixed-point
//! analysis, Monte-Carlo sweeps, and detector comparisons, emitting CSV
//! plus a JSON sidecar sufficient to re-run the experiment.
//!
//! Configuration comes from an optional TOML file plus flags; flags
//! override file values, and anything left unset falls back to the
//! defaults (t_max = 10, trials = 1000, tuning = optimal). Thread count
//! follows rayon's `RAYON_NUM_THREADS` environment variable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::amp::TuningPolicy;
use crate::constellation::{Constellation, RealConstellation};
use crate::denoiser::{Denoiser, RealDenoiser, Tau};
use crate::error::{Error, Result};
use crate::sim::{
    ser_sweep, ser_sweep_real, Detector, SerResult, SweepConfig, ALL_DETECTORS,
};
use crate::state_evolution::{fixed_point, mrt, run_se, MseObjective};

/// Exit-status contract: 0 success, 1 usage error, 2 numerical failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Invalid(_) | Error::Io(_) => 1,
        Error::Numerical(_) => 2,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mimo-amp",
    version,
    about = "Mismatched-AMP MIMO detection: state evolution, thresholds, and Monte-Carlo sweeps",
    after_help = "Thread count is controlled by the RAYON_NUM_THREADS environment variable."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the state-evolution recursion and write the sigma^2 trace.
    Se(CommonArgs),
    /// Monte-Carlo SER sweep over an SNR grid.
    Sim(CommonArgs),
    /// Minimum recovery threshold for a detector/constellation pair.
    Mrt(CommonArgs),
    /// Solve the SE fixed-point equation and report all solutions.
    FixedPoint(CommonArgs),
    /// Sweep several detectors and report per-SNR confidence-interval overlap.
    Compare(CommonArgs),
}

/// Flags mirroring the experiment-config fields; every flag overrides the
/// corresponding config-file key.
#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Transmit antennas.
    #[arg(long)]
    pub mt: Option<usize>,
    /// Receive antennas.
    #[arg(long)]
    pub mr: Option<usize>,
    /// System ratio MT/MR (SE-only modes; ignored when mt/mr are given).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Constellation label (BPSK, QPSK, 16QAM, 64QAM, 2PAM, 4PAM).
    #[arg(long)]
    pub constellation: Option<String>,
    /// Comma-separated detector labels.
    #[arg(long, value_delimiter = ',')]
    pub detectors: Option<Vec<String>>,
    /// Tuning mode: optimal, matched, zero, inf, or a fixed tau value.
    #[arg(long)]
    pub tuning: Option<String>,
    /// AMP / SE iteration count.
    #[arg(long)]
    pub t_max: Option<usize>,
    /// Comma-separated SNR grid in dB.
    #[arg(long, value_delimiter = ',')]
    pub snr_db: Option<Vec<f64>>,
    /// SNR range start,stop,step in dB (alternative to --snr-db).
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub snr_range: Option<Vec<f64>>,
    /// Monte-Carlo trials per SNR point.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Noise variance N0 (SE modes).
    #[arg(long)]
    pub n0: Option<f64>,
    /// Master seed for reproducible sweeps.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path; the JSON sidecar lands next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Use the real-valued system model (PAM/BPSK).
    #[arg(long)]
    pub real_mode: bool,
}

/// Config-file schema; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mt: Option<usize>,
    mr: Option<usize>,
    beta: Option<f64>,
    constellation: Option<String>,
    detectors: Option<Vec<String>>,
    tuning: Option<String>,
    t_max: Option<usize>,
    snr_db: Option<Vec<f64>>,
    snr_range: Option<Vec<f64>>,
    trials: Option<usize>,
    n0: Option<f64>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    real_mode: Option<bool>,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub mode: String,
    pub mt: Option<usize>,
    pub mr: Option<usize>,
    pub beta: Option<f64>,
    pub constellation: String,
    pub detectors: Vec<String>,
    pub tuning: String,
    pub t_max: usize,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub n0: Option<f64>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub real_mode: bool,
}

impl ExperimentConfig {
    pub fn beta(&self) -> Result<f64> {
        if let (Some(mt), Some(mr)) = (self.mt, self.mr) {
            if mt == 0 || mr == 0 {
                return Err(Error::invalid("mt and mr must be at least 1"));
            }
            return Ok(mt as f64 / mr as f64);
        }
        self.beta
            .filter(|b| *b > 0.0)
            .ok_or_else(|| Error::invalid("provide mt and mr, or a positive beta"))
    }

    pub fn tuning_policy(&self) -> Result<TuningPolicy> {
        parse_tuning(&self.tuning)
    }

    pub fn parsed_detectors(&self) -> Result<Vec<Detector>> {
        self.detectors.iter().map(|l| Detector::from_label(l)).collect()
    }
}

pub fn parse_tuning(label: &str) -> Result<TuningPolicy> {
    match label {
        "optimal" => Ok(TuningPolicy::Optimal),
        "matched" => Ok(TuningPolicy::Matched),
        "zero" => Ok(TuningPolicy::FixedTau(Tau::Zero)),
        "inf" | "infinity" => Ok(TuningPolicy::FixedTau(Tau::Infinity)),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|v| *v >= 0.0 && v.is_finite())
            .map(|v| TuningPolicy::FixedTau(Tau::Value(v)))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown tuning '{other}' (valid: optimal, matched, zero, inf, or a nonnegative tau)"
                ))
            }),
    }
}

fn snr_grid(list: Option<Vec<f64>>, range: Option<Vec<f64>>) -> Result<Option<Vec<f64>>> {
    if let Some(list) = list {
        if list.is_empty() {
            return Err(Error::invalid("snr_db must not be empty"));
        }
        return Ok(Some(list));
    }
    if let Some(r) = range {
        if r.len() != 3 {
            return Err(Error::invalid("snr_range expects start,stop,step"));
        }
        let (start, stop, step) = (r[0], r[1], r[2]);
        if !(step > 0.0) || stop < start {
            return Err(Error::invalid("snr_range requires stop >= start and step > 0"));
        }
        let n = ((stop - start) / step).round() as usize + 1;
        return Ok(Some((0..n).map(|i| start + step * i as f64).collect()));
    }
    Ok(None)
}

/// Merges file values and flags (flags win) and applies defaults.
pub fn parse_config(mode: &str, args: &CommonArgs) -> Result<ExperimentConfig> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text)
                .map_err(|e| Error::invalid(format!("bad config file {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let snr_db = snr_grid(
        args.snr_db.clone().or(file.snr_db),
        args.snr_range.clone().or(file.snr_range),
    )?
    .unwrap_or_else(|| vec![2.0, 4.0, 6.0, 8.0, 10.0, 12.0]);
    let cfg = ExperimentConfig {
        mode: mode.to_string(),
        mt: args.mt.or(file.mt),
        mr: args.mr.or(file.mr),
        beta: args.beta.or(file.beta),
        constellation: args
            .constellation
            .clone()
            .or(file.constellation)
            .unwrap_or_else(|| "QPSK".to_string()),
        detectors: args
            .detectors
            .clone()
            .or(file.detectors)
            .unwrap_or_else(|| vec!["lama".to_string()]),
        tuning: args.tuning.clone().or(file.tuning).unwrap_or_else(|| "optimal".to_string()),
        t_max: args.t_max.or(file.t_max).unwrap_or(10),
        snr_db,
        trials: args.trials.or(file.trials).unwrap_or(1000),
        n0: args.n0.or(file.n0),
        seed: args.seed.or(file.seed).unwrap_or(0),
        output: args.output.clone().or(file.output),
        real_mode: args.real_mode || file.real_mode.unwrap_or(false),
    };
    // eager validation of labels so errors surface before any computation
    cfg.parsed_detectors()?;
    cfg.tuning_policy()?;
    if cfg.t_max == 0 {
        return Err(Error::invalid("t_max must be at least 1"));
    }
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    Ok(cfg)
}

/// One detector's (objective, policy) pair in SE space, honoring real mode.
fn se_objective(
    d: &Detector,
    cfg: &ExperimentConfig,
) -> Result<(MseObjective, TuningPolicy)> {
    let tuning = cfg.tuning_policy()?;
    if cfg.real_mode {
        let prior = RealConstellation::from_label(&cfg.constellation)?;
        let energy = prior.moments().energy;
        let (den, policy) = match d {
            Detector::Lama => (RealDenoiser::Discrete(prior.clone()), tuning),
            Detector::Gauss | Detector::MmseExact => {
                (RealDenoiser::Gaussian { energy }, TuningPolicy::Optimal)
            }
            Detector::GaussZf => (
                RealDenoiser::Gaussian { energy },
                TuningPolicy::FixedTau(Tau::Zero),
            ),
            Detector::GaussMf => (
                RealDenoiser::Gaussian { energy },
                TuningPolicy::FixedTau(Tau::Infinity),
            ),
            Detector::Hypercube => (RealDenoiser::Hypercube { alpha: prior.alpha() }, tuning),
            Detector::Boxclip | Detector::BoxCvx => (
                RealDenoiser::BoxClip { alpha: prior.alpha() },
                TuningPolicy::FixedTau(Tau::Zero),
            ),
            _ => {
                return Err(Error::invalid(format!(
                    "detector '{}' has no state-evolution description",
                    d.label()
                )))
            }
        };
        Ok((MseObjective::real(&prior, &den), policy))
    } else {
        let prior = Constellation::from_label(&cfg.constellation)?;
        let energy = prior.moments().energy;
        let (den, policy) = match d {
            Detector::Lama => (Denoiser::Discrete(prior.clone()), tuning),
            Detector::Gauss | Detector::MmseExact => {
                (Denoiser::Gaussian { energy }, TuningPolicy::Optimal)
            }
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
                (Denoiser::Hypercube { alpha }, tuning)
            }
            Detector::Boxclip | Detector::BoxCvx => {
                let alpha = prior.real_decompose()?.alpha();
                (Denoiser::BoxClip { alpha }, TuningPolicy::FixedTau(Tau::Zero))
            }
            _ => {
                return Err(Error::invalid(format!(
                    "detector '{}' has no state-evolution description",
                    d.label()
                )))
            }
        };
        Ok((MseObjective::complex(&prior, &den), policy))
    }
}

fn single_detector(cfg: &ExperimentConfig) -> Result<Detector> {
    let dets = cfg.parsed_detectors()?;
    if dets.len() != 1 {
        return Err(Error::invalid("this mode expects exactly one detector"));
    }
    Ok(dets[0])
}

fn require_n0(cfg: &ExperimentConfig) -> Result<f64> {
    cfg.n0
        .filter(|v| *v >= 0.0)
        .ok_or_else(|| Error::invalid("this mode requires --n0 (nonnegative)"))
}

fn write_outputs(cfg: &ExperimentConfig, csv: &str, summary: &str) -> Result<()> {
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, csv)?;
            let sidecar = sidecar_path(path);
            let meta = serde_json::json!({
                "config": cfg,
                "seed": cfg.seed,
                "snr_convention": "snr_db = 10 log10(beta * E_s / N0) (receive SNR)",
                "version": format!("mimo-amp {}", env!("CARGO_PKG_VERSION")),
            });
            std::fs::write(&sidecar, serde_json::to_string_pretty(&meta)? + "\n")?;
            println!("{summary}");
            println!("wrote {} and {}", path.display(), sidecar.display());
        }
        None => {
            println!("{summary}");
            print!("{csv}");
        }
    }
    Ok(())
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn sweep_csv(results: &[SerResult]) -> String {
    let mut out = String::from("detector,snr_db,trials,errors,ser,ci_low,ci_high,se_prediction\n");
    for r in results {
        let pred = r
            .se_prediction
            .map(|p| format!("{p:.12e}"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{:.12e},{:.12e},{:.12e},{pred}",
            r.detector, r.snr_db, r.trials, r.errors, r.ser, r.ci_low, r.ci_high
        );
    }
    out
}

fn sweep_summary(results: &[SerResult]) -> String {
    results
        .iter()
        .map(|r| {
            format!(
                "{} @ {:>5.1} dB: ser {:.4e} [{:.4e}, {:.4e}]{}",
                r.detector,
                r.snr_db,
                r.ser,
                r.ci_low,
                r.ci_high,
                r.se_prediction
                    .map(|p| format!(" (SE {p:.4e})"))
                    .unwrap_or_default()
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SerResult>> {
    let (mt, mr) = match (cfg.mt, cfg.mr) {
        (Some(mt), Some(mr)) => (mt, mr),
        _ => return Err(Error::invalid("sim/compare require --mt and --mr")),
    };
    let sweep_cfg = SweepConfig {
        m_t: mt,
        m_r: mr,
        t_max: cfg.t_max,
        trials: cfg.trials,
        master_seed: cfg.seed,
        tuning: cfg.tuning_policy()?,
        box_max_iters: 5000,
        box_tol: 1e-12,
    };
    let detectors = cfg.parsed_detectors()?;
    if cfg.real_mode {
        let prior = RealConstellation::from_label(&cfg.constellation)?;
        ser_sweep_real(&sweep_cfg, &prior, &detectors, &cfg.snr_db)
    } else {
        let prior = Constellation::from_label(&cfg.constellation)?;
        ser_sweep(&sweep_cfg, &prior, &detectors, &cfg.snr_db)
    }
}

fn run_se_mode(cfg: &ExperimentConfig) -> Result<()> {
    let beta = cfg.beta()?;
    let n0 = require_n0(cfg)?;
    let d = single_detector(cfg)?;
    let (obj, policy) = se_objective(&d, cfg)?;
    let trace = run_se(beta, n0, &obj, &policy, cfg.t_max);
    let mut csv = String::from("t,sigma_sq,gamma_sq\n");
    let _ = writeln!(csv, "1,{:.12e},", trace.sigma_sq[0]);
    for (t, (s, g)) in trace.sigma_sq[1..].iter().zip(&trace.gamma_sq).enumerate() {
        let gamma = match g {
            Tau::Value(v) => format!("{v:.12e}"),
            Tau::Zero => "0".to_string(),
            Tau::Infinity => "inf".to_string(),
        };
        let _ = writeln!(csv, "{},{:.12e},{gamma}", t + 2, s);
    }
    let summary = format!(
        "se {} / {}: beta {beta}, N0 {n0}, sigma^2 after {} iterations = {:.8}",
        d.label(),
        cfg.constellation,
        cfg.t_max,
        trace.final_sigma_sq()
    );
    write_outputs(cfg, &csv, &summary)
}

fn run_mrt_mode(cfg: &ExperimentConfig) -> Result<()> {
    let d = single_detector(cfg)?;
    let (obj, policy) = se_objective(&d, cfg)?;
    let value = mrt(&obj, &policy);
    let csv = format!(
        "detector,constellation,mrt\n{},{},{value:.12e}\n",
        d.label(),
        cfg.constellation
    );
    let summary = format!("mrt {} / {} = {value:.6}", d.label(), cfg.constellation);
    write_outputs(cfg, &csv, &summary)
}

fn run_fixed_point_mode(cfg: &ExperimentConfig) -> Result<()> {
    let beta = cfg.beta()?;
    let n0 = require_n0(cfg)?;
    let d = single_detector(cfg)?;
    let (obj, policy) = se_objective(&d, cfg)?;
    let report = fixed_point(beta, n0, &obj, &policy);
    let mut csv = String::from("solution,sigma_sq,converged_to\n");
    for (i, s) in report.solutions.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{s:.12e},{}",
            i + 1,
            if (*s - report.converged_to).abs() < 1e-9 * s.max(1.0) {
                "yes"
            } else {
                "no"
            }
        );
    }
    let mut summary = format!(
        "fixed-point {} / {}: beta {beta}, N0 {n0}: {} solution(s), SE converges to {:.8}",
        d.label(),
        cfg.constellation,
        report.solutions.len(),
        report.converged_to
    );
    if let Some(w) = &report.warning {
        let _ = write!(summary, "\nwarning: {w}");
    }
    write_outputs(cfg, &csv, &summary)
}

fn run_sim_mode(cfg: &ExperimentConfig) -> Result<()> {
    let results = run_sweep(cfg)?;
    write_outputs(cfg, &sweep_csv(&results), &sweep_summary(&results))
}

fn run_compare_mode(cfg: &ExperimentConfig) -> Result<()> {
    let detectors = cfg.parsed_detectors()?;
    if detectors.len() < 2 {
        return Err(Error::invalid("compare requires at least two detectors"));
    }
    let results = run_sweep(cfg)?;
    let mut summary = sweep_summary(&results);
    summary.push('\n');
    for &snr in &cfg.snr_db {
        let at: Vec<&SerResult> = results.iter().filter(|r| r.snr_db == snr).collect();
        for i in 0..at.len() {
            for j in (i + 1)..at.len() {
                let (a, b) = (at[i], at[j]);
                let overlap = a.ci_low <= b.ci_high && b.ci_low <= a.ci_high;
                let _ = write!(
                    summary,
                    "\n{:>5.1} dB: {} vs {}: CIs {}",
                    snr,
                    a.detector,
                    b.detector,
                    if overlap { "overlap" } else { "DISJOINT" }
                );
            }
        }
    }
    write_outputs(cfg, &sweep_csv(&results), &summary)
}

/// Executes a parsed command line; the caller maps errors to exit codes.
pub fn run(cli: Cli) -> Result<()> {
    let (mode, args) = match &cli.command {
        Command::Se(a) => ("se", a),
        Command::Sim(a) => ("sim", a),
        Command::Mrt(a) => ("mrt", a),
        Command::FixedPoint(a) => ("fixed-point", a),
        Command::Compare(a) => ("compare", a),
    };
    let cfg = parse_config(mode, args)?;
    match mode {
        "se" => run_se_mode(&cfg),
        "sim" => run_sim_mode(&cfg),
        "mrt" => run_mrt_mode(&cfg),
        "fixed-point" => run_fixed_point_mode(&cfg),
        "compare" => run_compare_mode(&cfg),
        _ => unreachable!(),
    }
}

/// All valid detector labels, for help text and tests.
pub fn detector_labels() -> Vec<&'static str> {
    ALL_DETECTORS.iter().map(|d| d.label()).collect()
}
