//! End-to-end tests of the command-line front end: exit codes, output
//! artifacts, and reproducibility.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mimo-amp"))
}

#[test]
fn rerun_produces_byte_identical_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(
        &config,
        r#"
mt = 16
mr = 32
constellation = "QPSK"
detectors = ["boxclip", "mmse-exact"]
trials = 40
snr_db = [6.0, 10.0]
seed = 12
"#,
    )
    .unwrap();
    let run = |out: &Path| {
        let status = bin()
            .args(["sim", "--config"])
            .arg(&config)
            .arg("--output")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    };
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    run(&out1);
    run(&out2);
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "reruns must be byte-identical");

    // the sidecar echoes enough to re-run the experiment
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    assert_eq!(sidecar["config"]["mt"], 16);
    assert_eq!(sidecar["config"]["trials"], 40);
    assert_eq!(sidecar["seed"], 12);
    assert!(sidecar["snr_convention"].as_str().unwrap().contains("beta"));
    assert!(sidecar["version"].as_str().unwrap().contains("mimo-amp"));

    let csv = String::from_utf8(a).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "detector,snr_db,trials,errors,ser,ci_low,ci_high,se_prediction"
    );
    assert_eq!(lines.count(), 4); // 2 detectors x 2 SNR points
}

#[test]
fn usage_errors_exit_1() {
    let out = bin().args(["sim", "--detectors", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8(out.stderr).unwrap();
    assert!(msg.contains("bogus") && msg.contains("boxclip"), "{msg}");

    // zero forcing on an overloaded system is rejected up front
    let out = bin()
        .args([
            "sim", "--mt", "32", "--mr", "16", "--detectors", "zf-exact", "--trials", "5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("beta"));
}

#[test]
fn se_mode_reports_known_fixed_point() {
    let out = bin()
        .args([
            "se",
            "--beta",
            "0.5",
            "--n0",
            "0.1",
            "--detectors",
            "gauss",
            "--constellation",
            "BPSK",
            "--real-mode",
            "--t-max",
            "60",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0.17416574"), "{text}");
}

#[test]
fn mrt_mode_reports_threshold() {
    let out = bin()
        .args(["mrt", "--detectors", "boxclip", "--constellation", "QPSK"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("2.000000"), "{text}");
}

#[test]
fn fixed_point_mode_lists_solutions() {
    let out = bin()
        .args([
            "fixed-point",
            "--beta",
            "2.2",
            "--n0",
            "0.01",
            "--detectors",
            "lama",
            "--tuning",
            "matched",
            "--constellation",
            "QPSK",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("3 solution(s)"), "{text}");
}

#[test]
fn compare_mode_reports_ci_overlap() {
    let out = bin()
        .args([
            "compare", "--mt", "16", "--mr", "32", "--detectors", "gauss,mmse-exact", "--trials",
            "60", "--snr-db", "8", "--seed", "4",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("gauss vs mmse-exact"), "{text}");
    assert!(text.contains("overlap"), "{text}");
}
