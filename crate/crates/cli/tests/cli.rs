//! Integration tests that drive the `ffmtr` binary through files, checking
//! behaviour, determinism, and exit codes (0 success, 2 usage/configuration,
//! 3 data).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ffmtr_core::io::{read_tensor, write_tensor};
use ffmtr_core::testsupport::{gaussian_tensor, rank1_tensor, uniform_tensor};
use ffmtr_core::DenseTensor;

fn ffmtr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ffmtr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn stdout_json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

struct Workdir {
    dir: tempfile::TempDir,
}

impl Workdir {
    fn new() -> Self {
        Workdir {
            dir: tempfile::tempdir().expect("tempdir"),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn tensor(&self, name: &str, x: &DenseTensor) -> PathBuf {
        let p = self.path(name);
        write_tensor(&p, x).expect("write tensor");
        p
    }

    fn json(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).expect("write config");
        p
    }
}

#[test]
fn degrade_mask_is_deterministic_and_writes_mask() {
    let w = Workdir::new();
    let input = w.tensor("t.ffmt", &uniform_tensor(&[6, 5, 4], 1));
    for run in ["a", "b"] {
        let out = ffmtr(&[
            "degrade",
            "--input",
            path_str(&input),
            "--mode",
            "mask",
            "--rate",
            "0.3",
            "--seed",
            "9",
            "--output",
            path_str(&w.path(&format!("obs_{run}.ffmt"))),
            "--mask-output",
            path_str(&w.path(&format!("mask_{run}.ffmt"))),
        ]);
        assert_exit(&out, 0);
        assert!(out.stdout.is_empty(), "machine output goes to files only");
    }
    let obs_a = std::fs::read(w.path("obs_a.ffmt")).unwrap();
    let obs_b = std::fs::read(w.path("obs_b.ffmt")).unwrap();
    assert_eq!(obs_a, obs_b, "same seed, same bytes");
    assert_eq!(
        std::fs::read(w.path("mask_a.ffmt")).unwrap(),
        std::fs::read(w.path("mask_b.ffmt")).unwrap()
    );

    let mask = read_tensor(w.path("mask_a.ffmt")).unwrap();
    let kept = mask.data().iter().filter(|&&v| v == 1.0).count();
    assert_eq!(kept, 36, "round(0.3 * 120)");
    assert!(mask.data().iter().all(|&v| v == 0.0 || v == 1.0));
    let observed = read_tensor(w.path("obs_a.ffmt")).unwrap();
    let original = read_tensor(&input).unwrap();
    for i in 0..observed.len() {
        if mask.data()[i] == 1.0 {
            assert_eq!(observed.data()[i], original.data()[i]);
        } else {
            assert_eq!(observed.data()[i], 0.0);
        }
    }
}

#[test]
fn degrade_mask_rate_one_copies_input() {
    let w = Workdir::new();
    let input = w.tensor("t.ffmt", &uniform_tensor(&[4, 4, 4], 2));
    let out = ffmtr(&[
        "degrade",
        "--input",
        path_str(&input),
        "--mode",
        "mask",
        "--rate",
        "1.0",
        "--output",
        path_str(&w.path("obs.ffmt")),
        "--mask-output",
        path_str(&w.path("mask.ffmt")),
    ]);
    assert_exit(&out, 0);
    assert_eq!(
        std::fs::read(&input).unwrap(),
        std::fs::read(w.path("obs.ffmt")).unwrap()
    );
}

#[test]
fn degrade_saltpepper_level_zero_copies_input() {
    let w = Workdir::new();
    let input = w.tensor("t.ffmt", &uniform_tensor(&[5, 5, 5], 3));
    let out = ffmtr(&[
        "degrade",
        "--input",
        path_str(&input),
        "--mode",
        "saltpepper",
        "--level",
        "0.0",
        "--output",
        path_str(&w.path("noisy.ffmt")),
    ]);
    assert_exit(&out, 0);
    assert_eq!(
        std::fs::read(&input).unwrap(),
        std::fs::read(w.path("noisy.ffmt")).unwrap()
    );
}

#[test]
fn degrade_saltpepper_replaces_exactly_the_requested_fraction() {
    let w = Workdir::new();
    let original = uniform_tensor(&[10, 10, 10], 4);
    let input = w.tensor("t.ffmt", &original);
    let out = ffmtr(&[
        "degrade",
        "--input",
        path_str(&input),
        "--mode",
        "saltpepper",
        "--level",
        "0.4",
        "--seed",
        "5",
        "--output",
        path_str(&w.path("noisy.ffmt")),
    ]);
    assert_exit(&out, 0);
    let noisy = read_tensor(w.path("noisy.ffmt")).unwrap();
    // Bit-identical to the library generator with the same seed.
    let expected = ffmtr_core::io::salt_pepper(&original, 0.4, 5).unwrap();
    assert_eq!(noisy, expected);
    // Every changed entry was set to the input's min or max; the count can
    // fall slightly short of 400 only when a selected entry already held
    // the extreme value it was assigned.
    let lo = original
        .data()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = original
        .data()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let changed = noisy
        .data()
        .iter()
        .zip(original.data())
        .filter(|(a, b)| a != b)
        .count();
    assert!((398..=400).contains(&changed), "changed {changed}");
    for (a, b) in noisy.data().iter().zip(original.data()) {
        if a != b {
            assert!(*a == lo || *a == hi);
        }
    }
}

#[test]
fn degrade_rejects_out_of_range_rate_with_usage_exit() {
    let w = Workdir::new();
    let input = w.tensor("t.ffmt", &uniform_tensor(&[3, 3, 3], 5));
    let out = ffmtr(&[
        "degrade",
        "--input",
        path_str(&input),
        "--mode",
        "mask",
        "--rate",
        "1.5",
        "--output",
        path_str(&w.path("o.ffmt")),
        "--mask-output",
        path_str(&w.path("m.ffmt")),
    ]);
    assert_exit(&out, 2);
}

#[test]
fn degrade_mask_requires_mask_output() {
    let w = Workdir::new();
    let input = w.tensor("t.ffmt", &uniform_tensor(&[3, 3, 3], 5));
    let out = ffmtr(&[
        "degrade",
        "--input",
        path_str(&input),
        "--mode",
        "mask",
        "--rate",
        "0.5",
        "--output",
        path_str(&w.path("o.ffmt")),
    ]);
    assert_exit(&out, 2);
}

#[test]
fn complete_with_full_mask_returns_input_and_reports() {
    let w = Workdir::new();
    let original = gaussian_tensor(&[5, 4, 3], 6);
    let observed = w.tensor("obs.ffmt", &original);
    let mask = w.tensor(
        "mask.ffmt",
        &DenseTensor::from_fn(&[5, 4, 3], |_| 1.0).unwrap(),
    );
    let config = w.json("cfg.json", r#"{"solver": "ffmtc"}"#);
    let out = ffmtr(&[
        "complete",
        "--observed",
        path_str(&observed),
        "--mask",
        path_str(&mask),
        "--config",
        path_str(&config),
        "--output",
        path_str(&w.path("done.ffmt")),
        "--report",
        path_str(&w.path("report.csv")),
    ]);
    assert_exit(&out, 0);
    assert_eq!(
        std::fs::read(&observed).unwrap(),
        std::fs::read(w.path("done.ffmt")).unwrap(),
        "full mask copies the input"
    );
    let csv = std::fs::read_to_string(w.path("report.csv")).unwrap();
    assert!(csv.starts_with("iter,change_inf,objective\n"));
    assert_eq!(csv.lines().count(), 2, "one iteration");
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(w.path("report.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["command"], "complete");
    assert_eq!(meta["result"]["terminated_by"], "tolerance");
    assert_eq!(meta["config"]["max_iters"], 500);
    assert_eq!(meta["inputs"]["known_entries"], 60);
}

#[test]
fn complete_exit_codes_separate_config_and_data_errors() {
    let w = Workdir::new();
    let original = gaussian_tensor(&[4, 4, 4], 7);
    let observed = w.tensor("obs.ffmt", &original);
    let mask = w.tensor(
        "mask.ffmt",
        &DenseTensor::from_fn(&[4, 4, 4], |_| 1.0).unwrap(),
    );
    let good = w.json("good.json", r#"{"solver": "ffmtc"}"#);

    // Missing mask file: data error.
    let out = ffmtr(&[
        "complete",
        "--observed",
        path_str(&observed),
        "--mask",
        path_str(&w.path("absent.ffmt")),
        "--config",
        path_str(&good),
        "--output",
        path_str(&w.path("x.ffmt")),
        "--report",
        path_str(&w.path("r.csv")),
    ]);
    assert_exit(&out, 3);

    // Malformed JSON: configuration error.
    let broken = w.json("broken.json", r#"{"solver": "ffmtc""#);
    let out = ffmtr(&[
        "complete",
        "--observed",
        path_str(&observed),
        "--mask",
        path_str(&mask),
        "--config",
        path_str(&broken),
        "--output",
        path_str(&w.path("x.ffmt")),
        "--report",
        path_str(&w.path("r.csv")),
    ]);
    assert_exit(&out, 2);

    // Config for the other solver: configuration error.
    let wrong = w.json("wrong.json", r#"{"solver": "ffmtrpca"}"#);
    let out = ffmtr(&[
        "complete",
        "--observed",
        path_str(&observed),
        "--mask",
        path_str(&mask),
        "--config",
        path_str(&wrong),
        "--output",
        path_str(&w.path("x.ffmt")),
        "--report",
        path_str(&w.path("r.csv")),
    ]);
    assert_exit(&out, 2);

    // Shape mismatch between observed and mask: data error.
    let small_mask = w.tensor(
        "small.ffmt",
        &DenseTensor::from_fn(&[3, 3, 3], |_| 1.0).unwrap(),
    );
    let out = ffmtr(&[
        "complete",
        "--observed",
        path_str(&observed),
        "--mask",
        path_str(&small_mask),
        "--config",
        path_str(&good),
        "--output",
        path_str(&w.path("x.ffmt")),
        "--report",
        path_str(&w.path("r.csv")),
    ]);
    assert_exit(&out, 3);
}

#[test]
fn rpca_of_zero_tensor_writes_zero_parts() {
    let w = Workdir::new();
    let input = w.tensor("t.ffmt", &DenseTensor::zeros(&[4, 4, 4]).unwrap());
    let config = w.json("cfg.json", r#"{"solver": "ffmtrpca"}"#);
    let out = ffmtr(&[
        "rpca",
        "--input",
        path_str(&input),
        "--config",
        path_str(&config),
        "--low",
        path_str(&w.path("low.ffmt")),
        "--sparse",
        path_str(&w.path("sparse.ffmt")),
        "--report",
        path_str(&w.path("report.csv")),
    ]);
    assert_exit(&out, 0);
    assert_eq!(read_tensor(w.path("low.ffmt")).unwrap().max_abs(), 0.0);
    assert_eq!(read_tensor(w.path("sparse.ffmt")).unwrap().max_abs(), 0.0);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(w.path("report.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["config"]["lambda_sparse"], 0.25, "1/sqrt(16)");
    assert_eq!(meta["result"]["fidelity_residual"], 0.0);
}

#[test]
fn rpca_rejects_unknown_config_keys() {
    let w = Workdir::new();
    let input = w.tensor("t.ffmt", &uniform_tensor(&[3, 3, 3], 8));
    let config = w.json("cfg.json", r#"{"solver": "ffmtrpca", "momentum": 0.9}"#);
    let out = ffmtr(&[
        "rpca",
        "--input",
        path_str(&input),
        "--config",
        path_str(&config),
        "--low",
        path_str(&w.path("low.ffmt")),
        "--sparse",
        path_str(&w.path("sparse.ffmt")),
        "--report",
        path_str(&w.path("report.csv")),
    ]);
    assert_exit(&out, 2);
}

#[test]
fn measure_reports_zero_total_rank_for_zero_tensor() {
    let w = Workdir::new();
    let input = w.tensor("t.ffmt", &DenseTensor::zeros(&[4, 5, 3]).unwrap());
    let out = ffmtr(&["measure", "--input", path_str(&input)]);
    assert_exit(&out, 0);
    let v = stdout_json(&out);
    assert_eq!(v["ffm_rank_total"], 0.0);
    assert_eq!(v["snn"], 0.0);
    assert_eq!(v["tnn"], 0.0);
}

#[test]
fn measure_reports_unit_ranks_for_rank1_tensor() {
    let w = Workdir::new();
    let input = w.tensor("t.ffmt", &rank1_tensor(&[6, 5, 4], 77, 3.0));
    let out = ffmtr(&["measure", "--input", path_str(&input)]);
    assert_exit(&out, 0);
    let v = stdout_json(&out);
    for section in ["matrix_pairs", "tensor_pairs"] {
        for (_, entry) in v[section].as_object().unwrap() {
            assert_eq!(entry["rank"], 1.0);
        }
    }
    assert_eq!(v["ffm_rank_total"], 1.0);
}

#[test]
fn measure_omits_tensor_diagnostics_for_matrices() {
    let w = Workdir::new();
    let input = w.tensor("t.ffmt", &uniform_tensor(&[6, 5], 9));
    let out = ffmtr(&["measure", "--input", path_str(&input)]);
    assert_exit(&out, 0);
    let v = stdout_json(&out);
    assert!(v.get("tensor_pairs").is_none());
    assert!(v.get("tnn").is_none());
    assert!(v.get("n_tubal_rank").is_none());
    assert_eq!(v["matrix_pairs"].as_object().unwrap().len(), 2);
}

#[test]
fn measure_accepts_explicit_beta_and_rejects_bad_beta() {
    let w = Workdir::new();
    let input = w.tensor("t.ffmt", &uniform_tensor(&[4, 4, 4], 10));
    let beta =
        r#"{"(1,1)": 0.5, "(1,2)": 0.1, "(1,3)": 0.1, "(2,2)": 0.1, "(2,3)": 0.1, "(3,3)": 0.1}"#;
    let out = ffmtr(&["measure", "--input", path_str(&input), "--beta", beta]);
    assert_exit(&out, 0);
    let v = stdout_json(&out);
    assert_eq!(v["beta"]["(1,1)"], 0.5);

    let out = ffmtr(&["measure", "--input", path_str(&input), "--beta", "sideways"]);
    assert_exit(&out, 2);

    // Weights not summing to one: rejected while resolving (config error).
    let bad =
        r#"{"(1,1)": 0.9, "(1,2)": 0.9, "(1,3)": 0.9, "(2,2)": 0.9, "(2,3)": 0.9, "(3,3)": 0.9}"#;
    let out = ffmtr(&["measure", "--input", path_str(&input), "--beta", bad]);
    assert_exit(&out, 2);
}

#[test]
fn metrics_of_identical_files_hit_the_ideal_values() {
    let w = Workdir::new();
    let t = uniform_tensor(&[12, 12, 3], 11);
    let a = w.tensor("a.ffmt", &t);
    let b = w.tensor("b.ffmt", &t);
    let out = ffmtr(&[
        "metrics",
        "--reference",
        path_str(&a),
        "--estimate",
        path_str(&b),
    ]);
    assert_exit(&out, 0);
    let v = stdout_json(&out);
    assert_eq!(v["psnr"], "inf");
    assert_eq!(v["ssim"], 1.0);
    assert_eq!(v["ergas"], 0.0);
}

#[test]
fn metrics_reproduce_the_fixed_peak_psnr_value() {
    let w = Workdir::new();
    let reference = uniform_tensor(&[16, 16, 4], 12);
    // Estimate off by exactly 1 everywhere: mean squared error 1.
    let estimate = DenseTensor::from_fn(reference.dims(), |idx| reference.get(idx) + 1.0).unwrap();
    let a = w.tensor("ref.ffmt", &reference);
    let b = w.tensor("est.ffmt", &estimate);
    let out = ffmtr(&[
        "metrics",
        "--reference",
        path_str(&a),
        "--estimate",
        path_str(&b),
        "--peak",
        "255",
    ]);
    assert_exit(&out, 0);
    let v = stdout_json(&out);
    let expected = 20.0 * 255f64.log10();
    assert!((v["psnr"].as_f64().unwrap() - expected).abs() < 1e-9);
    assert_eq!(v["config"]["peak"], 255.0);
}

#[test]
fn metrics_flags_override_config_file() {
    let w = Workdir::new();
    let t = uniform_tensor(&[16, 16, 2], 13);
    let a = w.tensor("a.ffmt", &t);
    let config = w.json(
        "cfg.json",
        r#"{"solver": "ffmtc", "metrics": {"peak": 1.0, "band_mode": "global"}}"#,
    );
    let out = ffmtr(&[
        "metrics",
        "--reference",
        path_str(&a),
        "--estimate",
        path_str(&a),
        "--config",
        path_str(&config),
        "--peak",
        "255",
    ]);
    assert_exit(&out, 0);
    let v = stdout_json(&out);
    assert_eq!(v["config"]["peak"], 255.0, "flag wins over file");
    assert_eq!(v["config"]["band_mode"], "global", "file value kept");
}

#[test]
fn metrics_rejects_mismatched_shapes_as_data_error() {
    let w = Workdir::new();
    let a = w.tensor("a.ffmt", &uniform_tensor(&[6, 6, 2], 14));
    let b = w.tensor("b.ffmt", &uniform_tensor(&[6, 6, 3], 14));
    let out = ffmtr(&[
        "metrics",
        "--reference",
        path_str(&a),
        "--estimate",
        path_str(&b),
    ]);
    assert_exit(&out, 3);
}

#[test]
fn truncated_tensor_file_is_a_data_error() {
    let w = Workdir::new();
    let input = w.tensor("t.ffmt", &uniform_tensor(&[4, 4, 4], 15));
    let mut bytes = std::fs::read(&input).unwrap();
    bytes.truncate(bytes.len() - 9);
    std::fs::write(w.path("cut.ffmt"), bytes).unwrap();
    let out = ffmtr(&["measure", "--input", path_str(&w.path("cut.ffmt"))]);
    assert_exit(&out, 3);
}
