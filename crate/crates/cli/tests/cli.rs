use std::path::Path;
use std::process::{Command, Output};

use snoopy_core::datamodel::{curves_to_csv_string, write_label_file, CurveSeries};
use snoopy_core::synth::{write_blob_study, BlobStudy};
use snoopy_core::{read_label_file, CurvePoint, LabelVector};

fn snoopy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snoopy"))
        .args(args)
        .env("SNOOPY_THREADS", "2")
        .output()
        .expect("spawn snoopy")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn power_law_csv(dir: &Path, alpha: f64, intercept: f64, ns: &[usize]) -> std::path::PathBuf {
    let points = ns
        .iter()
        .map(|&n| {
            let e = (intercept - alpha * (n as f64).ln()).exp();
            CurvePoint {
                n_consumed: n,
                err_1nn: e.min(1.0),
                ber_estimate: e,
            }
        })
        .collect();
    let path = dir.join("curves.csv");
    std::fs::write(
        &path,
        curves_to_csv_string(&[CurveSeries {
            arm: "raw".into(),
            points,
        }]),
    )
    .unwrap();
    path
}

#[test]
fn run_exit_code_follows_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let clean = write_blob_study(&dir.path().join("clean"), &BlobStudy::default()).unwrap();
    let noisy = write_blob_study(
        &dir.path().join("noisy"),
        &BlobStudy {
            rho: 0.4,
            ..BlobStudy::default()
        },
    )
    .unwrap();

    let out = snoopy(&["run", s(&clean.manifest)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().next(), Some("REALISTIC"));

    let out = snoopy(&["run", s(&noisy.manifest)]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().next(), Some("UNREALISTIC"));

    // Overriding the target flips the clean study too.
    let out = snoopy(&["run", s(&clean.manifest), "--target", "0.999"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_blob_study(
        dir.path(),
        &BlobStudy {
            distractor: true,
            ..BlobStudy::default()
        },
    )
    .unwrap();
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    let a = snoopy(&["run", s(&files.manifest), "--json", "--curves-out", s(&csv_a)]);
    let b = snoopy(&[
        "--threads",
        "1",
        "run",
        s(&files.manifest),
        "--json",
        "--curves-out",
        s(&csv_b),
    ]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(std::fs::read(&csv_a).unwrap(), std::fs::read(&csv_b).unwrap());

    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["verdict"], "REALISTIC");
    assert_eq!(doc["winner"], "raw");
    assert_eq!(doc["arms"].as_array().unwrap().len(), 2);
    assert!(doc["cost"].get("machine_seconds").is_none());

    let csv = std::fs::read_to_string(&csv_a).unwrap();
    assert_eq!(csv.lines().next(), Some("arm,n_consumed,err_1nn,ber_estimate"));
    let series = snoopy_core::datamodel::parse_curves_csv(&csv).unwrap();
    assert_eq!(series.len(), 2);

    let timed = snoopy(&["run", s(&files.manifest), "--json", "--timing"]);
    let doc: serde_json::Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(doc["cost"]["machine_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn data_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_blob_study(dir.path(), &BlobStudy::default()).unwrap();
    let missing = dir.path().join("raw_test.snpe");
    std::fs::remove_file(&missing).unwrap();
    let out = snoopy(&["run", s(&files.manifest)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains(s(&missing)), "{}", stderr(&out));

    let out = snoopy(&["validate", s(&files.manifest)]);
    assert_eq!(out.status.code(), Some(2));

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{not json").unwrap();
    let out = snoopy(&["run", s(&garbage)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains(s(&garbage)), "{}", stderr(&out));
}

#[test]
fn validate_reports_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_blob_study(dir.path(), &BlobStudy::default()).unwrap();
    let out = snoopy(&["validate", s(&files.manifest)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        stdout(&out).trim(),
        "ok: 1 transformation(s), 2000 train, 500 test, 2 classes"
    );
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(snoopy(&[]).status.code(), Some(1));
    assert_eq!(snoopy(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(snoopy(&["--help"]).status.code(), Some(0));
    assert_eq!(
        snoopy(&["run", "m.json", "--strategy", "GREEDY"]).status.code(),
        Some(1)
    );

    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("y.snpl");
    write_label_file(&labels, &LabelVector::new(vec![0, 1, 1], 2).unwrap()).unwrap();
    let out_path = dir.path().join("out.snpl");
    let t = dir.path().join("t.json");
    std::fs::write(&t, r#"{"C": 2, "t": [[1, 0], [0, 1]]}"#).unwrap();
    let both = snoopy(&[
        "noise",
        s(&labels),
        "--rho",
        "0.1",
        "--transition",
        s(&t),
        "--out",
        s(&out_path),
    ]);
    assert_eq!(both.status.code(), Some(1));
    let neither = snoopy(&["noise", s(&labels), "--out", s(&out_path)]);
    assert_eq!(neither.status.code(), Some(1));
    assert!(!out_path.exists());
    let bad_rho = snoopy(&["noise", s(&labels), "--rho", "1.5", "--out", s(&out_path)]);
    assert_eq!(bad_rho.status.code(), Some(1));
}

#[test]
fn noise_at_zero_is_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_blob_study(dir.path(), &BlobStudy::default()).unwrap();
    let out_path = dir.path().join("copy.snpl");
    let out = snoopy(&[
        "noise",
        s(&files.clean_train_labels),
        "--rho",
        "0",
        "--seed",
        "9",
        "--out",
        s(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "realized flip fraction 0.000000");
    assert_eq!(
        std::fs::read(&out_path).unwrap(),
        std::fs::read(&files.clean_train_labels).unwrap()
    );
}

#[test]
fn full_uniform_noise_flips_nine_in_ten() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("y.snpl");
    let clean = LabelVector::new((0..100_000u32).map(|i| i % 10).collect(), 10).unwrap();
    write_label_file(&labels, &clean).unwrap();
    let out_path = dir.path().join("noisy.snpl");
    let out = snoopy(&["noise", s(&labels), "--rho", "1", "--seed", "4", "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let noisy = read_label_file(&out_path).unwrap();
    let flips = clean
        .labels()
        .iter()
        .zip(noisy.labels())
        .filter(|(a, b)| a != b)
        .count();
    let fraction = flips as f64 / 100_000.0;
    assert!((fraction - 0.9).abs() < 0.01, "{fraction}");
    assert_eq!(stdout(&out).trim(), format!("realized flip fraction {fraction:.6}"));
}

#[test]
fn noise_from_a_transition_file() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("y.snpl");
    write_label_file(&labels, &LabelVector::new(vec![0; 1000], 2).unwrap()).unwrap();
    let t = dir.path().join("t.json");
    // Class 0 always becomes class 1.
    std::fs::write(&t, r#"{"C": 2, "t": [[0, 0], [1, 1]]}"#).unwrap();
    let out_path = dir.path().join("noisy.snpl");
    let out = snoopy(&["noise", s(&labels), "--transition", s(&t), "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(read_label_file(&out_path).unwrap().labels().iter().all(|&y| y == 1));

    std::fs::write(&t, r#"{"C": 2, "t": [[0.5, 0], [0.6, 1]]}"#).unwrap();
    let out = snoopy(&["noise", s(&labels), "--transition", s(&t), "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn extrapolation_chain_needs_61() {
    let dir = tempfile::tempdir().unwrap();
    let csv = power_law_csv(dir.path(), 0.5, 0.0, &[10, 20, 30, 40, 50]);
    let args = [
        "extrapolate",
        s(&csv),
        "--target",
        "0.95",
        "--classes",
        "2",
        "--n-current",
        "50",
    ];
    let out = snoopy(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("alpha 0.500000"), "{text}");
    assert!(text.contains("C_fit 0.000000"), "{text}");
    assert!(text.contains("needed 61 more samples"), "{text}");

    let mut json_args = args.to_vec();
    json_args.push("--json");
    let doc: serde_json::Value = serde_json::from_slice(&snoopy(&json_args).stdout).unwrap();
    assert_eq!(doc["status"], "NEEDED");
    assert_eq!(doc["needed"], 61);
}

#[test]
fn extrapolation_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let csv = power_law_csv(dir.path(), 0.5, 0.0, &[10, 20, 30, 40, 50]);

    let met = snoopy(&[
        "extrapolate",
        s(&csv),
        "--target",
        "0.5",
        "--classes",
        "2",
        "--n-current",
        "50",
    ]);
    assert!(stdout(&met).contains("target already met"), "{}", stdout(&met));

    let far = snoopy(&[
        "extrapolate",
        s(&csv),
        "--target",
        "0.999",
        "--classes",
        "2",
        "--n-current",
        "50",
    ]);
    assert_eq!(far.status.code(), Some(0));
    assert!(stdout(&far).contains("UNTRUSTWORTHY"), "{}", stdout(&far));

    let flat = power_law_csv(dir.path(), 0.0, (0.2f64).ln(), &[10]);
    let out = snoopy(&["extrapolate", s(&flat), "--target", "0.95", "--classes", "2"]);
    assert_eq!(out.status.code(), Some(2), "{}", stdout(&out));

    let out = snoopy(&[
        "extrapolate",
        s(&csv),
        "--target",
        "0.95",
        "--classes",
        "2",
        "--arm",
        "nope",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
