use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clfeval_core::{hand_till_auc, RandomStream, ScoredSample};

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn clfeval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clfeval"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout_of(args: &[&str]) -> String {
    let out = clfeval(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv_field<'a>(csv: &'a str, key: &str, col: usize) -> &'a str {
    csv.lines()
        .find(|l| l.split(',').nth(1) == Some(key) || l.split(',').next() == Some(key))
        .unwrap_or_else(|| panic!("{key} missing from\n{csv}"))
        .split(',')
        .nth(col)
        .unwrap()
}

#[test]
fn report_table_shows_rounded_scores() {
    let table = stdout_of(&["report", &fixture("matrix_a.json")]);
    let covid = table
        .lines()
        .find(|l| l.starts_with("Covid-19 Precision"))
        .unwrap();
    assert!(covid.trim_end().ends_with("0.762"), "{covid}");

    let table = stdout_of(&["report", &fixture("matrix_b.json")]);
    let acc = table
        .lines()
        .find(|l| l.starts_with("Mean Accuracy"))
        .unwrap();
    assert!(acc.trim_end().ends_with("0.74"), "{acc}");
}

#[test]
fn report_csv_from_csv_input_matches_json_input() {
    let a = stdout_of(&["--format", "csv", "report", &fixture("matrix_a.json")]);
    let b = stdout_of(&["--format", "csv", "report", &fixture("matrix_a.csv")]);
    assert_eq!(a, b);
}

#[test]
fn identity_matrix_scores_one() {
    let csv = stdout_of(&["--format", "csv", "report", &fixture("identity.json")]);
    for line in csv.lines().skip(1) {
        assert_eq!(line.rsplit(',').next(), Some("1"), "{line}");
    }
}

#[test]
fn bayes_pneumonia_precision_mean() {
    let csv = stdout_of(&[
        "--format",
        "csv",
        "bayes",
        &fixture("matrix_b.json"),
        "--metrics",
        "precision_1",
        "--samples",
        "50000",
    ]);
    let mean: f64 = csv_field(&csv, "precision_1", 3).parse().unwrap();
    assert!((mean - 0.926).abs() <= 0.005, "{mean}");
    assert_eq!(csv_field(&csv, "precision_1", 2), "1");
}

#[test]
fn bayes_writes_histograms_and_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    stdout_of(&[
        "--out",
        out,
        "bayes",
        &fixture("matrix_a.json"),
        "--metrics",
        "accuracy,mif1",
        "--samples",
        "5000",
        "--histograms",
        "--raw-samples",
    ]);
    let hist = std::fs::read_to_string(dir.path().join("hist_accuracy.csv")).unwrap();
    assert_eq!(hist.lines().next(), Some("bin_low,bin_high,count,density"));
    assert_eq!(hist.lines().count(), 101);
    let total: u64 = hist
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 5000);
    let samples = std::fs::read_to_string(dir.path().join("samples_accuracy.csv")).unwrap();
    assert_eq!(samples.lines().count(), 5001);
    assert!(dir.path().join("bayes.csv").exists());
}

#[test]
fn histograms_need_output_directory() {
    let out = clfeval(&["bayes", &fixture("matrix_a.json"), "--histograms"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn auc_fixtures() {
    let csv = stdout_of(&["--format", "csv", "auc", &fixture("separable_scores.csv")]);
    assert_eq!(csv.lines().last(), Some("macro,,,,1"));
    let csv = stdout_of(&["--format", "csv", "auc", &fixture("constant_scores.csv")]);
    assert_eq!(csv.lines().last(), Some("macro,,,,0.5"));
}

#[test]
fn auc_random_file_matches_library() {
    let mut s = RandomStream::new(99, 0);
    let mut text = String::from("true_label,score_0,score_1,score_2\n");
    let mut samples = Vec::new();
    for i in 0..30 {
        let scores: Vec<f64> = (0..3)
            .map(|_| (s.uniform() * 20.0).round() / 20.0)
            .collect();
        let label = i % 3;
        text.push_str(&format!(
            "{label},{},{},{}\n",
            scores[0], scores[1], scores[2]
        ));
        samples.push(ScoredSample::new(label, scores).unwrap());
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scores.csv");
    std::fs::write(&path, text).unwrap();
    let csv = stdout_of(&["--format", "csv", "auc", path.to_str().unwrap()]);
    let got: f64 = csv
        .lines()
        .last()
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    let expected = hand_till_auc(&samples).unwrap().auc;
    assert!((got - expected).abs() < 1e-12);
}

#[test]
fn iou_fixtures() {
    let table = stdout_of(&["iou", &fixture("masks/example.json")]);
    assert!(table.contains("0.667"), "{table}");
    let csv = stdout_of(&["--format", "csv", "iou", &fixture("masks/two_pairs.json")]);
    assert_eq!(csv, "pair,iou\nidentical,1\ndisjoint,0\nmean,0.5\n");
}

#[test]
fn brixia_manifests() {
    let csv = stdout_of(&["--format", "csv", "brixia", &fixture("brixia/progression.json")]);
    assert_eq!(csv.lines().last(), Some("score_probability_spearman,1"));

    let csv = stdout_of(&[
        "--format",
        "csv",
        "brixia",
        &fixture("brixia/proportional.json"),
    ]);
    for id in ["p2", "p3"] {
        let row = csv.lines().find(|l| l.starts_with(id)).unwrap();
        assert_eq!(row.split(',').nth(15), Some("1"), "{row}");
    }

    let out = clfeval(&[
        "--format",
        "csv",
        "brixia",
        &fixture("brixia/negative.json"),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("no-positive-relevance") || stdout.contains("n/a"),
        "{stdout}"
    );
}

#[test]
fn malformed_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &str); 4] = [
        (
            "missing.json",
            r#"{"labels": ["a", "b"], "counts": [[1, 0], [0, 1]]}"#,
        ),
        (
            "ragged.json",
            r#"{"labels": ["a", "b"], "orientation": "true-rows", "counts": [[1, 0], [0]]}"#,
        ),
        ("negative.csv", "true,a,b\na,1,-2\nb,0,1\n"),
        (
            "empty.json",
            r#"{"labels": ["a", "b"], "orientation": "true-rows", "counts": [[0, 0], [0, 0]]}"#,
        ),
    ];
    for (name, text) in cases {
        let path: PathBuf = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let out = clfeval(&["report", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(
        clfeval(&["report", "/nonexistent/table.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        clfeval(&["bayes", &fixture("matrix_a.json"), "--mass", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        clfeval(&["bayes", &fixture("matrix_a.json"), "--samples", "10"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn convert_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let json = dir.path().join("t.json");
    stdout_of(&["convert", &fixture("matrix_b.json"), csv.to_str().unwrap()]);
    stdout_of(&["convert", csv.to_str().unwrap(), json.to_str().unwrap()]);
    let a = stdout_of(&["--format", "csv", "report", &fixture("matrix_b.json")]);
    let b = stdout_of(&["--format", "csv", "report", json.to_str().unwrap()]);
    assert_eq!(a, b);
}
