use std::path::Path;
use std::process::{Command, Output};

use neurokin_core::features::catalogue;
use neurokin_core::pose::TestKind;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

fn neurokin(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neurokin")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = neurokin(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let body = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, body)
}

fn write_rows(path: &Path, header: &[String], body: &[Vec<String>]) {
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(header).unwrap();
    for r in body {
        w.write_record(r).unwrap();
    }
    w.flush().unwrap();
}

/// Extracted feature table of a seeded cohort.
fn cohort_table(dir: &TempDir, code: &str, subjects: usize, extra: &[&str]) -> std::path::PathBuf {
    let recs = dir.path().join("recs");
    let feats = dir.path().join("feats");
    let mut args = vec!["synth", "--test", code, "--cohort", "--subjects"];
    let n = subjects.to_string();
    args.push(&n);
    args.extend_from_slice(extra);
    ok(&recs, &args);
    ok(&feats, &["extract", recs.to_str().unwrap()]);
    feats.join(format!("features_{code}.csv"))
}

#[test]
fn extract_single_recording() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["synth", "--test", "FT"]);
    let rec = dir.path().join("synthetic_FT.json");
    ok(dir.path(), &["extract", rec.to_str().unwrap()]);
    let (header, body) = rows(&dir.path().join("features_FT.csv"));
    assert_eq!(body.len(), 1);
    assert_eq!(body[0][0], "synthetic_FT");
    assert_eq!(header[..4], ["recording_id", "subject_id", "device", "label"]);
    let mut want = catalogue(TestKind::FingerTap);
    want.sort();
    let mut got = header[4..].to_vec();
    got.sort();
    assert_eq!(got, want);
    assert_eq!(json(&dir.path().join("extract_errors.json")), Value::Array(vec![]));
}

#[test]
fn extract_mixed_inputs_reports_failures() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["synth", "--test", "FR", "--format", "csv"]);
    let good = dir.path().join("synthetic_FR.csv");
    let bad = dir.path().join("broken.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = dir.path().join("out");
    ok(&out, &["extract", good.to_str().unwrap(), bad.to_str().unwrap(), "--format", "json"]);
    assert_eq!(rows(&out.join("features_FR.csv")).1.len(), 1);
    assert!(out.join("features").join("synthetic_FR.json").is_file());
    let errors = json(&out.join("extract_errors.json"));
    let errors = errors.as_array().unwrap();
    assert_eq!(errors.len(), 1);
    assert!(errors[0]["input"].as_str().unwrap().ends_with("broken.json"));
    assert!(!errors[0]["error"].as_str().unwrap().is_empty());
}

#[test]
fn extract_all_failing_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("broken.json");
    std::fs::write(&bad, "[]").unwrap();
    let o = neurokin(dir.path(), &["extract", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&dir.path().join("extract_errors.json")).as_array().unwrap().len(), 1);
}

#[test]
fn cohort_table_has_one_row_per_recording() {
    let dir = TempDir::new().unwrap();
    let table = cohort_table(&dir, "FT", 20, &["--seed", "3"]);
    let (header, body) = rows(&table);
    assert_eq!(body.len(), 80);
    let again = TempDir::new().unwrap();
    assert_eq!(rows(&cohort_table(&again, "FT", 20, &["--seed", "3"])).0, header);
}

#[test]
fn classify_missing_label_column_exits_2() {
    let dir = TempDir::new().unwrap();
    let table = dir.path().join("t.csv");
    std::fs::write(&table, "recording_id,subject_id,device,f\nr1,s1,P,1.0\n").unwrap();
    let o = neurokin(dir.path(), &["classify", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("label"));
}

#[test]
fn classify_perfect_separation() {
    let dir = TempDir::new().unwrap();
    let header: Vec<String> = ["recording_id", "subject_id", "device", "label", "f", "g"].map(String::from).to_vec();
    let body: Vec<Vec<String>> = (0..40)
        .map(|i| {
            let abnormal = i % 2 == 1;
            let f = if abnormal { 5.0 } else { 0.0 } + (i as f64) * 0.01;
            vec![
                format!("r{i}"),
                format!("s{}", i / 4),
                if i % 4 < 2 { "P" } else { "T" }.into(),
                if abnormal { "abnormal" } else { "normal" }.into(),
                f.to_string(),
                ((i * 7) % 11).to_string(),
            ]
        })
        .collect();
    let table = dir.path().join("t.csv");
    write_rows(&table, &header, &body);
    for model in ["logreg", "rf"] {
        for split in ["video", "subject"] {
            let out = dir.path().join(format!("{model}{split}"));
            ok(&out, &["classify", table.to_str().unwrap(), "--model", model, "--split", split]);
            let report = json(&out.join("eval_report.json"));
            assert_eq!(report["accuracy"], 1.0, "{model} {split}");
            assert_eq!(report["folds"].as_array().unwrap().len(), 5);
        }
    }
}

#[test]
fn classify_shuffled_labels_near_chance() {
    let dir = TempDir::new().unwrap();
    let (header, body) = rows(&cohort_table(&dir, "FT", 20, &["--seed", "8"]));
    let mut accs = Vec::new();
    for seed in 0..5 {
        let mut labels: Vec<String> = body.iter().map(|r| r[3].clone()).collect();
        labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled: Vec<Vec<String>> =
            body.iter().zip(&labels).map(|(r, l)| [&r[..3], std::slice::from_ref(l), &r[4..]].concat()).collect();
        let table = dir.path().join(format!("shuffled{seed}.csv"));
        write_rows(&table, &header, &shuffled);
        let out = dir.path().join(format!("cls{seed}"));
        ok(&out, &["classify", table.to_str().unwrap(), "--model", "logreg", "--seed", &seed.to_string()]);
        accs.push(json(&out.join("eval_report.json"))["accuracy"].as_f64().unwrap());
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    assert!((mean - 0.5).abs() <= 0.1, "{accs:?}");
}

#[test]
fn classify_writes_model_and_importances() {
    let dir = TempDir::new().unwrap();
    let table = cohort_table(&dir, "FTF", 6, &["--seed", "2"]);
    let out = dir.path().join("rf");
    ok(&out, &["classify", table.to_str().unwrap(), "--model", "rf"]);
    let ranked = json(&out.join("feature_importance.json"));
    let weights: Vec<f64> = ranked.as_array().unwrap().iter().map(|r| r["weight"].as_f64().unwrap()).collect();
    assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(weights.windows(2).all(|w| w[0] >= w[1]));
    let model = json(&out.join("model.json"));
    assert!(model["scaler"].is_object() && model["model"].is_object());
}

/// Mean silhouette of labelled points under Euclidean distance.
fn silhouette_oracle(points: &[Vec<f64>], labels: &[String]) -> f64 {
    let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mean_to = |same: bool| {
            let ds: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i && (labels[*j] == labels[i]) == same)
                .map(|(_, q)| d(p, q))
                .collect();
            ds.iter().sum::<f64>() / ds.len() as f64
        };
        let (a, b) = (mean_to(true), mean_to(false));
        total += (b - a) / a.max(b);
    }
    total / points.len() as f64
}

#[test]
fn pca_projection_and_plot() {
    let dir = TempDir::new().unwrap();
    let table = cohort_table(&dir, "FT", 20, &["--seed", "4"]);
    let out = dir.path().join("pca");
    ok(&out, &["pca", table.to_str().unwrap(), "--k", "2"]);
    let (header, body) = rows(&out.join("pca_projections.csv"));
    assert_eq!(header, ["recording_id", "subject_id", "device", "label", "pc1", "pc2"]);
    assert_eq!(body.len(), 80);
    let points: Vec<Vec<f64>> = body.iter().map(|r| r[4..].iter().map(|v| v.parse().unwrap()).collect()).collect();
    let labels: Vec<String> = body.iter().map(|r| r[3].clone()).collect();
    let oracle = silhouette_oracle(&points, &labels);
    assert!(oracle > 0.3, "silhouette {oracle}");
    let summary = json(&out.join("pca_summary.json"));
    assert!((summary["silhouette"].as_f64().unwrap() - oracle).abs() < 1e-9);

    let svg = std::fs::read_to_string(out.join("pca.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let dots = doc.descendants().filter(|n| n.has_tag_name("circle")).count();
    assert_eq!(dots, 80 + 2);
}

#[test]
fn pca_rejects_zero_components() {
    let dir = TempDir::new().unwrap();
    let table = dir.path().join("t.csv");
    std::fs::write(&table, "recording_id,subject_id,device,label,f\nr1,s1,P,normal,1\n").unwrap();
    assert_eq!(neurokin(dir.path(), &["pca", table.to_str().unwrap(), "--k", "0"]).status.code(), Some(1));
}

/// Four-role table for one subject per entry of `values` ([N_P, N_T, A_P, A_T]).
fn role_table(path: &Path, values: &[[f64; 4]]) {
    let header: Vec<String> = ["recording_id", "subject_id", "device", "label", "f"].map(String::from).to_vec();
    let mut body = Vec::new();
    for (s, v) in values.iter().enumerate() {
        for (r, (device, label)) in [("P", "normal"), ("T", "normal"), ("P", "abnormal"), ("T", "abnormal")].iter().enumerate() {
            body.push(vec![format!("s{s}r{r}"), format!("s{s}"), device.to_string(), label.to_string(), v[r].to_string()]);
        }
    }
    write_rows(path, &header, &body);
}

fn distances(report: &Value, key: &str) -> Vec<f64> {
    report["features"][0][key].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect()
}

#[test]
fn distance_trivial_cases() {
    let dir = TempDir::new().unwrap();
    let table = dir.path().join("same.csv");
    role_table(&table, &[[2.0; 4]]);
    ok(dir.path(), &["distance", table.to_str().unwrap()]);
    let report = json(&dir.path().join("distance_report.json"));
    for key in ["aa", "nn", "na"] {
        assert_eq!(distances(&report, key), [0.0]);
    }

    let table = dir.path().join("hand.csv");
    role_table(&table, &[[0.0, 0.0, 1.0, 1.0]]);
    ok(dir.path(), &["distance", table.to_str().unwrap()]);
    let report = json(&dir.path().join("distance_report.json"));
    assert_eq!(distances(&report, "aa"), [0.0]);
    assert_eq!(distances(&report, "nn"), [0.0]);
    assert_eq!(distances(&report, "na"), [1.0]);
    let svg = std::fs::read_to_string(dir.path().join("distance.svg")).unwrap();
    roxmltree::Document::parse(&svg).unwrap();
}

#[test]
fn distance_without_device_noise_has_no_within_class_spread() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "cohort.device_noise = 0.0\n").unwrap();
    let table = cohort_table(&dir, "FR", 4, &["--config", config.to_str().unwrap()]);
    ok(dir.path(), &["distance", table.to_str().unwrap()]);
    let report = json(&dir.path().join("distance_report.json"));
    for f in report["features"].as_array().unwrap() {
        for key in ["aa", "nn"] {
            assert!(f[key].as_array().unwrap().iter().all(|v| v.as_f64() == Some(0.0)), "{}", f["feature"]);
        }
    }
}

#[test]
fn synth_cohort_names_and_roles() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["synth", "--test", "SAW", "--cohort", "--subjects", "2"]);
    let mut names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert_eq!(names.len(), 8);
    assert!(names.iter().all(|n| n.ends_with(".json")));
}

#[test]
fn usage_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    assert_eq!(neurokin(dir.path(), &["bogus"]).status.code(), Some(1));
    assert_eq!(neurokin(dir.path(), &["synth", "--subjects", "3"]).status.code(), Some(1));
    assert_eq!(neurokin(dir.path(), &["synth", "--test", "XX"]).status.code(), Some(1));
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "analysis.forest.trees = 3\n").unwrap();
    assert_eq!(neurokin(dir.path(), &["synth", "--config", config.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(neurokin(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "seed = 1\nsynth.noise = 0.01\n").unwrap();
    let cfg = config.to_str().unwrap();
    let read = |sub: &str| std::fs::read(dir.path().join(sub).join("synthetic_FT.json")).unwrap();
    ok(&dir.path().join("a"), &["synth", "--config", cfg]);
    ok(&dir.path().join("b"), &["synth", "--config", cfg, "--seed", "1"]);
    ok(&dir.path().join("c"), &["synth", "--config", cfg, "--seed", "2"]);
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}
