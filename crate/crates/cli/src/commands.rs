use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use neurokin_core::analysis::{
    distance_study, evaluate, feature_importance, silhouette, standardize, FeatureMatrix, ModelSpec, Pca, RandomForest,
    RowMeta, Scaler, SplitKind, SplitScheme,
};
use neurokin_core::features::{extract_features, FeatureConfig, FeatureVector};
use neurokin_core::pose::{load_recording_path, save_recording_path, TestKind};
use neurokin_core::synth::{gen_cohort, generate};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::{svg, CliError, ModelArg, OutFormat, SplitArg};

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)?;
    Ok(())
}

fn read_matrix(path: &Path) -> Result<FeatureMatrix, CliError> {
    let file = File::open(path).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))?;
    Ok(FeatureMatrix::read_csv(std::io::BufReader::new(file))?)
}

fn is_recording(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    !name.ends_with(".meta.json")
        && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json") || e.eq_ignore_ascii_case("csv"))
}

/// Files as given; directories contribute their recordings in name order.
fn expand(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && is_recording(p))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

fn recording_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

fn process(path: &Path, cfg: &FeatureConfig) -> neurokin_core::Result<(RowMeta, FeatureVector)> {
    let rec = load_recording_path(path)?;
    let id = recording_id(path);
    let fv = extract_features(&rec, &id, cfg)?;
    let meta = RowMeta {
        recording_id: id,
        subject_id: rec.subject_id().to_owned(),
        device: rec.device().to_owned(),
        label: rec.label(),
    };
    Ok((meta, fv))
}

#[derive(Serialize)]
struct ExtractFailure {
    input: String,
    error: String,
}

pub fn extract(cfg: &RunConfig, inputs: &[PathBuf], out: &Path, format: Option<OutFormat>) -> Result<(), CliError> {
    let files = expand(inputs)?;
    if files.is_empty() {
        return Err(CliError::failed("no recordings found in the inputs"));
    }
    let results: Vec<_> = files.par_iter().map(|p| process(p, &cfg.features)).collect();
    let mut tables: BTreeMap<usize, Vec<(RowMeta, FeatureVector)>> = BTreeMap::new();
    let mut failures = Vec::new();
    for (path, result) in files.iter().zip(results) {
        match result {
            Ok(row) => {
                let slot = TestKind::ALL.iter().position(|k| *k == row.1.test_kind).expect("known kind");
                tables.entry(slot).or_default().push(row);
            }
            Err(e) => {
                log::warn!("{}: {e}", path.display());
                failures.push(ExtractFailure { input: path.display().to_string(), error: e.to_string() });
            }
        }
    }
    write_json(&out.join("extract_errors.json"), &failures)?;
    let done: usize = tables.values().map(Vec::len).sum();
    for (slot, rows) in &tables {
        let kind = TestKind::ALL[*slot];
        let m = FeatureMatrix::from_vectors(rows)?;
        let mut w = BufWriter::new(File::create(out.join(format!("features_{}.csv", kind.code())))?);
        m.write_csv(&mut w)?;
        w.flush()?;
        if format == Some(OutFormat::Json) {
            let dir = out.join("features");
            std::fs::create_dir_all(&dir)?;
            for (meta, fv) in rows {
                write_json(&dir.join(format!("{}.json", meta.recording_id)), fv)?;
            }
        }
    }
    eprintln!("extracted {done} of {} recordings", files.len());
    if done == 0 {
        return Err(CliError::failed(format!("all {} recordings failed; see extract_errors.json", files.len())));
    }
    Ok(())
}

#[derive(Serialize)]
struct Importance {
    feature: String,
    weight: f64,
}

#[derive(Serialize)]
struct SavedModel<'a, M: Serialize> {
    scaler: &'a Scaler,
    model: &'a M,
}

pub fn classify(cfg: &RunConfig, features: &Path, model: ModelArg, split: SplitArg, out: &Path) -> Result<(), CliError> {
    let m = read_matrix(features)?;
    let spec = match model {
        ModelArg::Logreg => ModelSpec::LogReg(cfg.analysis.logreg.clone()),
        ModelArg::Rf => ModelSpec::RandomForest(cfg.forest()),
    };
    let kind = match split {
        SplitArg::Video => SplitKind::VideoBased,
        SplitArg::Subject => SplitKind::SubjectBased,
    };
    let scheme = SplitScheme { kind, folds: cfg.analysis.folds, seed: cfg.seed };
    let report = evaluate(&m, &spec, &scheme)?;
    write_json(&out.join("eval_report.json"), &report)?;

    let (x, scaler) = standardize(&m)?;
    let y = m.targets()?;
    match &spec {
        ModelSpec::LogReg(c) => {
            let fitted = neurokin_core::analysis::LogisticRegression::fit(&x, &y, c)?;
            write_json(&out.join("model.json"), &SavedModel { scaler: &scaler, model: &fitted })?;
        }
        ModelSpec::RandomForest(c) => {
            let fitted = RandomForest::fit(&x, &y, c)?;
            let ranked: Vec<Importance> = feature_importance(&fitted, &scaler.names)?
                .into_iter()
                .map(|(feature, weight)| Importance { feature, weight })
                .collect();
            write_json(&out.join("feature_importance.json"), &ranked)?;
            write_json(&out.join("model.json"), &SavedModel { scaler: &scaler, model: &fitted })?;
        }
    }
    eprintln!("accuracy {:.3}, auc {:.3} over {} folds", report.accuracy, report.auc, report.folds.len());
    Ok(())
}

#[derive(Serialize)]
struct PcaSummary<'a> {
    k: usize,
    features: &'a [String],
    explained_ratio: &'a [f64],
    variances: &'a [f64],
    components: &'a [Vec<f64>],
    /// Label separation in the projected space, when both labels are present.
    silhouette: Option<f64>,
}

pub fn pca(features: &Path, k: usize, out: &Path) -> Result<(), CliError> {
    if k == 0 {
        return Err(CliError::usage("k must be at least 1"));
    }
    let m = read_matrix(features)?;
    let (x, scaler) = standardize(&m)?;
    if k > scaler.names.len() {
        return Err(CliError::failed(format!("k = {k} exceeds the {} usable features", scaler.names.len())));
    }
    let p = Pca::fit(&x, k)?;
    let proj = p.transform(&x);

    let mut w = csv::Writer::from_path(out.join("pca_projections.csv")).map_err(|e| CliError::failed(e.to_string()))?;
    let header = ["recording_id", "subject_id", "device", "label"].map(String::from);
    let write = |w: &mut csv::Writer<File>, rec: Vec<String>| w.write_record(&rec).map_err(|e| CliError::failed(e.to_string()));
    write(&mut w, header.into_iter().chain((1..=k).map(|c| format!("pc{c}"))).collect())?;
    for (meta, z) in m.meta().iter().zip(&proj) {
        let mut rec = vec![meta.recording_id.clone(), meta.subject_id.clone(), meta.device.clone(), meta.label.as_str().into()];
        rec.extend(z.iter().map(|v| v.to_string()));
        write(&mut w, rec)?;
    }
    w.flush()?;

    let silhouette = m.targets().ok().and_then(|y| silhouette(&proj, &y).ok());
    write_json(
        &out.join("pca_summary.json"),
        &PcaSummary {
            k,
            features: &scaler.names,
            explained_ratio: &p.explained_ratio,
            variances: &p.variances,
            components: &p.components,
            silhouette,
        },
    )?;

    let mut groups: BTreeMap<&str, Vec<[f64; 2]>> = BTreeMap::new();
    for (meta, z) in m.meta().iter().zip(&proj) {
        groups.entry(meta.label.as_str()).or_default().push([z[0], z.get(1).copied().unwrap_or(0.0)]);
    }
    let groups: Vec<(String, Vec<[f64; 2]>)> = groups.into_iter().map(|(k, v)| (k.to_owned(), v)).collect();
    let pct = |i: usize| p.explained_ratio.get(i).map_or(0.0, |r| 100.0 * r);
    let chart = svg::scatter(
        "Principal components",
        &format!("PC1 ({:.1}%)", pct(0)),
        &if k > 1 { format!("PC2 ({:.1}%)", pct(1)) } else { "-".into() },
        &groups,
    );
    write_text(&out.join("pca.svg"), &chart)?;
    if let Some(s) = silhouette {
        eprintln!("silhouette {s:.3}");
    }
    Ok(())
}

pub fn distance(features: &Path, out: &Path) -> Result<(), CliError> {
    let m = read_matrix(features)?;
    let report = distance_study(&m)?;
    write_json(&out.join("distance_report.json"), &report)?;
    let categories: Vec<(String, Vec<Vec<f64>>)> = report
        .features
        .iter()
        .map(|f| (f.feature.clone(), vec![f.aa.clone(), f.nn.clone(), f.na.clone()]))
        .collect();
    write_text(&out.join("distance.svg"), &svg::boxes("Normalised feature distances", &["A-A", "N-N", "N-A"], &categories))?;
    eprintln!(
        "{:.1}% of {} features have lower within-class than between-class distance",
        100.0 * report.separating_fraction,
        report.features.len()
    );
    Ok(())
}

pub fn synth(
    cfg: &RunConfig,
    test: Option<TestKind>,
    cohort: bool,
    subjects: Option<usize>,
    out: &Path,
    format: Option<OutFormat>,
) -> Result<(), CliError> {
    let ext = if format == Some(OutFormat::Csv) { "csv" } else { "json" };
    if cohort {
        let c = cfg.cohort_config(test, subjects)?;
        let members = gen_cohort(&c)?;
        for m in &members {
            save_recording_path(&m.recording, &out.join(format!("{}.{ext}", m.recording_id)))?;
        }
        eprintln!("wrote {} {} recordings", members.len(), c.test_kind.code());
    } else {
        let p = cfg.synth_params(test)?;
        let rec = generate(&p)?;
        save_recording_path(&rec, &out.join(format!("synthetic_{}.{ext}", p.test_kind.code())))?;
    }
    Ok(())
}
