//! Cross-validation by recording or by subject.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{harmonic, BinaryMetrics};
use super::{FeatureMatrix, ForestConfig, LogRegConfig, LogisticRegression, RandomForest, Scaler};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    /// Recordings are assigned to folds independently, stratified by label.
    VideoBased,
    /// All recordings of a subject share one fold.
    SubjectBased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitScheme {
    pub kind: SplitKind,
    pub folds: usize,
    pub seed: u64,
}

impl Default for SplitScheme {
    fn default() -> Self {
        Self { kind: SplitKind::VideoBased, folds: 5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    LogReg(LogRegConfig),
    RandomForest(ForestConfig),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::LogReg(_) => "logreg",
            ModelSpec::RandomForest(_) => "random_forest",
        }
    }

    /// Trains on `x` and returns abnormal-class scores for `test`.
    fn fit_score(&self, x: &[Vec<f64>], y: &[u8], test: &[Vec<f64>]) -> Result<Vec<f64>> {
        Ok(match self {
            ModelSpec::LogReg(cfg) => {
                let m = LogisticRegression::fit(x, y, cfg)?;
                test.iter().map(|r| m.predict_proba(r)).collect()
            }
            ModelSpec::RandomForest(cfg) => {
                let m = RandomForest::fit(x, y, cfg)?;
                test.iter().map(|r| m.predict_proba(r)).collect()
            }
        })
    }
}

/// Fold index of every row.
pub fn fold_assignments(m: &FeatureMatrix, scheme: &SplitScheme) -> Result<Vec<usize>> {
    let k = scheme.folds;
    if k < 2 {
        return Err(Error::Value(format!("need at least 2 folds, got {k}")));
    }
    let y = m.targets()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scheme.seed);
    let mut fold = vec![0; m.n_rows()];
    match scheme.kind {
        SplitKind::VideoBased => {
            if m.n_rows() < k {
                return Err(Error::Value(format!("{} recordings cannot fill {k} folds", m.n_rows())));
            }
            let mut next = 0;
            for class in [0u8, 1] {
                let mut rows: Vec<usize> = (0..m.n_rows()).filter(|&i| y[i] == class).collect();
                rows.shuffle(&mut rng);
                for i in rows {
                    fold[i] = next % k;
                    next += 1;
                }
            }
        }
        SplitKind::SubjectBased => {
            let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, meta) in m.meta().iter().enumerate() {
                groups.entry(meta.subject_id.as_str()).or_default().push(i);
            }
            if groups.len() < k {
                return Err(Error::Value(format!("{} subjects cannot fill {k} folds", groups.len())));
            }
            let mut subjects: Vec<Vec<usize>> = groups.into_values().collect();
            subjects.shuffle(&mut rng);
            for (s, rows) in subjects.iter().enumerate() {
                for &i in rows {
                    fold[i] = s % k;
                }
            }
        }
    }
    Ok(fold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(flatten)]
    pub metrics: BinaryMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub split: SplitKind,
    pub n_recordings: usize,
    pub n_features: usize,
    /// Means over folds, except f1, which is the harmonic mean of the mean precision and recall.
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
    pub auc: f64,
    pub ap: f64,
    pub folds: Vec<FoldMetrics>,
}

/// Cross-validated scores. Imputation and scaling are refit on every training split.
/// Columns are put in name order first so results do not depend on column order.
pub fn evaluate(m: &FeatureMatrix, model: &ModelSpec, scheme: &SplitScheme) -> Result<EvalReport> {
    let mut order: Vec<usize> = (0..m.n_cols()).collect();
    order.sort_by(|&a, &b| m.names()[a].cmp(&m.names()[b]));
    let m = m.permute_columns(&order)?;
    let y = m.targets()?;
    let fold = fold_assignments(&m, scheme)?;
    let mut folds = Vec::with_capacity(scheme.folds);
    for f in 0..scheme.folds {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..m.n_rows()).partition(|&i| fold[i] == f);
        let test_y: Vec<u8> = test.iter().map(|&i| y[i]).collect();
        let pos = test_y.iter().filter(|&&t| t == 1).count();
        if pos == 0 || pos == test_y.len() {
            return Err(Error::DegenerateFold {
                fold: f,
                reason: format!("test split has {pos} abnormal of {} recordings", test_y.len()),
            });
        }
        if train.is_empty() {
            return Err(Error::DegenerateFold { fold: f, reason: "empty training split".into() });
        }
        if scheme.kind == SplitKind::SubjectBased {
            let subjects = |rows: &[usize]| -> BTreeSet<String> {
                rows.iter().map(|&i| m.meta()[i].subject_id.clone()).collect()
            };
            assert!(subjects(&train).is_disjoint(&subjects(&test)), "subject leak in fold {f}");
        }
        let scaler = Scaler::fit(&m, &train)?;
        let x_train = scaler.transform(&m, &train);
        let x_test = scaler.transform(&m, &test);
        let y_train: Vec<u8> = train.iter().map(|&i| y[i]).collect();
        let scores = model.fit_score(&x_train, &y_train, &x_test)?;
        let metrics = BinaryMetrics::compute(&scores, &test_y, 0.5)?;
        folds.push(FoldMetrics { fold: f, n_train: train.len(), n_test: test.len(), metrics });
    }
    let mean = |g: fn(&BinaryMetrics) -> f64| folds.iter().map(|f| g(&f.metrics)).sum::<f64>() / folds.len() as f64;
    let precision = mean(|b| b.precision);
    let recall = mean(|b| b.recall);
    Ok(EvalReport {
        model: model.name().into(),
        split: scheme.kind,
        n_recordings: m.n_rows(),
        n_features: m.n_cols(),
        accuracy: mean(|b| b.accuracy),
        precision,
        recall,
        specificity: mean(|b| b.specificity),
        f1: harmonic(precision, recall),
        auc: mean(|b| b.auc),
        ap: mean(|b| b.ap),
        folds,
    })
}
