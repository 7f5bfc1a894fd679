//! Classical analyses over per-recording feature tables: scaling, PCA,
//! classifiers, cross-validated evaluation and the device distance study.

mod distance;
mod eval;
mod forest;
mod logreg;
mod metrics;
mod pca;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::pose::Label;
use crate::preprocess::median;

pub use distance::{distance_study, DistanceReport, FeatureDistances};
pub use eval::{evaluate, fold_assignments, FoldMetrics, EvalReport, ModelSpec, SplitKind, SplitScheme};
pub use forest::{feature_importance, ForestConfig, RandomForest};
pub use logreg::{loss_and_gradient, LogRegConfig, LogisticRegression};
pub use metrics::{average_precision, roc_auc, silhouette, BinaryMetrics};
pub use pca::{jacobi_eigen, Pca, EIGEN_MAX_SWEEPS, EIGEN_TOL};

/// Identifying columns of one feature-table row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowMeta {
    pub recording_id: String,
    pub subject_id: String,
    pub device: String,
    pub label: Label,
}

pub const META_COLUMNS: [&str; 4] = ["recording_id", "subject_id", "device", "label"];

/// Feature table with possibly missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    names: Vec<String>,
    meta: Vec<RowMeta>,
    values: Vec<Vec<Option<f64>>>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, meta: Vec<RowMeta>, values: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if meta.len() != values.len() {
            return Err(Error::Value(format!("{} row labels for {} rows", meta.len(), values.len())));
        }
        if let Some((i, r)) = values.iter().enumerate().find(|(_, r)| r.len() != names.len()) {
            return Err(Error::Value(format!("row {i} has {} values, expected {}", r.len(), names.len())));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::Schema(format!("duplicate feature column '{dup}'")));
        }
        if let Some(clash) = names.iter().find(|n| META_COLUMNS.contains(&n.as_str())) {
            return Err(Error::Schema(format!("feature column '{clash}' clashes with a row label column")));
        }
        Ok(Self { names, meta, values })
    }

    /// Rows in the given order; every vector must share one test's catalogue.
    pub fn from_vectors(rows: &[(RowMeta, FeatureVector)]) -> Result<Self> {
        let Some((_, first)) = rows.first() else {
            return Err(Error::EmptyMatrix("no feature vectors".into()));
        };
        let names: Vec<String> = first.values.keys().cloned().collect();
        let mut values = Vec::with_capacity(rows.len());
        for (meta, fv) in rows {
            if fv.test_kind != first.test_kind || fv.values.len() != names.len() {
                return Err(Error::Schema(format!(
                    "recording {} is {} but the table holds {}",
                    meta.recording_id, fv.test_kind, first.test_kind
                )));
            }
            values.push(names.iter().map(|n| fv.values[n.as_str()]).collect());
        }
        Self::new(names, rows.iter().map(|(m, _)| m.clone()).collect(), values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn meta(&self) -> &[RowMeta] {
        &self.meta
    }

    pub fn values(&self) -> &[Vec<Option<f64>>] {
        &self.values
    }

    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn column(&self, j: usize) -> Vec<Option<f64>> {
        self.values.iter().map(|r| r[j]).collect()
    }

    /// Binary targets, abnormal = 1. Unlabelled rows are a schema error.
    pub fn targets(&self) -> Result<Vec<u8>> {
        self.meta
            .iter()
            .map(|m| match m.label {
                Label::Normal => Ok(0),
                Label::Abnormal => Ok(1),
                Label::Unlabeled => Err(Error::Schema(format!("recording {} has no label", m.recording_id))),
            })
            .collect()
    }

    /// Same table with columns reordered by `order` (indices into the current columns).
    pub fn permute_columns(&self, order: &[usize]) -> Result<Self> {
        let names = order.iter().map(|&j| self.names[j].clone()).collect();
        let values = self.values.iter().map(|r| order.iter().map(|&j| r[j]).collect()).collect();
        Self::new(names, self.meta.clone(), values)
    }

    pub fn write_csv(&self, sink: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(META_COLUMNS.iter().copied().chain(self.names.iter().map(String::as_str)))?;
        for (m, row) in self.meta.iter().zip(&self.values) {
            let mut rec = vec![m.recording_id.clone(), m.subject_id.clone(), m.device.clone(), m.label.as_str().into()];
            rec.extend(row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`FeatureMatrix::write_csv`]. Empty cells are missing values.
    pub fn read_csv(source: impl Read) -> Result<Self> {
        let mut r = csv::Reader::from_reader(source);
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        for (i, want) in META_COLUMNS.iter().enumerate() {
            if header.get(i).map(String::as_str) != Some(*want) {
                return Err(Error::Schema(format!("feature table column {} must be '{want}'", i + 1)));
            }
        }
        let names = header[META_COLUMNS.len()..].to_vec();
        let mut meta = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::Schema(format!("row {} has {} fields, expected {}", line + 1, rec.len(), header.len())));
            }
            meta.push(RowMeta {
                recording_id: rec[0].to_owned(),
                subject_id: rec[1].to_owned(),
                device: rec[2].to_owned(),
                label: rec[3].parse()?,
            });
            let row = rec
                .iter()
                .skip(META_COLUMNS.len())
                .map(|cell| {
                    let cell = cell.trim();
                    if cell.is_empty() {
                        return Ok(None);
                    }
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| Error::Parse(format!("row {}: '{cell}' is not a number", line + 1)))?;
                    Ok(v.is_finite().then_some(v))
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        Self::new(names, meta, values)
    }
}

/// Train-split imputation and z-scoring. Columns that are entirely missing
/// or constant on the training rows are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    /// Indices of kept columns in the source matrix.
    pub kept: Vec<usize>,
    pub names: Vec<String>,
    pub fill: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(m: &FeatureMatrix, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() || m.n_cols() == 0 {
            return Err(Error::EmptyMatrix(format!("{} rows x {} columns", rows.len(), m.n_cols())));
        }
        let mut s = Scaler { kept: Vec::new(), names: Vec::new(), fill: Vec::new(), mean: Vec::new(), std: Vec::new() };
        for j in 0..m.n_cols() {
            let present: Vec<f64> = rows.iter().filter_map(|&i| m.values[i][j]).collect();
            let Some(fill) = median(&present) else {
                log::warn!("dropping feature {}: no value on the training rows", m.names[j]);
                continue;
            };
            let filled: Vec<f64> = rows.iter().map(|&i| m.values[i][j].unwrap_or(fill)).collect();
            let n = filled.len() as f64;
            let mean = filled.iter().sum::<f64>() / n;
            let std = (filled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            if !(std > 1e-12 * mean.abs().max(1.0)) {
                log::warn!("dropping feature {}: constant on the training rows", m.names[j]);
                continue;
            }
            s.kept.push(j);
            s.names.push(m.names[j].clone());
            s.fill.push(fill);
            s.mean.push(mean);
            s.std.push(std);
        }
        if s.kept.is_empty() {
            return Err(Error::EmptyMatrix("every feature column is missing or constant".into()));
        }
        Ok(s)
    }

    pub fn transform_row(&self, row: &[Option<f64>]) -> Vec<f64> {
        self.kept
            .iter()
            .enumerate()
            .map(|(k, &j)| (row[j].unwrap_or(self.fill[k]) - self.mean[k]) / self.std[k])
            .collect()
    }

    pub fn transform(&self, m: &FeatureMatrix, rows: &[usize]) -> Vec<Vec<f64>> {
        rows.iter().map(|&i| self.transform_row(&m.values[i])).collect()
    }
}

/// Fits a [`Scaler`] on every row and returns the dense standardized table.
pub fn standardize(m: &FeatureMatrix) -> Result<(Vec<Vec<f64>>, Scaler)> {
    let rows: Vec<usize> = (0..m.n_rows()).collect();
    let s = Scaler::fit(m, &rows)?;
    Ok((s.transform(m, &rows), s))
}
