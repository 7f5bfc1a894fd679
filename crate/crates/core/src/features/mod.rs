//! Per-recording feature extraction and the published feature catalogue.

pub mod gait;
pub mod upper;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::pose::{PoseRecording, Side, TestKind};
use crate::preprocess::{self, PreprocessConfig};
use crate::signal;

pub use gait::{GaitConfig, GaitStep, SegmentKind, SegmentLabel};
pub use upper::UpperConfig;

/// Mean, population standard deviation and median of a per-cycle quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

impl StatSummary {
    /// `None` for an empty slice.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self { mean, std: var.sqrt(), median: preprocess::median(values)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stat {
    Mean,
    Std,
    Median,
}

pub(crate) const MSM: &[Stat] = &[Stat::Mean, Stat::Std, Stat::Median];
pub(crate) const MS: &[Stat] = &[Stat::Mean, Stat::Std];

impl Stat {
    fn suffix(self) -> &'static str {
        match self {
            Stat::Mean => "mean",
            Stat::Std => "std",
            Stat::Median => "median",
        }
    }

    fn pick(self, s: &StatSummary) -> f64 {
        match self {
            Stat::Mean => s.mean,
            Stat::Std => s.std,
            Stat::Median => s.median,
        }
    }
}

/// Extraction settings shared by every test.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub preprocess: PreprocessConfig,
    pub upper: UpperConfig,
    pub gait: GaitConfig,
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.upper.validate()?;
        self.gait.validate()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub recording_id: String,
    pub config_hash: String,
}

/// Named scalar features of one recording, in catalogue order. A feature
/// that could not be computed is `None` rather than a placeholder number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub test_kind: TestKind,
    pub values: IndexMap<String, Option<f64>>,
    pub provenance: Provenance,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied().flatten()
    }

    fn from_map(test_kind: TestKind, mut found: IndexMap<String, Option<f64>>, provenance: Provenance) -> Self {
        let mut values = IndexMap::new();
        for name in catalogue(test_kind) {
            let v = found.shift_remove(&name).flatten().filter(|v| v.is_finite());
            values.insert(name, v);
        }
        debug_assert!(found.is_empty(), "features outside the catalogue: {:?}", found.keys().collect::<Vec<_>>());
        Self { test_kind, values, provenance }
    }
}

/// Accumulates features under their catalogue names.
#[derive(Debug, Default)]
pub(crate) struct FeatureMap(IndexMap<String, Option<f64>>);

impl FeatureMap {
    pub fn put(&mut self, name: impl Into<String>, value: Option<f64>) {
        self.0.insert(name.into(), value);
    }

    pub fn summary(&mut self, prefix: &str, summary: Option<StatSummary>, stats: &[Stat]) {
        for &s in stats {
            self.put(format!("{prefix}.{}", s.suffix()), summary.as_ref().map(|v| s.pick(v)));
        }
    }
}

/// Asymmetry of two optional quantities; `None` when either is missing or
/// the pair is undefined.
pub(crate) fn asym(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    signal::asymmetry(a?, b?).ok()
}

pub(crate) const SIDES: [Side; 2] = [Side::Right, Side::Left];

fn push_summary(names: &mut Vec<String>, prefix: &str, stats: &[Stat]) {
    names.extend(stats.iter().map(|s| format!("{prefix}.{}", s.suffix())));
}

/// Exact feature names emitted for a test, in output order.
pub fn catalogue(kind: TestKind) -> Vec<String> {
    let mut n = Vec::new();
    match kind {
        TestKind::FingerTap => {
            for q in ["amplitude", "period", "freq"] {
                for s in SIDES {
                    push_summary(&mut n, &format!("ft.{q}.{s}"), MSM);
                }
                n.push(format!("ft.{q}.asym"));
            }
            for s in SIDES {
                n.push(format!("ft.mean_speed.{s}"));
            }
            for s in SIDES {
                n.push(format!("ft.max_speed.{s}.mean"));
            }
            n.push("ft.max_speed.asym".into());
            for s in SIDES {
                n.push(format!("ft.mean_accel.{s}"));
            }
            for s in SIDES {
                push_summary(&mut n, &format!("ft.max_accel.{s}"), MSM);
            }
            n.push("ft.max_accel.asym".into());
            for s in SIDES {
                n.push(format!("ft.tap_rate.{s}"));
            }
            push_summary(&mut n, "ft.wrist_stability", MSM);
            push_summary(&mut n, "ft.elbow_stability", MSM);
        }
        TestKind::FingerToFinger => {
            n.push("ftf.sx".into());
            n.push("ftf.sy".into());
            for q in ["period", "speed", "path_smoothness", "velocity_angle_sym"] {
                for s in SIDES {
                    push_summary(&mut n, &format!("ftf.{q}.{s}"), MS);
                }
            }
        }
        TestKind::ForearmRoll => {
            for q in ["amplitude", "period", "max_speed", "max_accel"] {
                for s in SIDES {
                    push_summary(&mut n, &format!("fr.{q}.{s}"), MSM);
                }
                n.push(format!("fr.{q}.asym"));
            }
            for s in SIDES {
                push_summary(&mut n, &format!("fr.roll_speed.{s}"), MSM);
            }
            for s in SIDES {
                n.push(format!("fr.roll_rate.{s}"));
            }
            push_summary(&mut n, "fr.elbow_stability", MSM);
        }
        TestKind::StandAndWalk => {
            for q in ["knee_angle_sym", "step_sym", "step_length", "step_width", "step_time"] {
                push_summary(&mut n, &format!("saw.{q}"), MSM);
            }
            n.push("saw.time_to_stand".into());
            push_summary(&mut n, "saw.turn_time", MSM);
            push_summary(&mut n, "saw.walk_speed", MS);
            push_summary(&mut n, "saw.cadence", MS);
        }
    }
    n
}

/// Runs preprocessing and the extractor for the recording's test.
pub fn extract_features(rec: &PoseRecording, recording_id: &str, cfg: &FeatureConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    let prepared = preprocess::prepare(rec, &cfg.preprocess)?;
    let rec = &prepared.recording;
    let map = match rec.test_kind() {
        TestKind::FingerTap => upper::ft_feature_map(rec, cfg)?,
        TestKind::FingerToFinger => upper::ftf_feature_map(rec, cfg)?,
        TestKind::ForearmRoll => upper::fr_feature_map(rec, cfg)?,
        TestKind::StandAndWalk => gait::saw_feature_map(rec, cfg)?,
    };
    let provenance = Provenance { recording_id: recording_id.to_owned(), config_hash: cfg.hash() };
    Ok(FeatureVector::from_map(rec.test_kind(), map.0, provenance))
}
