//! Run configuration: one TOML file, every key optional, unknown keys rejected.

use std::path::Path;

use neurokin_core::analysis::{ForestConfig, LogRegConfig};
use neurokin_core::features::FeatureConfig;
use neurokin_core::pose::TestKind;
use neurokin_core::synth::{CohortConfig, SynthParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub logreg: LogRegConfig,
    pub forest: ForestConfig,
    pub folds: usize,
    pub pca_components: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { logreg: LogRegConfig::default(), forest: ForestConfig::default(), folds: 5, pca_components: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds every randomised step; `--seed` overrides it.
    pub seed: u64,
    pub features: FeatureConfig,
    pub analysis: AnalysisConfig,
    /// Overrides applied on top of the per-test generator defaults.
    pub synth: toml::Table,
    /// Overrides applied on top of the per-test cohort defaults.
    pub cohort: toml::Table,
}

fn deep_merge(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => deep_merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn overlay<T: Serialize + DeserializeOwned>(base: &T, over: &toml::Table, section: &str) -> Result<T, CliError> {
    let mut table = toml::Table::try_from(base).map_err(|e| CliError::internal(format!("config defaults: {e}")))?;
    deep_merge(&mut table, over);
    table.try_into().map_err(|e| CliError::usage(format!("[{section}] {e}")))
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        cfg.features.validate().map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        // surface unknown generator keys before any command runs
        cfg.synth_params(None)?;
        cfg.cohort_config(None, None)?;
        Ok(cfg)
    }

    /// Test named by the flag, else by `synth.test_kind`, else finger tapping.
    fn kind(&self, section: &toml::Table, flag: Option<TestKind>) -> Result<TestKind, CliError> {
        if let Some(k) = flag {
            return Ok(k);
        }
        match section.get("test_kind") {
            Some(toml::Value::String(s)) => s.parse().map_err(|e| CliError::usage(format!("{e}"))),
            Some(other) => Err(CliError::usage(format!("test_kind must be a string, got {other}"))),
            None => Ok(TestKind::FingerTap),
        }
    }

    pub fn synth_params(&self, flag: Option<TestKind>) -> Result<SynthParams, CliError> {
        let kind = self.kind(&self.synth, flag)?;
        let mut p = overlay(&SynthParams::for_test(kind), &self.synth, "synth")?;
        p.test_kind = kind;
        p.seed = self.seed;
        Ok(p)
    }

    pub fn cohort_config(&self, flag: Option<TestKind>, subjects: Option<usize>) -> Result<CohortConfig, CliError> {
        let kind = self.kind(&self.cohort, flag)?;
        let mut c = overlay(&CohortConfig::for_test(kind, 10, 0), &self.cohort, "cohort")?;
        c.test_kind = kind;
        c.seed = self.seed;
        if let Some(n) = subjects {
            c.subjects = n;
        }
        Ok(c)
    }

    pub fn forest(&self) -> ForestConfig {
        ForestConfig { seed: self.seed, ..self.analysis.forest.clone() }
    }
}
