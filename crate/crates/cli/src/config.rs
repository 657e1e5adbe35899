use std::path::Path;

use anyhow::{Context, Result};
use gaitrehab_core::classify::ClassifierConfig;
use gaitrehab_core::grading::Scheme;
use gaitrehab_core::pipeline::PipelineConfig;
use gaitrehab_core::selection::SelectionConfig;
use serde::{Deserialize, Serialize};

use crate::exit::UsageError;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradingConfig {
    pub schemes: Vec<Scheme>,
    pub svg: bool,
}

impl Default for GradingConfig {
    fn default() -> Self {
        Self {
            schemes: Scheme::ALL.to_vec(),
            svg: false,
        }
    }
}

/// Everything that influences command output. Echoed as `config.json` into
/// every output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub selection: SelectionConfig,
    pub classifier: ClassifierConfig,
    pub grading: GradingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            pipeline: PipelineConfig::default(),
            selection: SelectionConfig::default(),
            classifier: ClassifierConfig::default(),
            grading: GradingConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text)
            .map_err(|e| UsageError(format!("config {}: {e}", path.display())).into())
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.validate()?;
        self.selection.validate()?;
        self.classifier.validate()?;
        if self.grading.schemes.is_empty() {
            return Err(UsageError("grading.schemes is empty".into()).into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gaitrehab_core::classify::Shrinkage;
    use gaitrehab_core::pipeline::Mode;

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg: RunConfig = toml::from_str(
            r#"
            seed = 9
            [pipeline]
            mode = "windowed"
            [selection]
            k = 10
            [classifier]
            lda_shrinkage = { method = "ridge", value = 1e-6 }
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.pipeline.mode, Mode::Windowed);
        assert_eq!(cfg.pipeline.cutoff_hz, 7.0);
        assert_eq!(cfg.selection.k, 10);
        assert_eq!(cfg.classifier.lda_shrinkage, Shrinkage::Ridge(1e-6));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[pipeline]\ncutof_hz = 5.0").is_err());
    }

    #[test]
    fn json_echo_round_trips() {
        let cfg = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
