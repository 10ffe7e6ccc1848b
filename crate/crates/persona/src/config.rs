// SPDX-License-Identifier: MIT OR Apache-2.0

//! Layered run configuration (defaults < config file < flags) and run
//! manifests sufficient to re-run a command identically.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::ComposeConfig;
use crate::error::{Error, Result};
use crate::extraction::{ExtractionConfig, MeanMode};
use crate::flow::{FlowConfig, HistoryWindow};
use crate::gateway::SamplingParams;
use crate::judge::JudgeConfig;

/// Which gateway backend a run talks to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// The built-in deterministic toy model; capture and steering capable.
    #[default]
    Local,
    /// Chat-completion endpoint; plain generation only.
    Remote,
}

/// Model backend settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSettings {
    pub backend: BackendKind,
    /// Remote model name; the local backend derives its own id.
    pub model_id: String,
    pub device: String,
    pub dtype: String,
    /// Local backend dimensions.
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub vocab_size: usize,
    pub param_seed: u64,
    /// Remote endpoint; `PERSONA_MODEL_API_KEY` carries the credential.
    pub base_url: String,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            backend: BackendKind::Local,
            model_id: String::new(),
            device: "cpu".into(),
            dtype: "f32".into(),
            hidden_dim: 32,
            num_layers: 28,
            vocab_size: 256,
            param_seed: 0,
            base_url: String::new(),
        }
    }
}

/// Judge/generator settings mirrored into [`JudgeConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeSettings {
    pub model: String,
    pub temperature: f32,
    pub max_retries: usize,
    pub concurrency_limit: usize,
    pub fixed_order: bool,
    pub max_tokens: Option<usize>,
}

impl Default for JudgeSettings {
    fn default() -> Self {
        let d = JudgeConfig::default();
        JudgeSettings {
            model: d.model,
            temperature: d.temperature,
            max_retries: d.max_retries,
            concurrency_limit: d.concurrency_limit,
            fixed_order: d.fixed_order,
            max_tokens: d.max_tokens,
        }
    }
}

/// Extraction and sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionSettings {
    pub layers: Vec<usize>,
    pub alphas: Vec<f64>,
    pub temperature: f32,
    pub top_p: f32,
    pub max_new_tokens: usize,
    pub mean_mode: MeanMode,
    pub artifact_retries: usize,
    pub validation_questions: Option<usize>,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        ExtractionSettings {
            layers: vec![5, 10, 15, 20, 25],
            alphas: vec![-1.0, 0.0, 1.0, 2.0],
            temperature: 1.0,
            top_p: 1.0,
            max_new_tokens: 32,
            mean_mode: MeanMode::PerResponse,
            artifact_retries: 2,
            validation_questions: None,
        }
    }
}

/// Flow-controller settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowSettings {
    pub history_window: HistoryWindow,
    pub max_new_tokens: usize,
    pub temperature: f32,
    pub top_p: f32,
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings {
            history_window: HistoryWindow::CurrentOnly,
            max_new_tokens: 64,
            temperature: 1.0,
            top_p: 1.0,
        }
    }
}

/// Benchmark generation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchSettings {
    pub personas: usize,
    pub turns: usize,
    pub retries: usize,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings {
            personas: 100,
            turns: 8,
            retries: 2,
        }
    }
}

/// Filesystem locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub vector_dir: PathBuf,
    pub out_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            vector_dir: PathBuf::from("vectors"),
            out_dir: PathBuf::from("out"),
            cache_dir: None,
        }
    }
}

/// The full layered run configuration.
///
/// Defaults: gate threshold 0.5, clip bound 2.0, unit normalization,
/// layer grid {5, 10, 15, 20, 25}, seed 42.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub model: ModelSettings,
    pub judge: JudgeSettings,
    pub compose: ComposeConfig,
    pub extraction: ExtractionSettings,
    pub flow: FlowSettings,
    pub bench: BenchSettings,
    pub paths: Paths,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelSettings::default(),
            judge: JudgeSettings::default(),
            compose: ComposeConfig::default(),
            extraction: ExtractionSettings::default(),
            flow: FlowSettings::default(),
            bench: BenchSettings::default(),
            paths: Paths::default(),
            seed: 42,
        }
    }
}

impl RunConfig {
    pub fn defaults() -> Self {
        Self::default()
    }

    /// Overlay a TOML config file onto the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.compose.validate()?;
        self.judge_config(None).validate()?;
        if self.extraction.layers.is_empty() {
            return Err(Error::Config("extraction.layers must be non-empty".into()));
        }
        if self.model.backend == BackendKind::Local {
            if self.model.hidden_dim == 0 || self.model.num_layers == 0 {
                return Err(Error::Config("local model dimensions must be positive".into()));
            }
            if self.model.device != "cpu" || self.model.dtype != "f32" {
                return Err(Error::Config(format!(
                    "local backend supports device=cpu dtype=f32, got {}/{}",
                    self.model.device, self.model.dtype
                )));
            }
        }
        if self.model.backend == BackendKind::Remote && self.model.base_url.is_empty() {
            return Err(Error::Config("remote backend needs model.base_url".into()));
        }
        if self.bench.turns < 2 {
            return Err(Error::Config("bench.turns must be >= 2".into()));
        }
        Ok(())
    }

    pub fn judge_config(&self, debug_cache_dir: Option<PathBuf>) -> JudgeConfig {
        JudgeConfig {
            model: self.judge.model.clone(),
            temperature: self.judge.temperature,
            max_retries: self.judge.max_retries,
            concurrency_limit: self.judge.concurrency_limit,
            cache_dir: debug_cache_dir.or_else(|| self.paths.cache_dir.clone()),
            max_tokens: self.judge.max_tokens,
            fixed_order: self.judge.fixed_order,
            ..JudgeConfig::default()
        }
    }

    pub fn extraction_config(&self) -> ExtractionConfig {
        ExtractionConfig {
            sampling: SamplingParams {
                temperature: self.extraction.temperature,
                top_p: self.extraction.top_p,
                max_new_tokens: self.extraction.max_new_tokens,
            },
            base_seed: self.seed,
            mean_mode: self.extraction.mean_mode,
            artifact_retries: self.extraction.artifact_retries,
            validation_questions: self.extraction.validation_questions,
        }
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            compose: self.compose,
            sampling: SamplingParams {
                temperature: self.flow.temperature,
                top_p: self.flow.top_p,
                max_new_tokens: self.flow.max_new_tokens,
            },
            base_seed: self.seed,
            history_window: self.flow.history_window,
            ..FlowConfig::default()
        }
    }
}

/// Hash of one input file recorded in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// A run manifest: the resolved config snapshot, input hashes, and every
/// emitted artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: RunConfig,
    pub inputs: Vec<InputHash>,
    pub outputs: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
    pub toolkit_version: String,
}

pub const MANIFEST_NAME: &str = "run_manifest.json";

impl RunManifest {
    pub fn begin(command: &str, argv: &[String], config: &RunConfig) -> Self {
        RunManifest {
            command: command.to_string(),
            argv: argv.to_vec(),
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_at: chrono::Utc::now().to_rfc3339(),
            finished_at: String::new(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Finish and write the manifest into `out_dir`; returns its path.
    pub fn finish(mut self, out_dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
        self.finished_at = chrono::Utc::now().to_rfc3339();
        let path = out_dir.join(MANIFEST_NAME);
        let json = serde_json::to_string_pretty(&self)?;
        std::fs::write(&path, json).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_documented_values() {
        let config = RunConfig::defaults();
        assert_eq!(config.compose.tau, 0.5);
        assert_eq!(config.compose.alpha_max, 2.0);
        assert_eq!(config.extraction.layers, vec![5, 10, 15, 20, 25]);
        assert_eq!(config.seed, 42);
        assert!(config.validate().is_ok());
    }

    #[test]
    fn file_values_override_defaults_per_field() {
        let config = RunConfig::from_toml(
            r#"
seed = 7

[compose]
tau = 0.3

[judge]
model = "my-judge"
"#,
        )
        .unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.compose.tau, 0.3);
        assert_eq!(config.compose.alpha_max, 2.0, "untouched default survives");
        assert_eq!(config.judge.model, "my-judge");
        assert_eq!(config.judge.max_retries, 3, "nested default survives");
    }

    #[test]
    fn tau_at_or_above_alpha_max_fails_validation() {
        let config = RunConfig::from_toml("[compose]\ntau = 2.0\n").unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn manifest_records_inputs_and_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("input.json");
        std::fs::write(&input, b"{}").unwrap();
        let config = RunConfig::defaults();
        let mut manifest = RunManifest::begin("ortho", &["persona".into(), "ortho".into()], &config);
        manifest.record_input(&input).unwrap();
        manifest.record_output(&dir.path().join("heatmap.png"));
        let path = manifest.finish(dir.path()).unwrap();
        let loaded: RunManifest =
            serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
        assert_eq!(loaded.command, "ortho");
        assert_eq!(loaded.inputs.len(), 1);
        assert_eq!(loaded.outputs.len(), 1);
        assert_eq!(loaded.config, config);
        assert!(!loaded.finished_at.is_empty());
    }
}
