//! Configuration loading: a single TOML file with flag overrides, unknown
//! keys rejected by name.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{default_views, PipelineSettings, PromptView};
use crate::refine::BuildAdapter;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("invalid config {path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("unknown prompt view `{0}` (known: condition-branch-driven, functionality-driven, exception-oriented)")]
    UnknownView(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatewayConfig {
    /// One of: live, replay, record, mock.
    pub backend: String,
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    /// Directory holding replay fixture files (`*.jsonl`, merged) and
    /// receiving one new file per recorded run.
    pub fixtures_dir: PathBuf,
    /// Scripted responses for the mock backend (JSON list of strings).
    pub mock_script: Option<PathBuf>,
    pub max_in_flight: usize,
    pub max_attempts: u32,
    pub backoff_ms: u64,
    pub timeout_s: u64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            backend: "replay".into(),
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            temperature: 1.0,
            fixtures_dir: PathBuf::from("fixtures/replay"),
            mock_script: None,
            max_in_flight: 4,
            max_attempts: 3,
            backoff_ms: 250,
            timeout_s: 120,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildConfig {
    pub compile_command: String,
    pub test_command: String,
    pub timeout_s: u64,
    pub class_path: String,
    /// Working directory for compile/test runs; artifact output dir when
    /// empty.
    pub workdir: Option<PathBuf>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            compile_command: "javac -cp {class_path} {test_file}".into(),
            test_command: "java -cp {class_path} org.junit.platform.console.ConsoleLauncher --select-class {test_class}".into(),
            timeout_s: 120,
            class_path: ".".into(),
            workdir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub project_root: PathBuf,
    pub include: Vec<String>,
    pub exclude: Vec<String>,
    pub index_path: PathBuf,
    pub output_dir: PathBuf,
    /// Focal method ids forming the task list for `generate --all`.
    pub focal_methods: Vec<String>,
    pub related_top_n: usize,
    pub max_usage_traces: usize,
    pub repair_cap: u32,
    /// Enabled prompt views, in order.
    pub views: Vec<String>,
    /// Worker pool size for `generate --all`; 0 means number of processors.
    pub workers: usize,
    /// Override for the test class template file.
    pub template_path: Option<PathBuf>,
    pub gateway: GatewayConfig,
    pub build: BuildConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            project_root: PathBuf::from("."),
            include: Vec::new(),
            exclude: Vec::new(),
            index_path: PathBuf::from("kb.jsonl"),
            output_dir: PathBuf::from("out"),
            focal_methods: Vec::new(),
            related_top_n: 5,
            max_usage_traces: 3,
            repair_cap: 5,
            views: default_views().into_iter().map(|v| v.name).collect(),
            workers: 0,
            template_path: None,
            gateway: GatewayConfig::default(),
            build: BuildConfig::default(),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut config: Config = toml::from_str(&text).map_err(|e| ConfigError::Invalid {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        // paths in the file resolve relative to the file's directory
        if let Some(dir) = path.parent() {
            config.project_root = dir.join(&config.project_root);
            config.index_path = dir.join(&config.index_path);
            config.output_dir = dir.join(&config.output_dir);
            config.gateway.fixtures_dir = dir.join(&config.gateway.fixtures_dir);
            if let Some(p) = &config.gateway.mock_script {
                config.gateway.mock_script = Some(dir.join(p));
            }
            if let Some(p) = &config.template_path {
                config.template_path = Some(dir.join(p));
            }
            if let Some(p) = &config.build.workdir {
                config.build.workdir = Some(dir.join(p));
            }
        }
        Ok(config)
    }

    /// Resolve the view names against the registry of known views.
    pub fn resolve_views(&self) -> Result<Vec<PromptView>, ConfigError> {
        let registry = default_views();
        self.views
            .iter()
            .map(|name| {
                registry
                    .iter()
                    .find(|v| &v.name == name)
                    .cloned()
                    .ok_or_else(|| ConfigError::UnknownView(name.clone()))
            })
            .collect()
    }

    pub fn pipeline_settings(&self) -> Result<PipelineSettings, ConfigError> {
        let template = match &self.template_path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| ConfigError::Io {
                path: p.clone(),
                message: e.to_string(),
            })?,
            None => crate::pipeline::DEFAULT_TEMPLATE.to_string(),
        };
        Ok(PipelineSettings {
            model: self.gateway.model.clone(),
            temperature: self.gateway.temperature,
            related_top_n: self.related_top_n,
            max_usage_traces: self.max_usage_traces,
            repair_cap: self.repair_cap,
            views: self.resolve_views()?,
            template,
        })
    }

    pub fn build_adapter(&self, default_workdir: &Path) -> BuildAdapter {
        BuildAdapter {
            compile_command: self.build.compile_command.clone(),
            test_command: self.build.test_command.clone(),
            workdir: self
                .build
                .workdir
                .clone()
                .unwrap_or_else(|| default_workdir.to_path_buf()),
            timeout_s: self.build.timeout_s,
            class_path: self.build.class_path.clone(),
        }
    }
}

/// Per-key documentation printed by `--help`.
pub const CONFIG_KEY_HELP: &str = "\
Config file keys (TOML) and defaults:
  project_root          subject source root (default \".\")
  include               include globs (default [\"**/*.java\"])
  exclude               exclude globs (default [])
  index_path            persisted knowledge-base file (default \"kb.jsonl\")
  output_dir            artifact output directory (default \"out\")
  focal_methods         task list of focal method ids for `generate --all` (default [])
  related_top_n         related functions per prompt (default 5)
  max_usage_traces      usage traces per focal method (default 3)
  repair_cap            max repair iterations (default 5)
  views                 enabled prompt views in order (default all three)
  workers               worker pool size for `generate --all`, 0 = processors (default 0)
  template_path         test class template override (default: built-in template)
  gateway.backend       live | replay | record | mock (default \"replay\")
  gateway.base_url      chat-completion endpoint (default \"https://api.openai.com/v1\")
  gateway.model         model name (default \"gpt-4o-mini\")
  gateway.temperature   sampling temperature (default 1.0)
  gateway.fixtures_dir  replay/record fixture directory (default \"fixtures/replay\")
  gateway.mock_script   JSON list of scripted mock responses (default: none)
  gateway.max_in_flight max concurrent live requests (default 4)
  gateway.max_attempts  attempts per live request (default 3)
  gateway.backoff_ms    base retry backoff (default 250)
  gateway.timeout_s     live request timeout (default 120)
  build.compile_command compile template, {class_path}/{test_file} placeholders
                        (default \"javac -cp {class_path} {test_file}\")
  build.test_command    test-run template, also {test_class}
                        (default JUnit console launcher invocation)
  build.timeout_s       per-command timeout (default 120)
  build.class_path      substituted for {class_path} (default \".\")
  build.workdir         build working dir (default: the artifact output dir)
Environment: KTFORGE_API_KEY supplies the live-backend API key.";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let config = Config::default();
        let text = toml::to_string(&config).unwrap();
        let back: Config = toml::from_str(&text).unwrap();
        assert_eq!(back.related_top_n, 5);
        assert_eq!(back.repair_cap, 5);
        assert_eq!(back.gateway.temperature, 1.0);
        assert_eq!(back.gateway.model, "gpt-4o-mini");
    }

    #[test]
    fn unknown_keys_are_rejected_by_name() {
        let err = toml::from_str::<Config>("no_such_key = 1\n").unwrap_err();
        assert!(err.to_string().contains("no_such_key"));
        let err = toml::from_str::<Config>("[gateway]\nmodle = \"typo\"\n").unwrap_err();
        assert!(err.to_string().contains("modle"));
    }

    #[test]
    fn unknown_view_is_an_error() {
        let mut config = Config::default();
        config.views = vec!["performance-driven".into()];
        assert!(matches!(config.resolve_views(), Err(ConfigError::UnknownView(_))));
    }

    #[test]
    fn paths_resolve_relative_to_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ktforge.toml");
        std::fs::write(&path, "project_root = \"toy\"\nindex_path = \"kb.jsonl\"\n").unwrap();
        let config = Config::load(&path).unwrap();
        assert_eq!(config.project_root, dir.path().join("toy"));
        assert_eq!(config.index_path, dir.path().join("kb.jsonl"));
    }

    #[test]
    fn help_text_covers_every_top_level_key() {
        // keep the documented key list in sync with the struct
        let value = toml::to_string(&Config::default()).unwrap();
        let doc: toml::Value = toml::from_str(&value).unwrap();
        for (key, _) in doc.as_table().unwrap() {
            assert!(
                CONFIG_KEY_HELP.contains(key.as_str()),
                "config key `{}` missing from CONFIG_KEY_HELP",
                key
            );
        }
    }
}
