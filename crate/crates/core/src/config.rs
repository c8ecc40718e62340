//! Run configuration: one TOML file, strict keys, secrets via environment.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Project root. Relative paths are resolved against the config file's directory.
    pub project_root: PathBuf,
    /// Test directory, relative to the project root.
    pub test_dir: PathBuf,
    /// Extra include roots, relative to the project root.
    pub include_roots: Vec<PathBuf>,
    /// Directory names skipped during scanning (build output and the like).
    pub exclude_dirs: Vec<String>,
    /// Where manifests, transcripts, the KB index and reports are written.
    pub out_dir: PathBuf,
    pub workers: usize,
    pub token_budget: usize,
    pub filters: FocalFilters,
    pub retrieval: RetrievalConfig,
    pub llm: LlmConfig,
    pub embedding: EmbeddingConfig,
    pub toolchain: ToolchainConfig,
    pub features: FeatureToggles,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            project_root: PathBuf::from("."),
            test_dir: PathBuf::from("test"),
            include_roots: Vec::new(),
            exclude_dirs: vec!["build".into()],
            out_dir: PathBuf::from(".utgen"),
            workers: 4,
            token_budget: 32_000,
            filters: FocalFilters::default(),
            retrieval: RetrievalConfig::default(),
            llm: LlmConfig::default(),
            embedding: EmbeddingConfig::default(),
            toolchain: ToolchainConfig::default(),
            features: FeatureToggles::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FocalFilters {
    /// Minimum number of source lines spanned by a definition.
    pub min_body_lines: usize,
    /// Glob patterns matched against the unqualified and the qualified name.
    pub exclude_names: Vec<String>,
    /// Constructors, destructors and operator overloads.
    pub include_special_members: bool,
    /// Member functions defined under a private/protected access specifier.
    pub include_non_public: bool,
}

impl Default for FocalFilters {
    fn default() -> Self {
        Self {
            min_body_lines: 2,
            exclude_names: Vec::new(),
            include_special_members: true,
            include_non_public: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalConfig {
    pub doc_top_k: usize,
    pub max_code_examples: usize,
    /// Paragraph groups shorter than this are merged into the next one.
    pub paragraph_floor: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            doc_top_k: 2,
            max_code_examples: 5,
            paragraph_floor: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub temperature: f64,
    pub choice_count: u32,
    pub max_output_tokens: u32,
    pub request_timeout_secs: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            temperature: 0.0,
            choice_count: 1,
            max_output_tokens: 4096,
            request_timeout_secs: 120,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    /// Deterministic local feature-hashing embedder.
    Hashing,
    /// OpenAI-compatible `/embeddings` endpoint.
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingConfig {
    pub kind: EmbeddingKind,
    pub dimension: usize,
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            kind: EmbeddingKind::Hashing,
            dimension: 256,
            endpoint: "https://api.openai.com/v1/embeddings".into(),
            model: "text-embedding-3-small".into(),
            api_key_env: "OPENAI_API_KEY".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToolchainConfig {
    /// C++ compiler driver.
    pub cxx: String,
    /// Compile command template. Placeholders: `{cxx}`, `{std}`, `{coverage}`,
    /// `{includes}`, `{test_file}`, `{objects}`, `{libs}`, `{output}`.
    pub compile_template: String,
    /// Used when `{std}` has no value from the project configuration.
    pub default_std: String,
    /// Instrumentation flags substituted for `{coverage}` when evaluating.
    pub coverage_flags: Vec<String>,
    /// Commands run after a test binary executes. Placeholders: `{binary}`,
    /// `{profraw}`, `{profdata}`. The last command's stdout is the export JSON.
    pub coverage_export: Vec<String>,
    /// Wall-clock limit per test binary.
    pub exec_timeout_secs: u64,
    /// Link `gtest_main` instead of keeping a `main` in generated files.
    pub framework_provides_main: bool,
    /// Extra flags appended to every compile.
    pub extra_flags: Vec<String>,
}

impl Default for ToolchainConfig {
    fn default() -> Self {
        Self {
            cxx: "clang++".into(),
            compile_template:
                "{cxx} {std} {coverage} {includes} {test_file} {objects} {libs} -o {output}".into(),
            default_std: "17".into(),
            coverage_flags: vec![
                "-fprofile-instr-generate".into(),
                "-fcoverage-mapping".into(),
            ],
            coverage_export: vec![
                "llvm-profdata merge -sparse {profraw} -o {profdata}".into(),
                "llvm-cov export -format=text -instr-profile={profdata} {binary}".into(),
            ],
            exec_timeout_secs: 10,
            framework_provides_main: false,
            extra_flags: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureToggles {
    pub save_transcripts: bool,
    pub rebuild_kb: bool,
    pub dump_focal: bool,
    pub dump_deps: Option<String>,
    /// Compile and repair during `generate` (phases two and three need a compiler).
    pub compile_during_generation: bool,
}

impl Default for FeatureToggles {
    fn default() -> Self {
        Self {
            save_transcripts: false,
            rebuild_kb: false,
            dump_focal: false,
            dump_deps: None,
            compile_during_generation: true,
        }
    }
}

pub const API_KEY_OVERRIDE_ENV: &str = "UTGEN_API_KEY";
pub const ENDPOINT_OVERRIDE_ENV: &str = "UTGEN_LLM_ENDPOINT";
pub const MODEL_OVERRIDE_ENV: &str = "UTGEN_LLM_MODEL";

impl RunConfig {
    /// Loads, resolves relative paths against the file's directory, applies
    /// environment overrides and validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Invalid(message) => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        if cfg.project_root.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.project_root = base.join(&cfg.project_root);
        }
        cfg.apply_env_overrides();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// A configuration rooted at `root` with defaults everywhere else.
    pub fn for_root(root: impl Into<PathBuf>) -> Self {
        Self {
            project_root: root.into(),
            ..Self::default()
        }
    }

    pub fn apply_env_overrides(&mut self) {
        if let Ok(v) = env::var(ENDPOINT_OVERRIDE_ENV) {
            self.llm.endpoint = v;
        }
        if let Ok(v) = env::var(MODEL_OVERRIDE_ENV) {
            self.llm.model = v;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.test_dir.is_absolute() || self.test_dir.components().any(is_parent) {
            return invalid("test_dir must be a relative path under the project root");
        }
        if self
            .include_roots
            .iter()
            .any(|p| p.components().any(is_parent))
        {
            return invalid("include_roots must stay under the project root");
        }
        if self.workers == 0 {
            return invalid("workers must be at least 1");
        }
        if self.token_budget == 0 {
            return invalid("token_budget must be positive");
        }
        if self.retrieval.doc_top_k == 0 {
            return invalid("retrieval.doc_top_k must be at least 1");
        }
        if self.embedding.dimension == 0 {
            return invalid("embedding.dimension must be positive");
        }
        if !(0.0..=2.0).contains(&self.llm.temperature) {
            return invalid("llm.temperature must be within [0, 2]");
        }
        if self.llm.choice_count == 0 || self.llm.max_output_tokens == 0 {
            return invalid("llm.choice_count and llm.max_output_tokens must be positive");
        }
        if self.toolchain.exec_timeout_secs == 0 {
            return invalid("toolchain.exec_timeout_secs must be positive");
        }
        for pat in &self.filters.exclude_names {
            glob::Pattern::new(pat)
                .map_err(|e| ConfigError::Invalid(format!("bad exclude glob {pat:?}: {e}")))?;
        }
        Ok(())
    }

    pub fn test_dir_abs(&self) -> PathBuf {
        self.project_root.join(&self.test_dir)
    }

    pub fn out_dir_abs(&self) -> PathBuf {
        if self.out_dir.is_absolute() {
            self.out_dir.clone()
        } else {
            self.project_root.join(&self.out_dir)
        }
    }

    /// API key for the chat provider, looked up only through the environment.
    pub fn llm_api_key(&self) -> Option<String> {
        env::var(API_KEY_OVERRIDE_ENV)
            .ok()
            .or_else(|| env::var(&self.llm.api_key_env).ok())
            .filter(|k| !k.is_empty())
    }
}

fn is_parent(c: std::path::Component<'_>) -> bool {
    matches!(c, std::path::Component::ParentDir)
}
