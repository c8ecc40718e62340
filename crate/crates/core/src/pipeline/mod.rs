//! End-to-end orchestration: scan, per-method generation with repair, and
//! evaluation into a metrics report.

pub mod evaluate;
pub mod generate;
pub mod harness;
pub mod manifest;

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::deps::{extract_config_dependencies, ConfigDependencies};
use crate::guidance::{ErrorClassifier, GuidelineCatalog};
use crate::kb::KbError;
use crate::postprocess::PostprocessError;
use crate::repo::{enumerate_focal_methods, scan_repository, FocalMethod, Project, ScanError};

pub use evaluate::evaluate;
pub use generate::{generate, GenerateOptions, Providers};
pub use harness::{BuildHarness, ToolchainHarness};
pub use manifest::{GenerationStatus, Manifest, MethodGeneration, Transcript, TranscriptEvent};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error("invalid focal filter {pattern:?}: {message}")]
    Filter { pattern: String, message: String },
    #[error(transparent)]
    Toolchain(#[from] PostprocessError),
    #[error("knowledge base: {0}")]
    Knowledge(#[from] KbError),
    #[error("LLM provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl PipelineError {
    /// 1 for environment faults, 2 for configuration faults.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Scan(_) | Self::Filter { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// A scanned project with its configuration-level facts, shared by every
/// command.
pub struct Workspace {
    pub config: RunConfig,
    pub project: Project,
    pub deps: ConfigDependencies,
    pub classifier: ErrorClassifier,
    pub catalog: GuidelineCatalog,
}

impl Workspace {
    /// The project root is made absolute so paths survive a change of
    /// working directory.
    pub fn open(mut config: RunConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        config.project_root = config
            .project_root
            .canonicalize()
            .map_err(|_| ScanError::MissingRoot(config.project_root.clone()))?;
        let index = scan_repository(&config)?;
        for w in &index.warnings {
            log::warn!("{}: {}", w.path.display(), w.message);
        }
        let deps = extract_config_dependencies(&index);
        Ok(Self {
            project: Project::with_tree_sitter(index),
            config,
            deps,
            classifier: ErrorClassifier::builtin(),
            catalog: GuidelineCatalog::builtin(),
        })
    }

    /// Final component of the project root.
    pub fn project_name(&self) -> String {
        let root = self
            .config
            .project_root
            .canonicalize()
            .unwrap_or_else(|_| self.config.project_root.clone());
        root.file_name().map_or_else(
            || root.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        )
    }

    pub fn out_dir(&self) -> PathBuf {
        self.config.out_dir_abs()
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.out_dir().join("manifest.json")
    }

    pub fn report_path(&self) -> PathBuf {
        self.out_dir().join("report.json")
    }

    pub fn transcripts_dir(&self) -> PathBuf {
        self.out_dir().join("transcripts")
    }

    pub fn kb_path(&self) -> PathBuf {
        self.out_dir().join("kb").join("index.json")
    }

    /// Focal methods passing the configured filters and, when given, the
    /// glob on id, name or qualified name.
    pub fn focal_methods(&self, glob: Option<&str>) -> Result<Vec<FocalMethod>, PipelineError> {
        let pattern = glob
            .map(|g| {
                glob::Pattern::new(g).map_err(|e| PipelineError::Filter {
                    pattern: g.to_string(),
                    message: e.to_string(),
                })
            })
            .transpose()?;
        let found = enumerate_focal_methods(&self.project, &self.config.filters);
        for d in &found.diagnostics {
            log::warn!("{}: {}", d.path.display(), d.message);
        }
        Ok(found
            .methods
            .into_iter()
            .filter(|m| {
                pattern.as_ref().is_none_or(|p| {
                    p.matches(&m.id) || p.matches(&m.name) || p.matches(&m.qualified_name())
                })
            })
            .collect())
    }
}

/// Counts printed by `scan`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanSummary {
    pub project: String,
    pub source_files: usize,
    pub header_files: usize,
    pub config_files: usize,
    pub doc_files: usize,
    pub focal_methods: usize,
    pub gtest_available: bool,
    pub cxx_standard: Option<String>,
    pub warnings: usize,
}

pub fn scan_summary(ws: &Workspace, methods: &[FocalMethod]) -> ScanSummary {
    let idx = &ws.project.index;
    ScanSummary {
        project: ws.project_name(),
        source_files: idx.source_files.len(),
        header_files: idx.header_files.len(),
        config_files: idx.config_files.len(),
        doc_files: idx.doc_files.len(),
        focal_methods: methods.len(),
        gtest_available: ws.deps.gtest_available,
        cxx_standard: ws.deps.cxx_standard.clone(),
        warnings: idx.warnings.len(),
    }
}

impl std::fmt::Display for ScanSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Project: {}", self.project)?;
        writeln!(f, "Source files:  {}", self.source_files)?;
        writeln!(f, "Header files:  {}", self.header_files)?;
        writeln!(f, "CMake files:   {}", self.config_files)?;
        writeln!(f, "Doc files:     {}", self.doc_files)?;
        writeln!(f, "Focal methods: {}", self.focal_methods)?;
        writeln!(f, "gtest available: {}", self.gtest_available)?;
        writeln!(
            f,
            "C++ standard:  {}",
            self.cxx_standard.as_deref().unwrap_or("unspecified")
        )?;
        if self.warnings > 0 {
            writeln!(f, "Scan warnings: {}", self.warnings)?;
        }
        Ok(())
    }
}

/// A bounded pool for per-method work.
pub(crate) fn worker_pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool builds")
}
