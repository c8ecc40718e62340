//! What `generate` leaves behind for `evaluate`, and per-method transcripts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::generation::{Exchange, LineageEntry, Operation, TestStage};
use crate::guidance::ErrorClassification;
use crate::postprocess::CompileStatus;
use crate::repo::FocalMethod;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationStatus {
    /// A test file was written under the test directory.
    Generated,
    /// The file failed every repair phase and was deleted.
    Removed,
    /// No test file was produced.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodGeneration {
    pub focal: FocalMethod,
    pub status: GenerationStatus,
    /// Relative to the project root; set unless `status` is `Failed`.
    pub test_file: Option<PathBuf>,
    pub stage: Option<TestStage>,
    pub lineage: Vec<LineageEntry>,
    /// `None` when generation did not compile.
    pub compiled: Option<bool>,
    /// Test cases in the file entering pruning.
    pub test_cases: usize,
    /// Classified error lines of the first compile after phase one.
    pub errors: Vec<ErrorClassification>,
    pub notes: Vec<String>,
    /// Why no test file was produced.
    pub error: Option<String>,
    /// Set when the failure came from the LLM provider.
    #[serde(default)]
    pub provider_failure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub project: String,
    /// In focal enumeration order.
    pub methods: Vec<MethodGeneration>,
}

impl Manifest {
    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| {
            PipelineError::io(
                path,
                std::io::Error::new(std::io::ErrorKind::InvalidData, e),
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TranscriptEvent {
    Llm(Exchange),
    Operation(LineageEntry),
    Compile {
        /// The operation whose output was compiled.
        after: Operation,
        status: CompileStatus,
        diagnostics: Vec<String>,
    },
}

/// Every model exchange, repair operation and compile of one method, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub focal_id: String,
    pub events: Vec<TranscriptEvent>,
}

impl Transcript {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| {
            PipelineError::io(
                path,
                std::io::Error::new(std::io::ErrorKind::InvalidData, e),
            )
        })
    }

    pub fn exchanges(&self) -> impl Iterator<Item = &Exchange> {
        self.events.iter().filter_map(|e| match e {
            TranscriptEvent::Llm(x) => Some(x),
            _ => None,
        })
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    let v = serde_json::to_value(value).expect("serializable");
    let mut text = serde_json::to_string_pretty(&v).expect("value serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}
