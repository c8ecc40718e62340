use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::code::{chunk_source, CodeChunk};
use super::docs::{chunk_documents, DocChunk};
use super::embed::{embed_chunks, EmbedError, EmbeddingProvider};
use crate::repo::{Project, ScanWarning};

pub const INDEX_FORMAT: &str = "utgen-kb";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum KbError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("index file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("index file {path} is malformed: {message}")]
    Format { path: String, message: String },
}

/// Both retrieval stores plus the header describing how they were built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub format: String,
    pub version: u32,
    pub provider: String,
    pub dimension: usize,
    /// Hash of every input file's path and bytes.
    pub fingerprint: String,
    pub docs: Vec<DocChunk>,
    pub code: Vec<CodeChunk>,
    #[serde(skip)]
    pub warnings: Vec<ScanWarning>,
}

pub fn fingerprint(project: &Project) -> String {
    let mut h = Sha256::new();
    let idx = &project.index;
    for rel in idx
        .doc_files
        .iter()
        .chain(&idx.source_files)
        .chain(&idx.header_files)
    {
        h.update(rel.to_string_lossy().as_bytes());
        h.update([0]);
        if let Ok(bytes) = std::fs::read(idx.abs(rel)) {
            h.update(&bytes);
        }
        h.update([0]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn build_knowledge_base(
    project: &Project,
    provider: &dyn EmbeddingProvider,
    paragraph_floor: usize,
) -> Result<KnowledgeBase, KbError> {
    let (docs, mut warnings) =
        chunk_documents(project.root(), &project.index.doc_files, paragraph_floor);
    let docs = embed_chunks(docs, provider)?;
    let (code, code_warnings) = chunk_source(project);
    warnings.extend(code_warnings);
    Ok(KnowledgeBase {
        format: INDEX_FORMAT.into(),
        version: INDEX_VERSION,
        provider: provider.name(),
        dimension: provider.dimension(),
        fingerprint: fingerprint(project),
        docs,
        code,
        warnings,
    })
}

impl KnowledgeBase {
    pub fn save(&self, path: &Path) -> Result<(), KbError> {
        let io = |source| KbError::Io {
            path: path.display().to_string(),
            source,
        };
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let json = serde_json::to_string(self).expect("knowledge base serializes");
        std::fs::write(path, json).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, KbError> {
        let text = std::fs::read_to_string(path).map_err(|source| KbError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let kb: Self = serde_json::from_str(&text).map_err(|e| KbError::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if kb.format != INDEX_FORMAT || kb.version != INDEX_VERSION {
            return Err(KbError::Format {
                path: path.display().to_string(),
                message: format!("unsupported {} v{}", kb.format, kb.version),
            });
        }
        Ok(kb)
    }

    /// Whether a persisted index can serve `project` with `provider`.
    pub fn is_current(&self, project: &Project, provider: &dyn EmbeddingProvider) -> bool {
        self.provider == provider.name()
            && self.dimension == provider.dimension()
            && self.fingerprint == fingerprint(project)
    }
}

/// Reuses the index at `path` when it is current, otherwise rebuilds and
/// rewrites it. `force` always rebuilds.
pub fn load_or_build(
    path: &Path,
    project: &Project,
    provider: &dyn EmbeddingProvider,
    paragraph_floor: usize,
    force: bool,
) -> Result<KnowledgeBase, KbError> {
    if !force {
        match KnowledgeBase::load(path) {
            Ok(kb) if kb.is_current(project, provider) => return Ok(kb),
            Ok(_) => log::info!("knowledge base at {} is stale; rebuilding", path.display()),
            Err(KbError::Io { .. }) => {}
            Err(e) => log::warn!("{e}; rebuilding"),
        }
    }
    let kb = build_knowledge_base(project, provider, paragraph_floor)?;
    kb.save(path)?;
    Ok(kb)
}
