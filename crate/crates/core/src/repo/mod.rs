//! Repository model: file inventory, focal methods, structured focal context.

pub mod complexity;
pub mod context;
pub mod focal;
pub mod scan;
pub mod std_headers;
pub mod syntax;
pub mod treesitter;

use std::collections::HashMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

pub use complexity::cyclomatic_complexity;
pub use context::{extract_focal_context, ContextError, StructuredFocalContext};
pub use focal::{enumerate_focal_methods, FocalEnumeration, FocalMethod, LineSpan, Signature};
pub use scan::{scan_repository, RepoIndex, ScanError, ScanWarning};
pub use syntax::{SourceOutline, SyntaxBackend, SyntaxError};
pub use treesitter::TreeSitterBackend;

/// One file's text and its outline, parsed once per [`Project`].
#[derive(Debug)]
pub struct ParsedFile {
    pub path: PathBuf,
    pub text: String,
    pub outline: Result<SourceOutline, SyntaxError>,
}

/// A scanned repository plus a syntax backend and a parse cache shared by
/// all workers.
pub struct Project {
    pub index: RepoIndex,
    backend: Arc<dyn SyntaxBackend>,
    cache: RwLock<HashMap<PathBuf, Arc<ParsedFile>>>,
}

impl Project {
    pub fn new(index: RepoIndex, backend: Arc<dyn SyntaxBackend>) -> Self {
        Self {
            index,
            backend,
            cache: RwLock::default(),
        }
    }

    pub fn with_tree_sitter(index: RepoIndex) -> Self {
        Self::new(index, Arc::new(TreeSitterBackend::new()))
    }

    pub fn backend(&self) -> &dyn SyntaxBackend {
        self.backend.as_ref()
    }

    pub fn root(&self) -> &Path {
        &self.index.root
    }

    /// Reads and parses `rel` (relative to the root) at most once.
    pub fn file(&self, rel: &Path) -> io::Result<Arc<ParsedFile>> {
        if let Some(f) = self.cache.read().expect("cache lock").get(rel) {
            return Ok(f.clone());
        }
        let raw = std::fs::read(self.index.abs(rel))?;
        let text = String::from_utf8_lossy(&raw).into_owned();
        let outline = self.backend.outline(&text);
        let parsed = Arc::new(ParsedFile {
            path: rel.to_path_buf(),
            text,
            outline,
        });
        let mut cache = self.cache.write().expect("cache lock");
        Ok(cache.entry(rel.to_path_buf()).or_insert(parsed).clone())
    }

    /// Drops cached parses, e.g. after files changed on disk.
    pub fn invalidate(&self) {
        self.cache.write().expect("cache lock").clear();
    }
}
