use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::config::RunConfig;

/// Generated test files carry this prefix and never feed back into a scan.
pub const GENERATED_PREFIX: &str = "utgen_test_";

const SOURCE_EXTS: &[&str] = &["cpp", "cc", "cxx"];
const HEADER_EXTS: &[&str] = &["h", "hpp", "hh", "hxx"];
const DOC_EXTS: &[&str] = &["md", "markdown", "txt", "rst"];

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("project root {0} does not exist or is not a directory")]
    MissingRoot(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanWarning {
    pub path: PathBuf,
    pub message: String,
}

/// Files of one repository, classified. All paths are relative to `root`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoIndex {
    pub root: PathBuf,
    pub source_files: Vec<PathBuf>,
    pub header_files: Vec<PathBuf>,
    pub config_files: Vec<PathBuf>,
    pub doc_files: Vec<PathBuf>,
    pub test_dir: PathBuf,
    pub include_roots: Vec<PathBuf>,
    pub warnings: Vec<ScanWarning>,
}

impl RepoIndex {
    pub fn abs(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    pub fn is_in_test_dir(&self, rel: &Path) -> bool {
        !self.test_dir.as_os_str().is_empty() && rel.starts_with(&self.test_dir)
    }

    pub fn is_header(&self, rel: &Path) -> bool {
        self.header_files
            .binary_search_by(|p| p.as_path().cmp(rel))
            .is_ok()
    }

    pub fn is_source(&self, rel: &Path) -> bool {
        self.source_files
            .binary_search_by(|p| p.as_path().cmp(rel))
            .is_ok()
    }

    /// Resolves a quote include written in `from`: directory of the including
    /// file, then the configured include roots, then the repository root.
    pub fn resolve_include(&self, from: &Path, include: &str) -> Option<PathBuf> {
        let mut candidates = Vec::new();
        if let Some(dir) = from.parent() {
            candidates.push(dir.join(include));
        }
        for r in &self.include_roots {
            candidates.push(r.join(include));
        }
        candidates.push(PathBuf::from(include));
        candidates
            .into_iter()
            .map(|c| normalize(&c))
            .find(|c| self.is_header(c) || self.is_source(c))
    }

    /// Header in the same directory (or under an include root) with the same stem.
    pub fn paired_header(&self, source: &Path) -> Option<PathBuf> {
        let stem = source.file_stem()?;
        let dir = source.parent().unwrap_or(Path::new(""));
        let same_dir = self
            .header_files
            .iter()
            .find(|h| h.parent().unwrap_or(Path::new("")) == dir && h.file_stem() == Some(stem));
        if let Some(h) = same_dir {
            return Some(h.clone());
        }
        self.header_files
            .iter()
            .find(|h| {
                h.file_stem() == Some(stem)
                    && self
                        .include_roots
                        .iter()
                        .any(|r| h.parent().is_some_and(|p| p == r || p.starts_with(r)))
            })
            .cloned()
    }

    /// Directories holding headers, plus include roots and the root itself.
    pub fn include_dirs(&self) -> Vec<PathBuf> {
        let mut dirs: Vec<PathBuf> = self
            .include_roots
            .iter()
            .cloned()
            .chain(
                self.header_files
                    .iter()
                    .map(|h| h.parent().unwrap_or(Path::new("")).to_path_buf()),
            )
            .collect();
        dirs.push(PathBuf::new());
        dirs.sort();
        dirs.dedup();
        dirs
    }
}

/// Lexically removes `.` and `..` components.
pub fn normalize(p: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            std::path::Component::CurDir => {}
            std::path::Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out
}

pub fn scan_repository(config: &RunConfig) -> Result<RepoIndex, ScanError> {
    let root = &config.project_root;
    if !root.is_dir() {
        return Err(ScanError::MissingRoot(root.clone()));
    }
    let out_dir = config.out_dir_abs();
    let mut index = RepoIndex {
        root: root.clone(),
        source_files: Vec::new(),
        header_files: Vec::new(),
        config_files: Vec::new(),
        doc_files: Vec::new(),
        test_dir: config.test_dir.clone(),
        include_roots: config.include_roots.clone(),
        warnings: Vec::new(),
    };
    let walker = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| {
            if e.depth() == 0 || !e.file_type().is_dir() {
                return true;
            }
            let name = e.file_name().to_string_lossy();
            !(name.starts_with('.')
                || config.exclude_dirs.iter().any(|d| d.as_str() == name)
                || e.path() == out_dir)
        });
    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(err) => {
                let path = err
                    .path()
                    .and_then(|p| p.strip_prefix(root).ok())
                    .map(Path::to_path_buf)
                    .unwrap_or_default();
                index.warnings.push(ScanWarning {
                    path,
                    message: err.to_string(),
                });
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .expect("walkdir yields paths under root")
            .to_path_buf();
        let name = entry.file_name().to_string_lossy();
        if name.starts_with(GENERATED_PREFIX) {
            continue;
        }
        let bucket = if name == "CMakeLists.txt" {
            &mut index.config_files
        } else {
            let ext = rel
                .extension()
                .map(|e| e.to_string_lossy().to_ascii_lowercase())
                .unwrap_or_default();
            if SOURCE_EXTS.contains(&ext.as_str()) {
                &mut index.source_files
            } else if HEADER_EXTS.contains(&ext.as_str()) {
                &mut index.header_files
            } else if DOC_EXTS.contains(&ext.as_str()) {
                &mut index.doc_files
            } else {
                continue;
            }
        };
        if let Err(e) = File::open(entry.path()) {
            index.warnings.push(ScanWarning {
                path: rel,
                message: format!("unreadable: {e}"),
            });
            continue;
        }
        bucket.push(rel);
    }
    for list in [
        &mut index.source_files,
        &mut index.header_files,
        &mut index.config_files,
        &mut index.doc_files,
    ] {
        list.sort();
    }
    Ok(index)
}
