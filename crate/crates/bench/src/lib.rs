//! Benchmark fixtures for the core pipeline stages.

use std::path::{Path, PathBuf};

use utgen_core::kb::{embed_chunks, DocChunk, HashingEmbedder};
use utgen_core::repo::Project;
use utgen_core::{scan_repository, RunConfig};

/// Root of the fixture corpus shared with the core tests.
pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn fixture_repo(name: &str) -> PathBuf {
    fixtures().join("repos").join(name)
}

pub fn scan_project(root: &Path) -> Project {
    Project::with_tree_sitter(scan_repository(&RunConfig::for_root(root)).expect("fixture scans"))
}

/// `n` synthetic documentation chunks embedded with the hashing embedder.
pub fn synthetic_docs(n: usize, embedder: &HashingEmbedder) -> Vec<DocChunk> {
    let chunks = (0..n)
        .map(|id| DocChunk {
            id,
            source: "README.md".into(),
            heading_path: vec![format!("Section {}", id % 17)],
            text: format!(
                "Node sequence {id} converts scalars and maps with tag {}",
                id % 13
            ),
            vector: vec![],
        })
        .collect();
    embed_chunks(chunks, embedder).expect("hashing embedder is infallible")
}
