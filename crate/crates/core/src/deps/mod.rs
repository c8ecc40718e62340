//! Configuration dependencies (CMake) and cross-file data dependencies
//! along a two-layer include graph.

pub mod cmake;
pub mod crossfile;
pub mod includes;

use serde::Serialize;

pub use cmake::{extract_config_dependencies, ConfigDependencies, Library, Provenance};
pub use crossfile::{extract_cross_file_dependencies, CrossFileDependencies, DependencyEntry};
pub use includes::{build_include_graph, DanglingInclude, IncludeEdge, IncludeGraph, MAX_LAYERS};

/// Payload of `--dump-deps`.
#[derive(Debug, Serialize)]
pub struct DependencyDump<'a> {
    pub focal_id: &'a str,
    pub config: &'a ConfigDependencies,
    pub include_graph: &'a IncludeGraph,
    pub cross_file: &'a CrossFileDependencies,
}

impl DependencyDump<'_> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dependency dump serializes")
    }
}
