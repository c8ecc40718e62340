use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::includes::IncludeGraph;
use crate::repo::syntax::{DeclKind, SyntaxError};
use crate::repo::{FocalMethod, Project};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyEntry {
    pub symbol: String,
    pub declaring_file: PathBuf,
    pub declaration_text: String,
    pub layer: u8,
    /// Byte range of `declaration_text` in `declaring_file`.
    pub start_byte: usize,
    pub end_byte: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossFileDependencies {
    pub entries: Vec<DependencyEntry>,
    /// Focal file, then layer-1 files, then layer-2 files.
    pub chain: Vec<PathBuf>,
    /// Invoked names with no declaration in either layer.
    pub unresolved: Vec<String>,
}

/// Resolves every identifier invoked in the focal body against layer-1
/// files, falling back to layer 2 only when layer 1 has no declaration.
pub fn extract_cross_file_dependencies(
    focal: &FocalMethod,
    graph: &IncludeGraph,
    project: &Project,
) -> Result<CrossFileDependencies, SyntaxError> {
    let invoked = project.backend().invocations(&focal.body)?;
    let layers = [graph.layer_files(1), graph.layer_files(2)];
    let mut out = CrossFileDependencies {
        chain: std::iter::once(graph.focal_file.clone())
            .chain(layers.iter().flatten().map(|p| p.to_path_buf()))
            .collect(),
        ..CrossFileDependencies::default()
    };
    let mut seen: HashSet<(String, PathBuf)> = HashSet::new();
    for inv in invoked {
        let mut found = false;
        for (i, files) in layers.iter().enumerate() {
            for file in files {
                let Ok(parsed) = project.file(file) else {
                    continue;
                };
                let Ok(outline) = &parsed.outline else {
                    continue;
                };
                let decl = outline
                    .declarations
                    .iter()
                    .find(|d| d.name == inv.name && d.kind != DeclKind::Field);
                if let Some(d) = decl {
                    found = true;
                    if seen.insert((inv.name.clone(), file.to_path_buf())) {
                        out.entries.push(DependencyEntry {
                            symbol: inv.name.clone(),
                            declaring_file: file.to_path_buf(),
                            declaration_text: d.span.slice(&parsed.text).to_string(),
                            layer: i as u8 + 1,
                            start_byte: d.span.start_byte,
                            end_byte: d.span.end_byte,
                        });
                    }
                }
            }
            if found {
                break;
            }
        }
        if !found && !out.unresolved.contains(&inv.name) {
            out.unresolved.push(inv.name);
        }
    }
    Ok(out)
}
