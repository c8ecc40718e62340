use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::repo::Project;

pub const MAX_LAYERS: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncludeEdge {
    pub from: PathBuf,
    pub to: PathBuf,
    pub layer: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DanglingInclude {
    pub from: PathBuf,
    pub include: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncludeGraph {
    pub focal_file: PathBuf,
    pub edges: Vec<IncludeEdge>,
    pub dangling: Vec<DanglingInclude>,
}

impl IncludeGraph {
    /// Distinct targets of the given layer, in edge order.
    pub fn layer_files(&self, layer: u8) -> Vec<&Path> {
        let mut seen = HashSet::new();
        self.edges
            .iter()
            .filter(|e| e.layer == layer)
            .map(|e| e.to.as_path())
            .filter(|p| seen.insert(*p))
            .collect()
    }
}

/// Layer 1: quote includes of the focal file, plus its paired header.
/// Layer 2: quote includes of layer-1 headers. Each file is visited once.
pub fn build_include_graph(focal_file: &Path, project: &Project, max_depth: u8) -> IncludeGraph {
    let max_depth = max_depth.min(MAX_LAYERS);
    let mut graph = IncludeGraph {
        focal_file: focal_file.to_path_buf(),
        ..IncludeGraph::default()
    };
    let mut visited: HashSet<PathBuf> = HashSet::from([focal_file.to_path_buf()]);
    let mut frontier = vec![focal_file.to_path_buf()];
    for layer in 1..=max_depth {
        let mut next = Vec::new();
        for from in &frontier {
            for to in quote_includes(from, project, &mut graph.dangling) {
                if visited.insert(to.clone()) {
                    graph.edges.push(IncludeEdge {
                        from: from.clone(),
                        to: to.clone(),
                        layer,
                    });
                    next.push(to);
                }
            }
        }
        if layer == 1 {
            if let Some(h) = project.index.paired_header(focal_file) {
                if visited.insert(h.clone()) {
                    graph.edges.push(IncludeEdge {
                        from: focal_file.to_path_buf(),
                        to: h.clone(),
                        layer: 1,
                    });
                    next.push(h);
                }
            }
        }
        frontier = next;
    }
    graph
}

fn quote_includes(
    from: &Path,
    project: &Project,
    dangling: &mut Vec<DanglingInclude>,
) -> Vec<PathBuf> {
    let Ok(parsed) = project.file(from) else {
        return Vec::new();
    };
    let Ok(outline) = &parsed.outline else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for inc in outline.includes.iter().filter(|i| !i.angled) {
        match project.index.resolve_include(from, &inc.path) {
            Some(p) if project.index.is_header(&p) => out.push(p),
            Some(_) => {}
            None => dangling.push(DanglingInclude {
                from: from.to_path_buf(),
                include: inc.path.clone(),
                line: inc.line,
            }),
        }
    }
    out
}
