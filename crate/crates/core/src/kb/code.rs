use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::repo::syntax::Span;
use crate::repo::{Project, ScanWarning};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkKind {
    Method,
    Comment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeChunk {
    pub id: usize,
    pub source: PathBuf,
    pub kind: ChunkKind,
    /// Method name; empty for comments.
    pub name: String,
    pub param_types: Vec<String>,
    pub text: String,
    pub span: Span,
    /// Offset of the body's `{` within `text`; `None` for comments.
    pub body_offset: Option<usize>,
}

/// Method and standalone-comment chunks for all sources, then all headers.
pub fn chunk_source(project: &Project) -> (Vec<CodeChunk>, Vec<ScanWarning>) {
    let mut chunks = Vec::new();
    let mut warnings = Vec::new();
    let files = project
        .index
        .source_files
        .iter()
        .chain(&project.index.header_files);
    for rel in files {
        let parsed = match project.file(rel) {
            Ok(p) => p,
            Err(e) => {
                warnings.push(ScanWarning {
                    path: rel.clone(),
                    message: format!("unreadable: {e}"),
                });
                continue;
            }
        };
        let outline = match &parsed.outline {
            Ok(o) => o,
            Err(e) => {
                warnings.push(ScanWarning {
                    path: rel.clone(),
                    message: format!("unparsable: {e}"),
                });
                continue;
            }
        };
        let mut file_chunks: Vec<CodeChunk> = outline
            .functions
            .iter()
            .map(|f| CodeChunk {
                id: 0,
                source: rel.clone(),
                kind: ChunkKind::Method,
                name: f.name.clone(),
                param_types: f.param_types.clone(),
                text: f.span.slice(&parsed.text).to_string(),
                span: f.span,
                body_offset: Some(f.body_span.start_byte - f.span.start_byte),
            })
            .chain(outline.comments.iter().map(|c| CodeChunk {
                id: 0,
                source: rel.clone(),
                kind: ChunkKind::Comment,
                name: String::new(),
                param_types: Vec::new(),
                text: c.slice(&parsed.text).to_string(),
                span: *c,
                body_offset: None,
            }))
            .collect();
        file_chunks.sort_by_key(|c| c.span.start_byte);
        for mut c in file_chunks {
            c.id = chunks.len();
            chunks.push(c);
        }
    }
    (chunks, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use crate::repo::scan_repository;
    use std::fs;

    fn project(files: &[(&str, &str)]) -> (tempfile::TempDir, Project) {
        let dir = tempfile::tempdir().unwrap();
        for (rel, body) in files {
            let p = dir.path().join(rel);
            fs::create_dir_all(p.parent().unwrap()).unwrap();
            fs::write(p, body).unwrap();
        }
        let idx = scan_repository(&RunConfig::for_root(dir.path())).unwrap();
        (dir, Project::with_tree_sitter(idx))
    }

    #[test]
    fn two_methods_and_a_block_comment() {
        let src = "/* Helpers for\n   arithmetic. */\nint add(int a, int b) {\n  return a + b;\n}\nint neg(int a) { return -a; }\n";
        let (_d, p) = project(&[("m.cpp", src)]);
        let (chunks, w) = chunk_source(&p);
        assert!(w.is_empty());
        let kinds: Vec<_> = chunks.iter().map(|c| c.kind).collect();
        assert_eq!(
            kinds,
            [ChunkKind::Comment, ChunkKind::Method, ChunkKind::Method]
        );
        assert_eq!(chunks[1].name, "add");
        assert_eq!(chunks[1].param_types, ["int", "int"]);
        for c in &chunks {
            assert_eq!(c.span.slice(src), c.text);
        }
    }

    #[test]
    fn declaration_only_header_has_no_method_chunks() {
        let h = "struct S {\n  int f(int x);\n  int g() const { return 1; }\n};\n";
        let (_d, p) = project(&[("s.h", h)]);
        let (chunks, _) = chunk_source(&p);
        let methods: Vec<_> = chunks
            .iter()
            .filter(|c| c.kind == ChunkKind::Method)
            .map(|c| c.name.as_str())
            .collect();
        assert_eq!(methods, ["g"]);
    }

    #[test]
    fn comments_have_no_name_or_params() {
        let (_d, p) = project(&[("c.cpp", "// only a note\n")]);
        let (chunks, _) = chunk_source(&p);
        assert_eq!(chunks.len(), 1);
        assert!(chunks[0].name.is_empty() && chunks[0].param_types.is_empty());
    }
}
