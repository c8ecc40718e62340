use std::path::{Path, PathBuf};

use glob::Pattern;
use serde::{Deserialize, Serialize};

use super::complexity::cyclomatic_complexity;
use super::scan::ScanWarning;
use super::syntax::{Access, FunctionItem, FunctionKind};
use super::Project;
use crate::config::FocalFilters;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub return_type: String,
    pub parameter_types: Vec<String>,
}

/// 1-based inclusive line range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocalMethod {
    pub id: String,
    pub name: String,
    /// Empty for free functions.
    pub class_name: String,
    pub signature: Signature,
    /// Relative to the repository root.
    pub file: PathBuf,
    pub line_span: LineSpan,
    pub body: String,
    pub cyclomatic_complexity: u32,
    #[serde(skip, default = "default_kind")]
    pub kind: FunctionKind,
    /// Byte offset of `body` in the file.
    #[serde(skip)]
    pub byte_start: usize,
}

fn default_kind() -> FunctionKind {
    FunctionKind::Free
}

impl FocalMethod {
    pub fn qualified_name(&self) -> String {
        if self.class_name.is_empty() {
            self.name.clone()
        } else {
            format!("{}::{}", self.class_name, self.name)
        }
    }

    /// Declaration-like rendering, e.g. `bool convert::decode(const Node&, Binary&)`.
    pub fn signature_text(&self) -> String {
        let params = self.signature.parameter_types.join(", ");
        if self.signature.return_type.is_empty() {
            format!("{}({params})", self.qualified_name())
        } else {
            format!(
                "{} {}({params})",
                self.signature.return_type,
                self.qualified_name()
            )
        }
    }
}

/// Stable id: sanitized path, qualified name, start line.
pub fn focal_id(file: &Path, qualified_name: &str, start_line: usize) -> String {
    let sanitize = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect()
    };
    let path = file.to_string_lossy().replace('\\', "/");
    format!(
        "{}__{}_L{start_line}",
        sanitize(&path),
        sanitize(qualified_name)
    )
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FocalEnumeration {
    pub methods: Vec<FocalMethod>,
    /// Files skipped because they could not be read or parsed.
    pub diagnostics: Vec<ScanWarning>,
}

pub fn enumerate_focal_methods(project: &Project, filters: &FocalFilters) -> FocalEnumeration {
    let excludes: Vec<Pattern> = filters
        .exclude_names
        .iter()
        .filter_map(|g| Pattern::new(g).ok())
        .collect();
    let mut out = FocalEnumeration::default();
    for rel in &project.index.source_files {
        if project.index.is_in_test_dir(rel) {
            continue;
        }
        let parsed = match project.file(rel) {
            Ok(p) => p,
            Err(e) => {
                out.diagnostics.push(ScanWarning {
                    path: rel.clone(),
                    message: format!("unreadable: {e}"),
                });
                continue;
            }
        };
        let outline = match &parsed.outline {
            Ok(o) => o,
            Err(e) => {
                out.diagnostics.push(ScanWarning {
                    path: rel.clone(),
                    message: format!("unparsable: {e}"),
                });
                continue;
            }
        };
        let mut methods: Vec<FocalMethod> = outline
            .functions
            .iter()
            .filter(|f| passes(f, filters, &excludes))
            .map(|f| to_focal(rel, &parsed.text, f))
            .collect();
        methods.sort_by_key(|m| (m.line_span.start, m.byte_start));
        out.methods.extend(methods);
    }
    out
}

fn passes(f: &FunctionItem, filters: &FocalFilters, excludes: &[Pattern]) -> bool {
    if f.span.line_count() < filters.min_body_lines {
        return false;
    }
    if !filters.include_special_members && f.kind.is_special() {
        return false;
    }
    if !filters.include_non_public && matches!(f.access, Some(Access::Private | Access::Protected))
    {
        return false;
    }
    let qualified = match &f.class_name {
        Some(c) => format!("{c}::{}", f.name),
        None => f.name.clone(),
    };
    !excludes
        .iter()
        .any(|p| p.matches(&f.name) || p.matches(&qualified))
}

fn to_focal(rel: &Path, text: &str, f: &FunctionItem) -> FocalMethod {
    let class_name = f.class_name.clone().unwrap_or_default();
    let qualified = if class_name.is_empty() {
        f.name.clone()
    } else {
        format!("{class_name}::{}", f.name)
    };
    let body = f.span.slice(text).to_string();
    FocalMethod {
        id: focal_id(rel, &qualified, f.span.start_line),
        name: f.name.clone(),
        class_name,
        signature: Signature {
            return_type: f.return_type.clone(),
            parameter_types: f.param_types.clone(),
        },
        file: rel.to_path_buf(),
        line_span: LineSpan {
            start: f.span.start_line,
            end: f.span.end_line,
        },
        cyclomatic_complexity: cyclomatic_complexity(&body),
        body,
        kind: f.kind,
        byte_start: f.span.start_byte,
    }
}

/// JSON emitted by `--dump-focal`: the list of focal methods.
pub fn dump_focal_json(methods: &[FocalMethod]) -> String {
    serde_json::to_string_pretty(methods).expect("focal methods serialize")
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

    fn filters(min: usize) -> FocalFilters {
        FocalFilters {
            min_body_lines: min,
            ..FocalFilters::default()
        }
    }

    const THREE: &str = "int a() { return 1; }\n\nint b(int x) {\n  return x;\n}\n\nstruct S { void c(); };\nvoid S::c() {\n}\n";

    #[test]
    fn three_definitions_in_line_order() {
        let (_d, p) = project(&[("src/three.cpp", THREE)]);
        let e = enumerate_focal_methods(&p, &filters(1));
        let names: Vec<_> = e.methods.iter().map(|m| m.qualified_name()).collect();
        assert_eq!(names, ["a", "b", "S::c"]);
        assert_eq!(e.methods[1].line_span, LineSpan { start: 3, end: 5 });
        assert_eq!(e.methods[1].id, "src_three_cpp__b_L3");
    }

    #[test]
    fn min_body_lines_default_drops_one_liners() {
        let (_d, p) = project(&[("three.cpp", THREE)]);
        let e = enumerate_focal_methods(&p, &FocalFilters::default());
        let names: Vec<_> = e.methods.iter().map(|m| m.name.as_str()).collect();
        assert_eq!(names, ["b", "c"]);
    }

    #[test]
    fn declarations_only_yield_nothing() {
        let (_d, p) = project(&[("decl.cpp", "int a();\nstruct S { void c(); };\n")]);
        assert!(enumerate_focal_methods(&p, &filters(1)).methods.is_empty());
    }

    #[test]
    fn test_dir_is_excluded() {
        let (_d, p) = project(&[
            ("src/a.cpp", "int a() {\n return 1;\n}\n"),
            ("test/t.cpp", "int t() {\n return 1;\n}\n"),
        ]);
        let e = enumerate_focal_methods(&p, &filters(1));
        assert_eq!(e.methods.len(), 1);
        assert_eq!(e.methods[0].name, "a");
    }

    #[test]
    fn body_is_byte_exact_slice_of_line_span() {
        let (d, p) = project(&[("three.cpp", THREE)]);
        let text = fs::read_to_string(d.path().join("three.cpp")).unwrap();
        let lines: Vec<&str> = text.split_inclusive('\n').collect();
        for m in enumerate_focal_methods(&p, &filters(1)).methods {
            let window: String = lines[m.line_span.start - 1..m.line_span.end].concat();
            assert!(window.contains(&m.body));
            assert_eq!(&text[m.byte_start..m.byte_start + m.body.len()], m.body);
        }
    }

    #[test]
    fn filters_special_members_and_names() {
        let src = "struct S {\n  S() {\n  }\n  void keep() {\n  }\n  void skip_me() {\n  }\nprivate:\n  void hidden() {\n  }\n};\n";
        let (_d, p) = project(&[("s.cpp", src)]);
        let all = enumerate_focal_methods(&p, &filters(1));
        assert_eq!(all.methods.len(), 4);
        let f = FocalFilters {
            min_body_lines: 1,
            exclude_names: vec!["skip_*".into()],
            include_special_members: false,
            include_non_public: false,
        };
        let names: Vec<_> = enumerate_focal_methods(&p, &f)
            .methods
            .into_iter()
            .map(|m| m.name)
            .collect();
        assert_eq!(names, ["keep"]);
    }

    #[test]
    fn unparsable_file_is_skipped_with_diagnostic() {
        let (_d, p) = project(&[
            ("bad.cpp", "@@@ ))) ((( ### $$$\n"),
            ("good.cpp", "int g() {\n return 0;\n}\n"),
        ]);
        let e = enumerate_focal_methods(&p, &filters(1));
        assert_eq!(e.methods.len(), 1);
        assert_eq!(e.diagnostics.len(), 1);
        assert_eq!(e.diagnostics[0].path, PathBuf::from("bad.cpp"));
    }

    #[test]
    fn dump_has_exactly_the_declared_fields() {
        let (_d, p) = project(&[("three.cpp", THREE)]);
        let e = enumerate_focal_methods(&p, &filters(1));
        let v: serde_json::Value = serde_json::from_str(&dump_focal_json(&e.methods)).unwrap();
        let obj = v[0].as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "body",
                "class_name",
                "cyclomatic_complexity",
                "file",
                "id",
                "line_span",
                "name",
                "signature"
            ]
        );
    }
}
