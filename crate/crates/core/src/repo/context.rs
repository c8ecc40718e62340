use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::focal::FocalMethod;
use super::std_headers::is_standard_header;
use super::syntax::{collapse_ws, normalize_type, SourceOutline, SyntaxError};
use super::Project;

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} is no longer parseable: {source}")]
    Parse { path: PathBuf, source: SyntaxError },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredFocalContext {
    pub focal: FocalMethod,
    /// `#include <...>` directives naming standard headers.
    pub std_imports: Vec<String>,
    /// Any other `#include <...>` directive.
    pub third_party_imports: Vec<String>,
    /// `#include "..."` directives.
    pub user_imports: Vec<String>,
    pub namespaces: Vec<String>,
    pub sibling_signatures: Vec<String>,
    pub class_fields: Vec<String>,
}

impl StructuredFocalContext {
    /// Every import, in std, third-party, user order.
    pub fn all_imports(&self) -> impl Iterator<Item = &String> {
        self.std_imports
            .iter()
            .chain(&self.third_party_imports)
            .chain(&self.user_imports)
    }

    /// Text block used inside prompts. The focal body appears once, last.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let section = |out: &mut String, title: &str, items: &[String]| {
            if items.is_empty() {
                return;
            }
            let _ = writeln!(out, "// {title}");
            for i in items {
                let _ = writeln!(out, "{i}");
            }
        };
        let _ = writeln!(out, "// File: {}", self.focal.file.display());
        section(&mut out, "Standard library imports", &self.std_imports);
        section(&mut out, "Third-party imports", &self.third_party_imports);
        section(&mut out, "User-defined imports", &self.user_imports);
        section(&mut out, "Namespaces", &self.namespaces);
        if !self.focal.class_name.is_empty() {
            let _ = writeln!(out, "// Focal class: {}", self.focal.class_name);
        }
        section(&mut out, "Class fields", &self.class_fields);
        section(
            &mut out,
            "Other methods in the focal class",
            &self.sibling_signatures,
        );
        let _ = writeln!(out, "// Focal method");
        out.push_str(&self.focal.body);
        if !self.focal.body.ends_with('\n') {
            out.push('\n');
        }
        out
    }
}

pub fn extract_focal_context(
    m: &FocalMethod,
    project: &Project,
) -> Result<StructuredFocalContext, ContextError> {
    let focal_file = project.file(&m.file).map_err(|source| ContextError::Io {
        path: m.file.clone(),
        source,
    })?;
    let outline = focal_file
        .outline
        .as_ref()
        .map_err(|e| ContextError::Parse {
            path: m.file.clone(),
            source: e.clone(),
        })?;

    let mut ctx = StructuredFocalContext {
        focal: m.clone(),
        std_imports: Vec::new(),
        third_party_imports: Vec::new(),
        user_imports: Vec::new(),
        namespaces: Vec::new(),
        sibling_signatures: Vec::new(),
        class_fields: Vec::new(),
    };
    for inc in &outline.includes {
        let bucket = if !inc.angled {
            &mut ctx.user_imports
        } else if is_standard_header(&inc.path) {
            &mut ctx.std_imports
        } else {
            &mut ctx.third_party_imports
        };
        bucket.push(inc.directive());
    }

    // the paired header contributes namespaces, siblings and fields only
    let header = project
        .index
        .paired_header(&m.file)
        .and_then(|h| project.file(&h).ok())
        .filter(|h| h.outline.is_ok());
    let mut sources: Vec<(&str, &SourceOutline)> = vec![(&focal_file.text, outline)];
    if let Some(h) = &header {
        if let Ok(o) = &h.outline {
            sources.push((&h.text, o));
        }
    }

    let mut seen_ns = HashSet::new();
    for (_, o) in &sources {
        for ns in &o.namespaces {
            let text = if ns.name.is_empty() {
                "namespace {}".to_string()
            } else {
                format!("namespace {}", ns.name)
            };
            if seen_ns.insert(text.clone()) {
                ctx.namespaces.push(text);
            }
        }
        for u in &o.using_namespaces {
            let text = format!("using namespace {u};");
            if seen_ns.insert(text.clone()) {
                ctx.namespaces.push(text);
            }
        }
    }

    if m.class_name.is_empty() {
        return Ok(ctx);
    }

    let focal_key = method_key(&m.name, &m.signature.parameter_types);
    let mut seen_sig = HashSet::from([focal_key]);
    // definitions in the focal file first, then declarations in either file
    for f in &outline.functions {
        if f.class_name.as_deref() != Some(m.class_name.as_str())
            || f.span.start_byte == m.byte_start
        {
            continue;
        }
        if seen_sig.insert(method_key(&f.name, &f.param_types)) {
            ctx.sibling_signatures
                .push(f.signature_text(&focal_file.text));
        }
    }
    let mut seen_fields = HashSet::new();
    for (text, o) in &sources {
        for class in o.classes.iter().filter(|c| c.name == m.class_name) {
            for sig in &class.methods {
                if seen_sig.insert(method_key(&sig.name, &sig.param_types)) {
                    ctx.sibling_signatures.push(sig.text.clone());
                }
            }
            for field in &class.fields {
                let t = collapse_ws(field.slice(text));
                if seen_fields.insert(t.clone()) {
                    ctx.class_fields.push(t);
                }
            }
        }
    }
    Ok(ctx)
}

fn method_key(name: &str, params: &[String]) -> (String, Vec<String>) {
    (
        name.to_string(),
        params.iter().map(|p| normalize_type(p)).collect(),
    )
}
