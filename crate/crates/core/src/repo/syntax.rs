//! Syntax backend interface.
//!
//! A backend turns one C++ source text into a [`SourceOutline`]: the
//! declarations, definitions, includes and comments the rest of the crate
//! works with, each carrying an exact byte span into the parsed text.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("parser produced no tree")]
    NoTree,
    #[error("no recoverable structure ({error_nodes} syntax error regions)")]
    Unrecoverable { error_nodes: usize },
}

/// Byte range plus 1-based inclusive line range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start_byte: usize,
    pub end_byte: usize,
    pub start_line: usize,
    pub end_line: usize,
}

impl Span {
    pub fn slice<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start_byte..self.end_byte]
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start_byte <= other.start_byte && other.end_byte <= self.end_byte
    }

    pub fn line_count(&self) -> usize {
        self.end_line - self.start_line + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncludeDirective {
    /// Path between the delimiters, e.g. `gtest/gtest.h`.
    pub path: String,
    /// `<...>` form.
    pub angled: bool,
    pub line: usize,
}

impl IncludeDirective {
    /// Canonical directive text, e.g. `#include "node.h"`.
    pub fn directive(&self) -> String {
        if self.angled {
            format!("#include <{}>", self.path)
        } else {
            format!("#include \"{}\"", self.path)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamespaceDecl {
    /// Fully written name (`a::b` for nested definitions); empty when anonymous.
    pub name: String,
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    Free,
    Method,
    Constructor,
    Destructor,
    Operator,
}

impl FunctionKind {
    pub fn is_special(self) -> bool {
        matches!(self, Self::Constructor | Self::Destructor | Self::Operator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Access {
    Public,
    Protected,
    Private,
}

/// A function or method definition (has a body).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionItem {
    pub name: String,
    /// Enclosing or qualifying class, template arguments stripped.
    pub class_name: Option<String>,
    pub return_type: String,
    pub param_types: Vec<String>,
    pub kind: FunctionKind,
    /// Access specifier in effect, for definitions inside a class body.
    pub access: Option<Access>,
    pub span: Span,
    pub body_span: Span,
}

impl FunctionItem {
    /// Declaration-like text: everything before the body, whitespace collapsed.
    pub fn signature_text(&self, src: &str) -> String {
        collapse_ws(&src[self.span.start_byte..self.body_span.start_byte])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclKind {
    Function,
    Class,
    Enum,
    Enumerator,
    Constant,
    Alias,
    Field,
}

/// A named declaration usable as a cross-file dependency target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclItem {
    pub name: String,
    pub kind: DeclKind,
    pub owner_class: Option<String>,
    pub param_types: Vec<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassItem {
    pub name: String,
    pub span: Span,
    /// Data member declarations.
    pub fields: Vec<Span>,
    /// Member function declarations and inline definitions (signature part).
    pub methods: Vec<MethodSig>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSig {
    pub name: String,
    pub param_types: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceOutline {
    pub includes: Vec<IncludeDirective>,
    pub namespaces: Vec<NamespaceDecl>,
    /// `using namespace X;` directive names.
    pub using_namespaces: Vec<String>,
    pub functions: Vec<FunctionItem>,
    pub declarations: Vec<DeclItem>,
    pub classes: Vec<ClassItem>,
    /// Comment blocks outside function bodies; adjacent line comments merged.
    pub comments: Vec<Span>,
    pub error_regions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvocationKind {
    Call,
    MemberCall,
    Construction,
    StaticAccess,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invocation {
    pub name: String,
    pub kind: InvocationKind,
}

pub trait SyntaxBackend: Send + Sync {
    fn name(&self) -> &'static str;

    fn outline(&self, source: &str) -> Result<SourceOutline, SyntaxError>;

    /// Identifiers invoked or instantiated inside the body of the first
    /// function definition found in `definition`, in first-seen order,
    /// deduplicated. Names qualified by `std::` are omitted.
    fn invocations(&self, definition: &str) -> Result<Vec<Invocation>, SyntaxError>;
}

pub fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalized form used to compare parameter type lists across a declaration
/// and its definition (`const Node &` and `const Node&` are equal).
pub fn normalize_type(t: &str) -> String {
    let mut out = String::new();
    for tok in crate::lex::code_tokens(t) {
        let text = tok.text(t);
        let word = |c: char| c.is_alphanumeric() || c == '_';
        let needs_space = out
            .chars()
            .last()
            .is_some_and(|c| word(c) || c == '*' || c == '&')
            && text.chars().next().is_some_and(word)
            && !out.is_empty();
        if needs_space {
            out.push(' ');
        }
        out.push_str(text);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_type_ignores_spacing() {
        assert_eq!(normalize_type("const Node &"), "const Node&");
        assert_eq!(normalize_type("const  Node&"), "const Node&");
        assert_eq!(normalize_type("std::vector< int >"), "std::vector<int>");
        assert_eq!(normalize_type("unsigned   long"), "unsigned long");
        assert_eq!(normalize_type("const char *const"), "const char* const");
    }

    #[test]
    fn include_directive_text() {
        let inc = IncludeDirective {
            path: "node.h".into(),
            angled: false,
            line: 1,
        };
        assert_eq!(inc.directive(), "#include \"node.h\"");
    }
}
