//! Tree-sitter implementation of [`SyntaxBackend`].

use tree_sitter::{Node, Parser, Tree};

use super::syntax::*;
use crate::lex;

#[derive(Debug, Default, Clone, Copy)]
pub struct TreeSitterBackend;

impl TreeSitterBackend {
    pub fn new() -> Self {
        Self
    }

    fn parse(&self, source: &str) -> Result<Tree, SyntaxError> {
        let mut parser = Parser::new();
        parser
            .set_language(&tree_sitter_cpp::LANGUAGE.into())
            .expect("tree-sitter-cpp grammar is ABI compatible");
        parser.parse(source, None).ok_or(SyntaxError::NoTree)
    }
}

impl SyntaxBackend for TreeSitterBackend {
    fn name(&self) -> &'static str {
        "tree-sitter-cpp"
    }

    fn outline(&self, source: &str) -> Result<SourceOutline, SyntaxError> {
        let tree = self.parse(source)?;
        let root = tree.root_node();
        let mut w = OutlineWalker {
            src: source,
            out: SourceOutline::default(),
            namespaces: Vec::new(),
            raw_comments: Vec::new(),
        };
        w.visit_scope(root, &Scope::default());
        w.out.error_regions = count_errors(root);
        w.finish_comments();
        let out = w.out;
        if root.has_error()
            && out.functions.is_empty()
            && out.declarations.is_empty()
            && out.includes.is_empty()
            && !source.trim().is_empty()
        {
            return Err(SyntaxError::Unrecoverable {
                error_nodes: out.error_regions,
            });
        }
        Ok(out)
    }

    fn invocations(&self, definition: &str) -> Result<Vec<Invocation>, SyntaxError> {
        let tree = self.parse(definition)?;
        let Some(func) = find_kind(tree.root_node(), "function_definition") else {
            return Ok(Vec::new());
        };
        let Some(body) = func.child_by_field_name("body") else {
            return Ok(Vec::new());
        };
        let mut h = Harvest {
            src: definition,
            seen: Vec::new(),
        };
        h.walk(body);
        Ok(h.seen)
    }
}

#[derive(Clone, Default)]
struct Scope {
    class: Option<String>,
    class_idx: Option<usize>,
    access: Option<Access>,
}

struct OutlineWalker<'a> {
    src: &'a str,
    out: SourceOutline,
    namespaces: Vec<String>,
    raw_comments: Vec<Span>,
}

impl<'a> OutlineWalker<'a> {
    fn text(&self, n: Node) -> &'a str {
        &self.src[n.byte_range()]
    }

    fn visit_scope(&mut self, node: Node, scope: &Scope) {
        let mut scope = scope.clone();
        let mut cursor = node.walk();
        let children: Vec<Node> = node.named_children(&mut cursor).collect();
        for child in children {
            if child.kind() == "access_specifier" {
                scope.access = match self.text(child).trim() {
                    "public" => Some(Access::Public),
                    "protected" => Some(Access::Protected),
                    "private" => Some(Access::Private),
                    _ => scope.access,
                };
                continue;
            }
            self.visit_item(child, &scope);
        }
    }

    fn visit_item(&mut self, node: Node, scope: &Scope) {
        match node.kind() {
            "preproc_ifdef"
            | "preproc_if"
            | "preproc_else"
            | "preproc_elif"
            | "preproc_elifdef"
            | "declaration_list"
            | "template_declaration" => self.visit_scope(node, scope),
            "linkage_specification" => {
                if let Some(body) = node.child_by_field_name("body") {
                    if body.kind() == "declaration_list" {
                        self.visit_scope(body, scope);
                    } else {
                        self.visit_item(body, scope);
                    }
                }
            }
            "preproc_include" => self.include(node),
            "namespace_definition" => {
                let name = node
                    .child_by_field_name("name")
                    .map(|n| self.text(n).to_string())
                    .unwrap_or_default();
                self.out.namespaces.push(NamespaceDecl {
                    name: name.clone(),
                    line: node.start_position().row + 1,
                });
                self.namespaces.push(name);
                if let Some(body) = node.child_by_field_name("body") {
                    self.visit_scope(body, &Scope::default());
                }
                self.namespaces.pop();
            }
            "using_declaration" => {
                let t = lex::code_tokens(self.text(node));
                let words: Vec<&str> = t.iter().map(|t| t.text(self.text(node))).collect();
                if words.len() >= 3 && words[0] == "using" && words[1] == "namespace" {
                    let name: String = words[2..]
                        .iter()
                        .take_while(|w| **w != ";")
                        .copied()
                        .collect();
                    self.out.using_namespaces.push(name);
                }
            }
            "function_definition" => self.function(node, scope),
            "class_specifier" | "struct_specifier" | "union_specifier" => {
                self.class(node, node, scope)
            }
            "enum_specifier" => self.enumeration(node, node, scope),
            "declaration" | "field_declaration" => self.declaration(node, scope),
            "alias_declaration" => {
                if let Some(name) = node.child_by_field_name("name") {
                    self.push_decl(self.text(name), DeclKind::Alias, scope, Vec::new(), node);
                }
            }
            "type_definition" => {
                if let Some(ty) = node.child_by_field_name("type") {
                    self.visit_type_specifier(ty, node, scope);
                }
                let mut c = node.walk();
                let decls: Vec<Node> = node.children_by_field_name("declarator", &mut c).collect();
                for d in decls {
                    if let Some(id) = innermost_identifier(d) {
                        self.push_decl(self.text(id), DeclKind::Alias, scope, Vec::new(), node);
                    }
                }
            }
            "comment" => self.raw_comments.push(span_of(node)),
            _ => {}
        }
    }

    fn include(&mut self, node: Node) {
        let Some(path) = node.child_by_field_name("path") else {
            return;
        };
        let raw = self.text(path).trim();
        let angled = path.kind() == "system_lib_string";
        let inner = raw
            .trim_start_matches(['<', '"'])
            .trim_end_matches(['>', '"'])
            .to_string();
        self.out.includes.push(IncludeDirective {
            path: inner,
            angled,
            line: node.start_position().row + 1,
        });
    }

    fn function(&mut self, node: Node, scope: &Scope) {
        let Some(body) = node.child_by_field_name("body") else {
            return;
        };
        let Some(decl) = node.child_by_field_name("declarator") else {
            return;
        };
        let Some(fdecl) = find_function_declarator(decl) else {
            return;
        };
        let Some(name_node) = fdecl.child_by_field_name("declarator") else {
            return;
        };
        let (qual_scope, name) = split_qualified(self.src, name_node);
        let class_name = match qual_scope.last() {
            Some(s) if !self.is_namespace(s) => Some(s.clone()),
            Some(_) => None,
            None => scope.class.clone(),
        };
        let kind = function_kind(&name, class_name.as_deref());
        let return_type = return_type_text(self.src, node, name_node);
        let param_types = fdecl
            .child_by_field_name("parameters")
            .map(|p| param_types(self.src, p))
            .unwrap_or_default();
        let span = span_of(node);
        let item = FunctionItem {
            name: name.clone(),
            class_name: class_name.clone(),
            return_type,
            param_types: param_types.clone(),
            kind,
            access: if scope.class.is_some() {
                scope.access
            } else {
                None
            },
            span,
            body_span: span_of(body),
        };
        if scope.class.is_some() {
            let text = item.signature_text(self.src);
            if let Some(idx) = scope.class_idx {
                self.out.classes[idx].methods.push(MethodSig {
                    name: name.clone(),
                    param_types: param_types.clone(),
                    text,
                });
            }
        }
        self.out.declarations.push(DeclItem {
            name,
            kind: DeclKind::Function,
            owner_class: class_name,
            param_types,
            span,
        });
        self.out.functions.push(item);
    }

    fn is_namespace(&self, s: &str) -> bool {
        self.namespaces.iter().any(|n| n == s)
            || self.out.namespaces.iter().any(|n| n.name == s)
            || s == "std"
    }

    fn class(&mut self, spec: Node, outer: Node, scope: &Scope) {
        let Some(body) = spec.child_by_field_name("body") else {
            return;
        };
        let name = spec
            .child_by_field_name("name")
            .map(|n| strip_template_args(self.text(n)))
            .unwrap_or_default();
        let span = span_of(outer);
        if !name.is_empty() {
            self.push_decl(&name, DeclKind::Class, scope, Vec::new(), outer);
        }
        self.out.classes.push(ClassItem {
            name: name.clone(),
            span,
            fields: Vec::new(),
            methods: Vec::new(),
        });
        let inner = Scope {
            class: Some(name),
            class_idx: Some(self.out.classes.len() - 1),
            access: Some(if spec.kind() == "class_specifier" {
                Access::Private
            } else {
                Access::Public
            }),
        };
        self.visit_scope(body, &inner);
    }

    fn enumeration(&mut self, spec: Node, outer: Node, scope: &Scope) {
        let Some(body) = spec.child_by_field_name("body") else {
            return;
        };
        if let Some(name) = spec.child_by_field_name("name") {
            self.push_decl(self.text(name), DeclKind::Enum, scope, Vec::new(), outer);
        }
        let mut c = body.walk();
        let enumerators: Vec<Node> = body
            .named_children(&mut c)
            .filter(|n| n.kind() == "enumerator")
            .collect();
        for e in enumerators {
            if let Some(name) = e.child_by_field_name("name") {
                self.push_decl(
                    self.text(name),
                    DeclKind::Enumerator,
                    scope,
                    Vec::new(),
                    outer,
                );
            }
        }
    }

    fn visit_type_specifier(&mut self, ty: Node, outer: Node, scope: &Scope) {
        match ty.kind() {
            "class_specifier" | "struct_specifier" | "union_specifier" => {
                self.class(ty, outer, scope)
            }
            "enum_specifier" => self.enumeration(ty, outer, scope),
            _ => {}
        }
    }

    fn declaration(&mut self, node: Node, scope: &Scope) {
        if let Some(ty) = node.child_by_field_name("type") {
            self.visit_type_specifier(ty, node, scope);
        }
        let text = self.text(node);
        let is_const = lex::code_tokens(text)
            .iter()
            .any(|t| matches!(t.text(text), "const" | "constexpr"));
        let mut c = node.walk();
        let declarators: Vec<Node> = node.children_by_field_name("declarator", &mut c).collect();
        let mut is_field = false;
        for d in declarators {
            if let Some(f) = find_function_declarator(d) {
                let Some(name_node) = f.child_by_field_name("declarator") else {
                    continue;
                };
                let (_, name) = split_qualified(self.src, name_node);
                let params = f
                    .child_by_field_name("parameters")
                    .map(|p| param_types(self.src, p))
                    .unwrap_or_default();
                if scope.class.is_some() {
                    let sig = lex_trim_semicolon(text);
                    if let Some(idx) = scope.class_idx {
                        self.out.classes[idx].methods.push(MethodSig {
                            name: name.clone(),
                            param_types: params.clone(),
                            text: sig,
                        });
                    }
                }
                self.push_decl(&name, DeclKind::Function, scope, params, node);
            } else if let Some(id) = innermost_identifier(d) {
                let kind = if is_const {
                    DeclKind::Constant
                } else {
                    DeclKind::Field
                };
                self.push_decl(self.text(id), kind, scope, Vec::new(), node);
                is_field = true;
            }
        }
        if is_field {
            if let Some(idx) = scope.class_idx {
                self.out.classes[idx].fields.push(span_of(node));
            }
        }
    }

    fn push_decl(
        &mut self,
        name: &str,
        kind: DeclKind,
        scope: &Scope,
        param_types: Vec<String>,
        node: Node,
    ) {
        if name.is_empty() {
            return;
        }
        self.out.declarations.push(DeclItem {
            name: name.to_string(),
            kind,
            owner_class: scope.class.clone(),
            param_types,
            span: span_of(node),
        });
    }

    fn finish_comments(&mut self) {
        let mut standalone: Vec<Span> = self
            .raw_comments
            .iter()
            .copied()
            .filter(|s| {
                let line_start = self.src[..s.start_byte].rfind('\n').map_or(0, |i| i + 1);
                self.src[line_start..s.start_byte].trim().is_empty()
            })
            .collect();
        standalone.sort_by_key(|s| s.start_byte);
        let mut merged: Vec<Span> = Vec::new();
        for s in standalone {
            if let Some(last) = merged.last_mut() {
                let is_line = |sp: &Span| sp.slice(self.src).starts_with("//");
                let gap = &self.src[last.end_byte..s.start_byte];
                if is_line(last)
                    && is_line(&s)
                    && s.start_line == last.end_line + 1
                    && gap.trim().is_empty()
                {
                    last.end_byte = s.end_byte;
                    last.end_line = s.end_line;
                    continue;
                }
            }
            merged.push(s);
        }
        self.out.comments = merged;
    }
}

fn lex_trim_semicolon(text: &str) -> String {
    collapse_ws(text.trim().trim_end_matches(';').trim_end())
}

fn span_of(n: Node) -> Span {
    // tree-sitter includes the trailing newline in some preprocessor nodes
    Span {
        start_byte: n.start_byte(),
        end_byte: n.end_byte(),
        start_line: n.start_position().row + 1,
        end_line: if n.end_position().column == 0 && n.end_position().row > n.start_position().row {
            n.end_position().row
        } else {
            n.end_position().row + 1
        },
    }
}

fn count_errors(n: Node) -> usize {
    let own = usize::from(n.is_error() || n.is_missing());
    if !n.has_error() {
        return own;
    }
    let mut c = n.walk();
    own + n.children(&mut c).map(count_errors).sum::<usize>()
}

fn find_kind<'t>(n: Node<'t>, kind: &str) -> Option<Node<'t>> {
    if n.kind() == kind {
        return Some(n);
    }
    let mut c = n.walk();
    let children: Vec<Node<'t>> = n.named_children(&mut c).collect();
    children.into_iter().find_map(|ch| find_kind(ch, kind))
}

/// Descends through pointer/reference/parenthesized declarators.
fn find_function_declarator(n: Node) -> Option<Node> {
    match n.kind() {
        "function_declarator" => Some(n),
        "pointer_declarator"
        | "reference_declarator"
        | "parenthesized_declarator"
        | "init_declarator" => {
            let inner = n.child_by_field_name("declarator").or_else(|| {
                let mut c = n.walk();
                let found = n.named_children(&mut c).last();
                found
            })?;
            find_function_declarator(inner)
        }
        _ => None,
    }
}

fn innermost_identifier(n: Node) -> Option<Node> {
    match n.kind() {
        "identifier" | "field_identifier" | "type_identifier" => Some(n),
        "function_declarator" => None,
        _ => {
            if let Some(d) = n.child_by_field_name("declarator") {
                return innermost_identifier(d);
            }
            let mut c = n.walk();
            let children: Vec<Node> = n.named_children(&mut c).collect();
            children.into_iter().find_map(|ch| match ch.kind() {
                "identifier" | "field_identifier" => Some(ch),
                "pointer_declarator" | "reference_declarator" | "array_declarator" => {
                    innermost_identifier(ch)
                }
                _ => None,
            })
        }
    }
}

/// Splits a (possibly qualified) declarator name into scope components and
/// the final name. Template arguments are stripped from scopes.
fn split_qualified(src: &str, n: Node) -> (Vec<String>, String) {
    let mut scopes = Vec::new();
    let mut cur = n;
    while cur.kind() == "qualified_identifier" {
        if let Some(s) = cur.child_by_field_name("scope") {
            scopes.push(strip_template_args(&src[s.byte_range()]));
        }
        match cur.child_by_field_name("name") {
            Some(next) => cur = next,
            None => break,
        }
    }
    let name = match cur.kind() {
        "template_function" | "template_method" => cur
            .child_by_field_name("name")
            .map(|n| src[n.byte_range()].to_string())
            .unwrap_or_else(|| strip_template_args(&src[cur.byte_range()])),
        _ => collapse_ws(&src[cur.byte_range()]),
    };
    (scopes, name)
}

fn strip_template_args(s: &str) -> String {
    let mut depth = 0usize;
    let mut out = String::new();
    for ch in s.chars() {
        match ch {
            '<' => depth += 1,
            '>' => depth = depth.saturating_sub(1),
            _ if depth == 0 => out.push(ch),
            _ => {}
        }
    }
    out.trim().to_string()
}

fn function_kind(name: &str, class: Option<&str>) -> FunctionKind {
    if name.starts_with('~') {
        FunctionKind::Destructor
    } else if name.starts_with("operator")
        && name[8..]
            .chars()
            .next()
            .is_none_or(|c| !(c.is_alphanumeric() || c == '_') || name[8..].starts_with(' '))
    {
        FunctionKind::Operator
    } else if class == Some(name) {
        FunctionKind::Constructor
    } else if class.is_some() {
        FunctionKind::Method
    } else {
        FunctionKind::Free
    }
}

const SPECIFIERS: &[&str] = &[
    "static",
    "inline",
    "virtual",
    "explicit",
    "constexpr",
    "consteval",
    "friend",
    "extern",
];

fn return_type_text(src: &str, def: Node, name_node: Node) -> String {
    // the qualified name node starts at its scope, so the prefix ends before it
    let prefix = &src[def.start_byte()..name_node.start_byte()];
    let toks = lex::code_tokens(prefix);
    let mut kept = String::new();
    let mut i = 0;
    while i < toks.len() {
        let t = toks[i].text(prefix);
        if SPECIFIERS.contains(&t) {
            i += 1;
            continue;
        }
        if t == "[" && toks.get(i + 1).map(|t| t.text(prefix)) == Some("[") {
            // attribute [[...]]
            while i < toks.len()
                && !(toks[i].text(prefix) == "]"
                    && toks.get(i + 1).map(|t| t.text(prefix)) == Some("]"))
            {
                i += 1;
            }
            i += 2;
            continue;
        }
        kept.push_str(t);
        kept.push(' ');
        i += 1;
    }
    normalize_type(&kept)
}

fn param_types(src: &str, params: Node) -> Vec<String> {
    let mut c = params.walk();
    let mut out = Vec::new();
    for p in params.named_children(&mut c) {
        match p.kind() {
            "parameter_declaration" | "optional_parameter_declaration" => {
                let end = p
                    .child_by_field_name("default_value")
                    .map_or(p.end_byte(), |d| d.start_byte());
                let mut text = src[p.start_byte()..end].to_string();
                if p.kind() == "optional_parameter_declaration" {
                    text = text.trim_end().trim_end_matches('=').to_string();
                }
                if let Some(id) = p
                    .child_by_field_name("declarator")
                    .and_then(innermost_identifier)
                {
                    let (s, e) = (
                        id.start_byte() - p.start_byte(),
                        id.end_byte() - p.start_byte(),
                    );
                    if e <= text.len() {
                        text.replace_range(s..e, " ");
                    }
                }
                let t = normalize_type(&text);
                if t != "void" || params.named_child_count() > 1 {
                    out.push(t);
                }
            }
            "variadic_parameter_declaration" | "variadic_parameter" => {
                out.push(normalize_type(&src[p.byte_range()]))
            }
            "comment" => {}
            _ => out.push(normalize_type(&src[p.byte_range()])),
        }
    }
    if out.is_empty() && collapse_ws(&src[params.byte_range()]).contains("...") {
        out.push("...".into());
    }
    out
}

struct Harvest<'a> {
    src: &'a str,
    seen: Vec<Invocation>,
}

impl Harvest<'_> {
    fn push(&mut self, name: &str, kind: InvocationKind) {
        let name = strip_template_args(name);
        if name.is_empty() || self.seen.iter().any(|i| i.name == name) {
            return;
        }
        self.seen.push(Invocation { name, kind });
    }

    fn qualified(&mut self, n: Node, leaf_kind: InvocationKind) {
        let (scopes, name) = split_qualified(self.src, n);
        if scopes.first().is_some_and(|s| s == "std" || s.is_empty()) {
            return;
        }
        for s in &scopes {
            self.push(s, InvocationKind::StaticAccess);
        }
        self.push(&name, leaf_kind);
    }

    fn type_name(&mut self, ty: Node) {
        match ty.kind() {
            "type_identifier" => {
                self.push(&self.src[ty.byte_range()], InvocationKind::Construction)
            }
            "template_type" => {
                if let Some(n) = ty.child_by_field_name("name") {
                    self.push(&self.src[n.byte_range()], InvocationKind::Construction);
                }
            }
            "qualified_identifier" => self.qualified(ty, InvocationKind::Construction),
            _ => {}
        }
    }

    fn walk(&mut self, n: Node) {
        match n.kind() {
            "call_expression" => {
                if let Some(f) = n.child_by_field_name("function") {
                    match f.kind() {
                        "identifier" => self.push(&self.src[f.byte_range()], InvocationKind::Call),
                        "field_expression" => {
                            if let Some(field) = f.child_by_field_name("field") {
                                let (_, name) = split_qualified(self.src, field);
                                self.push(&name, InvocationKind::MemberCall);
                            }
                            if let Some(arg) = f.child_by_field_name("argument") {
                                self.walk(arg);
                            }
                        }
                        "qualified_identifier" => self.qualified(f, InvocationKind::Call),
                        "template_function" => {
                            if let Some(name) = f.child_by_field_name("name") {
                                self.push(&self.src[name.byte_range()], InvocationKind::Call);
                            }
                        }
                        _ => self.walk(f),
                    }
                }
                if let Some(args) = n.child_by_field_name("arguments") {
                    self.walk(args);
                }
                return;
            }
            "new_expression" | "compound_literal_expression" => {
                if let Some(ty) = n.child_by_field_name("type") {
                    self.type_name(ty);
                }
            }
            "declaration" => {
                if let Some(ty) = n.child_by_field_name("type") {
                    self.type_name(ty);
                }
            }
            "qualified_identifier" => {
                self.qualified(n, InvocationKind::StaticAccess);
                return;
            }
            _ => {}
        }
        let mut c = n.walk();
        let children: Vec<Node> = n.named_children(&mut c).collect();
        for ch in children {
            if n.kind() == "declaration" && n.child_by_field_name("type") == Some(ch) {
                continue;
            }
            self.walk(ch);
        }
    }
}
