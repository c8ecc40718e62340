use std::cmp::Ordering;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::code::{ChunkKind, CodeChunk};
use super::docs::DocChunk;
use super::embed::{embed_query, EmbedError, EmbeddingProvider};
use crate::lex::{self, TokenKind};
use crate::repo::FocalMethod;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub chunk_id: usize,
    pub score: f64,
    pub snippet: String,
}

pub fn build_query_statement(focal: &FocalMethod) -> String {
    if focal.class_name.is_empty() {
        format!(
            "What is the functionality and intended behavior of method {}?",
            focal.name
        )
    } else {
        format!(
            "What is the functionality and intended behavior of method {} in class {}?",
            focal.name, focal.class_name
        )
    }
}

/// Exhaustive cosine scan over unit vectors; top `k`, ties by ascending id.
pub fn rank_docs(query_vec: &[f64], docs: &[DocChunk], k: usize) -> Vec<RetrievalResult> {
    let mut scored: Vec<(f64, &DocChunk)> = docs
        .iter()
        .map(|d| {
            let dot: f64 = d.vector.iter().zip(query_vec).map(|(a, b)| a * b).sum();
            (dot.clamp(-1.0, 1.0), d)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.id.cmp(&b.1.id))
    });
    scored
        .into_iter()
        .take(k)
        .map(|(score, d)| RetrievalResult {
            chunk_id: d.id,
            score,
            snippet: d.text.clone(),
        })
        .collect()
}

pub fn retrieve_docs(
    query: &str,
    docs: &[DocChunk],
    provider: &dyn EmbeddingProvider,
    k: usize,
) -> Result<Vec<RetrievalResult>, EmbedError> {
    if docs.is_empty() || k == 0 {
        return Ok(Vec::new());
    }
    let q = embed_query(provider, query)?;
    Ok(rank_docs(&q, docs, k))
}

/// Exact-match code retrieval: a word-boundary call of the focal name whose
/// arity matches and whose literal arguments fit the parameter types.
/// At most `limit` results, in chunk id order.
pub fn retrieve_code_examples(
    focal: &FocalMethod,
    code: &[CodeChunk],
    limit: usize,
) -> Vec<RetrievalResult> {
    let pattern = call_pattern(&focal.name);
    code.iter()
        .filter(|c| !contains_focal(c, focal))
        .filter(|c| {
            call_sites(c, &focal.name, &pattern)
                .iter()
                .any(|args| args_match(args, &focal.signature.parameter_types))
        })
        .take(limit)
        .map(|c| RetrievalResult {
            chunk_id: c.id,
            score: 1.0,
            snippet: c.text.clone(),
        })
        .collect()
}

fn contains_focal(c: &CodeChunk, focal: &FocalMethod) -> bool {
    c.source == focal.file
        && c.span.start_byte <= focal.byte_start
        && focal.byte_start < c.span.end_byte
}

pub fn call_pattern(name: &str) -> Regex {
    Regex::new(&format!(r"\b{}\s*\(", regex::escape(name))).expect("escaped name is a valid regex")
}

/// Argument lists of every call of `name` in the chunk, excluding the
/// chunk's own declarator when it defines a function of the same name.
pub fn call_sites(c: &CodeChunk, name: &str, pattern: &Regex) -> Vec<Vec<String>> {
    let text = &c.text;
    let skip_before = match (c.kind, c.body_offset) {
        (ChunkKind::Method, Some(off)) if c.name == name => off,
        _ => 0,
    };
    pattern
        .find_iter(text)
        .filter(|m| m.start() >= skip_before)
        .filter_map(|m| split_args(&text[m.end()..]))
        .collect()
}

/// Top-level comma split of the text following `(`, up to the matching `)`.
/// `None` when the list is unterminated.
pub fn split_args(after_open: &str) -> Option<Vec<String>> {
    let toks = lex::tokenize(after_open);
    let mut depth = 0usize;
    let mut args = Vec::new();
    let mut start = 0usize;
    for t in toks.iter().filter(|t| !t.is_comment()) {
        let s = t.text(after_open);
        if t.kind != TokenKind::Punct {
            continue;
        }
        match s {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" if depth > 0 => depth -= 1,
            ")" => {
                let last = after_open[start..t.start].trim();
                if !(args.is_empty() && last.is_empty()) {
                    args.push(last.to_string());
                }
                return Some(args);
            }
            "," if depth == 0 => {
                args.push(after_open[start..t.start].trim().to_string());
                start = t.end;
            }
            _ => {}
        }
    }
    None
}

fn args_match(args: &[String], params: &[String]) -> bool {
    args.len() == params.len()
        && args
            .iter()
            .zip(params)
            .all(|(a, p)| !literal_contradicts(a, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiteralCue {
    Integer,
    Floating,
    String,
}

pub fn literal_cue(arg: &str) -> Option<LiteralCue> {
    static INT: OnceLock<Regex> = OnceLock::new();
    static FLOAT: OnceLock<Regex> = OnceLock::new();
    static STR: OnceLock<Regex> = OnceLock::new();
    let int = INT.get_or_init(|| {
        Regex::new(
            r"^[+-]?(0[xX][0-9a-fA-F']+|0[bB][01']+|[0-9][0-9']*)([uU]?[lL]{0,2}|[lL]{1,2}[uU])$",
        )
        .unwrap()
    });
    let float = FLOAT.get_or_init(|| {
        Regex::new(r"^[+-]?([0-9][0-9']*\.[0-9']*([eE][+-]?[0-9]+)?|\.[0-9][0-9']*([eE][+-]?[0-9]+)?|[0-9][0-9']*[eE][+-]?[0-9]+)[fFlL]?$")
            .unwrap()
    });
    let string = STR.get_or_init(|| Regex::new(r#"^(u8|u|U|L)?R?""#).unwrap());
    let a = arg.trim();
    if int.is_match(a) {
        Some(LiteralCue::Integer)
    } else if float.is_match(a) {
        Some(LiteralCue::Floating)
    } else if string.is_match(a) {
        Some(LiteralCue::String)
    } else {
        None
    }
}

fn base_type_words(param: &str) -> Vec<String> {
    lex::code_tokens(param)
        .iter()
        .filter(|t| t.kind == TokenKind::Ident)
        .map(|t| t.text(param).to_string())
        .filter(|w| !matches!(w.as_str(), "const" | "volatile" | "std"))
        .collect()
}

fn is_pointer_or_array(param: &str) -> bool {
    param.contains('*') || param.contains('[')
}

pub fn is_floating_type(param: &str) -> bool {
    if is_pointer_or_array(param) {
        return false;
    }
    let w = base_type_words(param);
    !w.is_empty()
        && w.iter()
            .all(|x| matches!(x.as_str(), "float" | "double" | "long"))
        && w.iter().any(|x| x == "float" || x == "double")
}

pub fn is_arithmetic_type(param: &str) -> bool {
    const ARITHMETIC: &[&str] = &[
        "bool",
        "char",
        "short",
        "int",
        "long",
        "signed",
        "unsigned",
        "size_t",
        "ssize_t",
        "ptrdiff_t",
        "int8_t",
        "int16_t",
        "int32_t",
        "int64_t",
        "uint8_t",
        "uint16_t",
        "uint32_t",
        "uint64_t",
        "intptr_t",
        "uintptr_t",
        "float",
        "double",
        "wchar_t",
        "char16_t",
        "char32_t",
    ];
    if is_pointer_or_array(param) {
        return false;
    }
    let w = base_type_words(param);
    !w.is_empty() && w.iter().all(|x| ARITHMETIC.contains(&x.as_str()))
}

/// Literal cues only: integer literal against a floating parameter, or a
/// string literal against an arithmetic parameter.
pub fn literal_contradicts(arg: &str, param: &str) -> bool {
    match literal_cue(arg) {
        Some(LiteralCue::Integer) => is_floating_type(param),
        Some(LiteralCue::String) => is_arithmetic_type(param),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repo::focal::{LineSpan, Signature};
    use crate::repo::syntax::{FunctionKind, Span};
    use proptest::prelude::*;

    fn focal(name: &str, class: &str, params: &[&str]) -> FocalMethod {
        FocalMethod {
            id: "f".into(),
            name: name.into(),
            class_name: class.into(),
            signature: Signature {
                return_type: "void".into(),
                parameter_types: params.iter().map(|s| s.to_string()).collect(),
            },
            file: "focal.cpp".into(),
            line_span: LineSpan { start: 1, end: 3 },
            body: String::new(),
            cyclomatic_complexity: 1,
            kind: FunctionKind::Free,
            byte_start: 0,
        }
    }

    fn chunk(id: usize, text: &str) -> CodeChunk {
        CodeChunk {
            id,
            source: "other.cpp".into(),
            kind: ChunkKind::Method,
            name: "caller".into(),
            param_types: vec![],
            text: text.into(),
            span: Span {
                start_byte: 0,
                end_byte: text.len(),
                start_line: 1,
                end_line: 1,
            },
            body_offset: text.find('{'),
        }
    }

    fn doc(id: usize, v: Vec<f64>) -> DocChunk {
        DocChunk {
            id,
            source: "d.md".into(),
            heading_path: vec![],
            text: format!("doc {id}"),
            vector: v,
        }
    }

    #[test]
    fn query_template() {
        assert_eq!(
            build_query_statement(&focal("Translate", "Tag", &[])),
            "What is the functionality and intended behavior of method Translate in class Tag?"
        );
        assert_eq!(
            build_query_statement(&focal("parse", "", &[])),
            "What is the functionality and intended behavior of method parse?"
        );
    }

    #[test]
    fn orthogonal_basis_exact_hit() {
        let docs = vec![
            doc(1, vec![1.0, 0.0, 0.0]),
            doc(2, vec![0.0, 1.0, 0.0]),
            doc(3, vec![0.0, 0.0, 1.0]),
        ];
        let r = rank_docs(&[0.0, 1.0, 0.0], &docs, 2);
        assert_eq!(r[0].chunk_id, 2);
        assert_eq!(r[0].score, 1.0);
    }

    #[test]
    fn ties_break_by_lower_id() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let docs = vec![
            doc(7, vec![s, s]),
            doc(3, vec![s, s]),
            doc(5, vec![0.0, 1.0]),
        ];
        let r = rank_docs(&[s, s], &docs, 2);
        assert_eq!(r.iter().map(|x| x.chunk_id).collect::<Vec<_>>(), [3, 7]);
    }

    #[test]
    fn double_param_accepts_float_literal_rejects_int() {
        let f = focal("focal_method_name", "", &["double"]);
        let kb = vec![
            chunk(0, "void a() { focal_method_name(3.5); }"),
            chunk(1, "void b() { focal_method_name(1); }"),
        ];
        let r = retrieve_code_examples(&f, &kb, 5);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].chunk_id, 0);
        assert_eq!(r[0].score, 1.0);
    }

    #[test]
    fn no_mention_no_result() {
        let f = focal("absent", "", &[]);
        assert!(retrieve_code_examples(&f, &[chunk(0, "void a() { other(); }")], 5).is_empty());
    }

    #[test]
    fn arity_mismatch_and_word_boundary() {
        let f = focal("run", "", &["int", "int"]);
        let kb = vec![
            chunk(0, "void a() { run(1); }"),
            chunk(1, "void b() { rerun(1, 2); }"),
            chunk(2, "void c() { obj.run(f(1, 2), x[3]); }"),
        ];
        let ids: Vec<_> = retrieve_code_examples(&f, &kb, 5)
            .into_iter()
            .map(|r| r.chunk_id)
            .collect();
        assert_eq!(ids, [2]);
    }

    #[test]
    fn string_literal_vs_arithmetic() {
        let f = focal("set", "", &["int"]);
        let kb = vec![chunk(0, "void a() { set(\"x\"); }")];
        assert!(retrieve_code_examples(&f, &kb, 5).is_empty());
        let g = focal("set", "", &["const std::string &"]);
        assert_eq!(retrieve_code_examples(&g, &kb, 5).len(), 1);
    }

    #[test]
    fn focal_chunk_and_same_name_definitions_are_excluded() {
        let mut own = chunk(0, "void f(double x) { f(x - 1.0); }");
        own.source = "focal.cpp".into();
        let mut overload = chunk(1, "void f(double y) { g(); }");
        overload.name = "f".into();
        let f = focal("f", "", &["double"]);
        assert!(retrieve_code_examples(&f, &[own, overload], 5).is_empty());
    }

    #[test]
    fn limit_caps_results() {
        let f = focal("g", "", &[]);
        let kb: Vec<_> = (0..9).map(|i| chunk(i, "void h() { g(); }")).collect();
        assert_eq!(retrieve_code_examples(&f, &kb, 5).len(), 5);
    }

    #[test]
    fn literal_cues() {
        assert_eq!(literal_cue("42"), Some(LiteralCue::Integer));
        assert_eq!(literal_cue("0x1Fu"), Some(LiteralCue::Integer));
        assert_eq!(literal_cue("-7L"), Some(LiteralCue::Integer));
        assert_eq!(literal_cue("3.5"), Some(LiteralCue::Floating));
        assert_eq!(literal_cue("1e3"), Some(LiteralCue::Floating));
        assert_eq!(literal_cue(".5f"), Some(LiteralCue::Floating));
        assert_eq!(literal_cue("\"hi\""), Some(LiteralCue::String));
        assert_eq!(literal_cue("u8\"hi\""), Some(LiteralCue::String));
        assert_eq!(literal_cue("x"), None);
        assert!(is_floating_type("const double&"));
        assert!(is_floating_type("long double"));
        assert!(!is_floating_type("long"));
        assert!(!is_floating_type("double*"));
        assert!(is_arithmetic_type("unsigned long long"));
        assert!(!is_arithmetic_type("const char*"));
    }

    #[test]
    fn split_args_nesting() {
        assert_eq!(split_args(")"), Some(vec![]));
        assert_eq!(
            split_args("a, f(b, c), \"x,y\")"),
            Some(vec!["a".into(), "f(b, c)".into(), "\"x,y\"".into()])
        );
        assert_eq!(split_args("a, b"), None);
    }

    proptest! {
        #[test]
        fn docs_scores_bounded_and_sorted(
            vs in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 4), 0..12),
            q in proptest::collection::vec(-1.0f64..1.0, 4),
            k in 1usize..6,
        ) {
            let mut docs: Vec<DocChunk> = vs.into_iter().enumerate().map(|(i, v)| doc(i, v)).collect();
            for d in &mut docs { super::super::embed::l2_normalize(&mut d.vector); }
            let mut q = q;
            super::super::embed::l2_normalize(&mut q);
            let r = rank_docs(&q, &docs, k);
            prop_assert!(r.len() <= k);
            prop_assert!(r.iter().all(|x| (-1.0..=1.0).contains(&x.score)));
            prop_assert!(r.windows(2).all(|w| w[0].score >= w[1].score));
        }

        #[test]
        fn returned_examples_have_matching_arity(
            n_params in 0usize..4,
            calls in proptest::collection::vec(0usize..4, 1..6),
        ) {
            let params: Vec<&str> = vec!["int"; n_params];
            let f = focal("target", "", &params);
            let kb: Vec<CodeChunk> = calls.iter().enumerate().map(|(i, &n)| {
                let args = (0..n).map(|j| format!("v{j}")).collect::<Vec<_>>().join(", ");
                chunk(i, &format!("void c() {{ target({args}); }}"))
            }).collect();
            let pat = call_pattern("target");
            for r in retrieve_code_examples(&f, &kb, 10) {
                let c = &kb[r.chunk_id];
                prop_assert!(call_sites(c, "target", &pat).iter().any(|a| a.len() == n_params));
            }
        }
    }
}
