//! Rule-based repair: phase 1 (lexical, before any compile) and phase 2
//! (driven by a failed compile).

use std::path::PathBuf;
use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

use super::compile::{CompileResult, CompileStatus};
use super::PostprocessError;
use crate::deps::ConfigDependencies;
use crate::generation::{GeneratedTestFile, Operation, TestStage};
use crate::guidance::{ErrorClassifier, ErrorPattern};
use crate::lex::{self, TokenKind};
use crate::repo::scan::normalize;
use crate::repo::std_headers::is_standard_header;
use crate::repo::{RepoIndex, StructuredFocalContext, SyntaxBackend, TreeSitterBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FixRule {
    pub id: &'static str,
    pub phase: u8,
    pub description: &'static str,
}

pub const BALANCE_BRACKETS: FixRule = FixRule {
    id: "syntax.balance-brackets",
    phase: 1,
    description: "append closers for unclosed braces, parentheses and brackets at end of file",
};
pub const CONSOLIDATE_INCLUDES: FixRule = FixRule {
    id: "syntax.consolidate-includes",
    phase: 1,
    description: "rebuild the include block from the focal imports, permitted framework headers and resolvable test includes",
};
pub const SINGLE_MAIN: FixRule = FixRule {
    id: "syntax.single-main",
    phase: 1,
    description:
        "keep one main (none when the framework supplies it); synthesize one without a framework",
};
pub const NAMESPACE_USING: FixRule = FixRule {
    id: "compile.namespace-using",
    phase: 2,
    description: "insert using-directives for the focal namespaces and drop directives naming unknown namespaces",
};
pub const DROP_MISSING_INCLUDES: FixRule = FixRule {
    id: "compile.drop-missing-includes",
    phase: 2,
    description: "delete includes that name missing headers or do not resolve in the repository",
};

pub const FIX_RULES: [FixRule; 5] = [
    BALANCE_BRACKETS,
    CONSOLIDATE_INCLUDES,
    SINGLE_MAIN,
    NAMESPACE_USING,
    DROP_MISSING_INCLUDES,
];

/// Where generated tests live and which framework conventions apply.
#[derive(Debug, Clone)]
pub struct TestLayout<'a> {
    pub index: &'a RepoIndex,
    /// Repository-relative path the test file is written to.
    pub test_path: PathBuf,
    pub framework_provides_main: bool,
}

impl<'a> TestLayout<'a> {
    pub fn new(index: &'a RepoIndex, file_name: &str, framework_provides_main: bool) -> Self {
        Self {
            index,
            test_path: index.test_dir.join(file_name),
            framework_provides_main,
        }
    }

    /// Whether a quote or non-standard angle include names a repository file
    /// reachable from the test with the compile command's `-I` directories.
    pub fn resolves(&self, path: &str) -> bool {
        let from_test = self.test_path.parent().map(|d| d.join(path));
        from_test
            .into_iter()
            .chain(self.index.include_dirs().iter().map(|d| d.join(path)))
            .map(|c| normalize(&c))
            .any(|c| self.index.is_header(&c) || self.index.is_source(&c))
    }
}

fn include_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"^\s*#\s*include\s*([<"])([^>"]+)[>"]"#).expect("valid regex"))
}

fn using_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\s*using\s+namespace\s+([A-Za-z_][A-Za-z_0-9:]*)\s*;").expect("valid regex")
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct IncludeLine {
    line: usize,
    angled: bool,
    path: String,
}

impl IncludeLine {
    fn directive(&self) -> String {
        if self.angled {
            format!("#include <{}>", self.path)
        } else {
            format!("#include \"{}\"", self.path)
        }
    }
}

fn include_lines(src: &str) -> Vec<IncludeLine> {
    src.lines()
        .enumerate()
        .filter_map(|(i, l)| {
            include_re().captures(l).map(|c| IncludeLine {
                line: i,
                angled: &c[1] == "<",
                path: c[2].trim().to_string(),
            })
        })
        .collect()
}

fn is_framework_header(path: &str) -> bool {
    path.starts_with("gtest/") || path.starts_with("gmock/")
}

fn framework_includes(deps: &ConfigDependencies) -> Vec<String> {
    let mut v = Vec::new();
    if deps.gtest_available {
        v.push("#include <gtest/gtest.h>".to_string());
    }
    if deps.gmock_available() {
        v.push("#include <gmock/gmock.h>".to_string());
    }
    v
}

/// Appends the closers of every unclosed `{`, `(` and `[` at end of file,
/// innermost first. Stray closers are left alone.
pub fn balance_brackets(src: &str) -> String {
    let mut stack: Vec<char> = Vec::new();
    for t in lex::code_tokens(src) {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text(src) {
            "{" => stack.push('}'),
            "(" => stack.push(')'),
            "[" => stack.push(']'),
            c @ ("}" | ")" | "]") if stack.last().is_some_and(|top| top.to_string() == c) => {
                stack.pop();
            }
            _ => {}
        }
    }
    if stack.is_empty() {
        return src.to_string();
    }
    let mut out = src.to_string();
    if !out.ends_with('\n') {
        out.push('\n');
    }
    while let Some(c) = stack.pop() {
        out.push(c);
        out.push('\n');
    }
    out
}

/// Replaces every include line with one block, placed where the first include
/// was: focal imports, permitted framework headers, then the test's own
/// includes that are standard or resolve in the repository.
pub fn consolidate_includes(
    src: &str,
    focal_ctx: &StructuredFocalContext,
    deps: &ConfigDependencies,
    layout: &TestLayout<'_>,
) -> String {
    let existing = include_lines(src);
    let mut block: Vec<String> = Vec::new();
    let mut add = |d: String| {
        if !block.contains(&d) {
            block.push(d);
        }
    };
    for d in focal_ctx.all_imports() {
        add(d.clone());
    }
    if layout.index.is_header(&focal_ctx.focal.file) {
        add(format!("#include \"{}\"", focal_ctx.focal.file.display()));
    }
    for d in framework_includes(deps) {
        add(d);
    }
    for inc in &existing {
        let keep = if is_framework_header(&inc.path) {
            false
        } else if inc.angled && is_standard_header(&inc.path) {
            true
        } else {
            layout.resolves(&inc.path)
        };
        if keep {
            add(inc.directive());
        }
    }
    let lines: Vec<&str> = src.lines().collect();
    let at = existing.first().map_or(0, |i| i.line);
    let mut out: Vec<String> = Vec::with_capacity(lines.len() + block.len());
    for (i, l) in lines.iter().enumerate() {
        if i == at {
            out.append(&mut block);
        }
        if !existing.iter().any(|e| e.line == i) {
            out.push((*l).to_string());
        }
    }
    if at >= lines.len() {
        out.append(&mut block);
    }
    join_lines(out, src)
}

fn join_lines(lines: Vec<String>, original: &str) -> String {
    let mut s = lines.join("\n");
    if original.ends_with('\n') || original.is_empty() {
        s.push('\n');
    }
    s
}

fn outline(src: &str) -> crate::repo::SourceOutline {
    TreeSitterBackend::new().outline(src).unwrap_or_default()
}

/// Lexical `int main (` check; robust where error recovery hides the definition.
fn declares_main(src: &str) -> bool {
    let toks = lex::code_tokens(src);
    toks.windows(3)
        .any(|w| w[0].text(src) == "int" && w[1].text(src) == "main" && w[2].text(src) == "(")
}

/// Under a framework: keep the first `main`, or none when the framework
/// supplies it. Without one: synthesize a `main` calling every zero-argument
/// function whose name starts with `test` when no `main` exists.
pub fn normalize_main(
    src: &str,
    deps: &ConfigDependencies,
    framework_provides_main: bool,
) -> String {
    let o = outline(src);
    let mains: Vec<_> = o
        .functions
        .iter()
        .filter(|f| f.name == "main" && f.class_name.is_none())
        .collect();
    if deps.gtest_available {
        let keep = usize::from(!framework_provides_main);
        let mut out = src.to_string();
        for f in mains.iter().skip(keep).rev() {
            let mut end = f.span.end_byte;
            if out[end..].starts_with('\n') {
                end += 1;
            }
            out.replace_range(f.span.start_byte..end, "");
        }
        return out;
    }
    if !mains.is_empty() || declares_main(src) {
        return src.to_string();
    }
    let tests: Vec<&str> = o
        .functions
        .iter()
        .filter(|f| {
            f.class_name.is_none()
                && f.param_types.is_empty()
                && f.name.to_ascii_lowercase().starts_with("test")
        })
        .map(|f| f.name.as_str())
        .collect();
    let mut out = src.to_string();
    if !out.ends_with('\n') {
        out.push('\n');
    }
    out.push_str("\nint main() {\n");
    for t in tests {
        out.push_str(&format!("    {t}();\n"));
    }
    out.push_str("    return 0;\n}\n");
    out
}

/// Phase 1. Total and idempotent.
pub fn apply_syntax_rules(
    mut tc: GeneratedTestFile,
    focal_ctx: &StructuredFocalContext,
    deps: &ConfigDependencies,
    layout: &TestLayout<'_>,
) -> Result<GeneratedTestFile, PostprocessError> {
    if tc.stage > TestStage::Refined {
        return Err(PostprocessError::Precondition(format!(
            "syntax rules need an initial or refined file, found {:?}",
            tc.stage
        )));
    }
    let before = tc.source.clone();
    tc.source = syntax_rules_text(&tc.source, focal_ctx, deps, layout);
    let note = (tc.source == before).then(|| "no change".to_string());
    tc.record(Operation::SyntaxRules, TestStage::RuleFixed, note);
    Ok(tc)
}

pub fn syntax_rules_text(
    src: &str,
    focal_ctx: &StructuredFocalContext,
    deps: &ConfigDependencies,
    layout: &TestLayout<'_>,
) -> String {
    let s = balance_brackets(src);
    let s = consolidate_includes(&s, focal_ctx, deps, layout);
    normalize_main(&s, deps, layout.framework_provides_main)
}

/// `X` of every focal `namespace X` / `using namespace X;` entry.
pub fn focal_namespaces(ctx: &StructuredFocalContext) -> Vec<String> {
    let mut v: Vec<String> = Vec::new();
    for n in &ctx.namespaces {
        let name = n
            .trim()
            .trim_start_matches("using ")
            .trim_start_matches("namespace ")
            .trim_end_matches(';')
            .trim();
        if !name.is_empty() && !v.iter().any(|x| x == name) {
            v.push(name.to_string());
        }
    }
    v
}

fn quoted(text: &str) -> Vec<&str> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"['‘`]([^'’`]+)['’]").expect("valid regex"));
    re.captures_iter(text)
        .map(|c| c.get(1).expect("group").as_str())
        .collect()
}

fn missing_header(text: &str) -> Option<String> {
    static GCC: OnceLock<Regex> = OnceLock::new();
    let gcc = GCC.get_or_init(|| {
        Regex::new(r"error: ([^\s:]+): No such file or directory").expect("valid regex")
    });
    if let Some(c) = gcc.captures(text) {
        return Some(c[1].to_string());
    }
    if text.contains("file not found") {
        return quoted(text).first().map(|s| s.to_string());
    }
    None
}

/// Phase 2: namespace and missing-include repairs keyed by the classified
/// diagnostics. Stage is unchanged; lineage gains one entry.
pub fn apply_compile_rules(
    mut tc: GeneratedTestFile,
    compile: &CompileResult,
    focal_ctx: &StructuredFocalContext,
    layout: &TestLayout<'_>,
    classifier: &ErrorClassifier,
) -> Result<GeneratedTestFile, PostprocessError> {
    if compile.status != CompileStatus::Failure {
        return Err(PostprocessError::Precondition(
            "compile rules need a failed compile".into(),
        ));
    }
    let mut applied: Vec<&str> = Vec::new();
    let mut namespace_issue = false;
    let mut bad_names: Vec<String> = Vec::new();
    let mut missing: Vec<String> = Vec::new();
    for line in &compile.diagnostics {
        let c = classifier.classify(line);
        if c.pattern == ErrorPattern::Namespace {
            namespace_issue = true;
            if line.contains("not a namespace") || line.contains("no namespace named") {
                bad_names.extend(quoted(line).into_iter().map(str::to_string));
            }
        }
        if let Some(h) = missing_header(line) {
            missing.push(h);
        }
    }

    let mut src = tc.source.clone();
    if !missing.is_empty() {
        let drop: Vec<usize> = include_lines(&src)
            .into_iter()
            .filter(|i| {
                missing
                    .iter()
                    .any(|m| i.path == *m || i.path.ends_with(&format!("/{m}")))
                    || (!i.angled && !layout.resolves(&i.path))
            })
            .map(|i| i.line)
            .collect();
        if !drop.is_empty() {
            let kept: Vec<String> = src
                .lines()
                .enumerate()
                .filter(|(i, _)| !drop.contains(i))
                .map(|(_, l)| l.to_string())
                .collect();
            src = join_lines(kept, &src);
            applied.push(DROP_MISSING_INCLUDES.id);
        }
    }
    if namespace_issue {
        let known = focal_namespaces(focal_ctx);
        let mut lines: Vec<String> = src.lines().map(str::to_string).collect();
        let before = lines.len();
        lines.retain(|l| {
            using_re().captures(l).is_none_or(|c| {
                known.contains(&c[1].to_string()) || !bad_names.contains(&c[1].to_string())
            })
        });
        let mut changed = lines.len() != before;
        let present: Vec<String> = lines
            .iter()
            .filter_map(|l| using_re().captures(l).map(|c| c[1].to_string()))
            .collect();
        let missing_ns: Vec<&String> = known.iter().filter(|n| !present.contains(n)).collect();
        if !missing_ns.is_empty() {
            let at = lines
                .iter()
                .rposition(|l| include_re().is_match(l))
                .map_or(0, |i| i + 1);
            for (k, n) in missing_ns.iter().enumerate() {
                lines.insert(at + k, format!("using namespace {n};"));
            }
            changed = true;
        }
        if changed {
            src = join_lines(lines, &src);
            applied.push(NAMESPACE_USING.id);
        }
    }
    let note = if applied.is_empty() {
        Some("no applicable rule".to_string())
    } else {
        tc.source = src;
        Some(format!("applied {}", applied.join(", ")))
    };
    let stage = tc.stage;
    tc.record(Operation::CompileRules, stage, note);
    Ok(tc)
}

/// Repository-relative path the test is written to.
pub fn test_path(index: &RepoIndex, tc: &GeneratedTestFile) -> PathBuf {
    index.test_dir.join(tc.file_name())
}
