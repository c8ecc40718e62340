//! Four-part prompts: task definition, step instructions, contextual
//! information, output format. Always rendered in that order.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::extract::IntentSummary;
use super::llm::Step;
use crate::deps::{ConfigDependencies, CrossFileDependencies};
use crate::guidance::StagedGuideline;
use crate::kb::RetrievalResult;
use crate::repo::StructuredFocalContext;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("{step} prompt needs {input}")]
    MissingInput {
        step: &'static str,
        input: &'static str,
    },
    #[error("prompt needs ~{estimate} tokens even after truncation; budget is {budget}")]
    OverBudget { estimate: usize, budget: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    FocalContext,
    ConfigDeps,
    CrossFileDeps,
    IntentionContexts,
    IntentSummary,
    Ingredients,
    Guidelines,
    TestFile,
    Diagnostics,
}

impl SectionKind {
    pub fn title(self) -> &'static str {
        match self {
            Self::FocalContext => "Focal method context",
            Self::ConfigDeps => "Configuration dependencies",
            Self::CrossFileDeps => "Cross-file dependencies",
            Self::IntentionContexts => "Intention contexts",
            Self::IntentSummary => "Intent of the focal method",
            Self::Ingredients => "Core ingredients",
            Self::Guidelines => "Guidelines",
            Self::TestFile => "Test file",
            Self::Diagnostics => "Compiler diagnostics",
        }
    }

    /// Lower drops first; `None` is never truncated.
    fn drop_rank(self) -> Option<u8> {
        match self {
            Self::IntentionContexts => Some(0),
            Self::Ingredients => Some(1),
            Self::CrossFileDeps => Some(2),
            Self::IntentSummary => Some(3),
            Self::ConfigDeps => Some(4),
            Self::FocalContext | Self::Guidelines | Self::TestFile | Self::Diagnostics => None,
        }
    }
}

/// A contextual section made of whole items; truncation removes trailing items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSection {
    pub kind: SectionKind,
    pub items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub step: Step,
    pub task_definition: String,
    pub step_instructions: String,
    pub contextual_information: Vec<ContextSection>,
    pub output_format: String,
    pub rendered: String,
    pub token_estimate: usize,
    /// Sections that lost items to the budget, in the order first cut.
    pub truncated: Vec<SectionKind>,
}

/// Inputs referenced by the step templates; each step requires a subset.
#[derive(Debug, Clone, Copy, Default)]
pub struct PromptInputs<'a> {
    pub focal: Option<&'a StructuredFocalContext>,
    pub config_deps: Option<&'a ConfigDependencies>,
    pub cross_file: Option<&'a CrossFileDependencies>,
    pub docs: &'a [RetrievalResult],
    pub code_examples: &'a [RetrievalResult],
    pub intent: Option<&'a IntentSummary>,
    pub guidelines: &'a [StagedGuideline],
    pub test_source: Option<&'a str>,
    pub diagnostics: &'a [String],
}

pub const COMPONENT_HEADERS: [&str; 4] = [
    "### Task Definition",
    "### Step Instructions",
    "### Contextual Information",
    "### Output Format",
];

const TASK_DEFINITION: &str = "You write unit tests for a method of a C++ project. \
The tests must compile against the project's own headers with the project's \
configuration, exercise the method's documented behavior, and cover its branches.";

const CODE_OUTPUT: &str = "Return the complete test file as exactly one fenced code block \
starting with ```cpp and ending with ```. Do not output any other code block.";

const UNDERSTAND_OUTPUT: &str = "Answer in plain text with two labeled sections and nothing else:\n\
INTENT: <one paragraph describing what the method is meant to do>\n\
INGREDIENTS: <comma-separated names of the types, functions, constants and headers the method relies on>";

/// Character-count heuristic: one token per four characters.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

pub fn assemble_prompt(
    step: Step,
    inputs: &PromptInputs<'_>,
    budget: usize,
) -> Result<PromptBundle, PromptError> {
    let need = |present: bool, input: &'static str| {
        if present {
            Ok(())
        } else {
            Err(PromptError::MissingInput {
                step: step.name(),
                input,
            })
        }
    };
    let (instructions, mut sections) = match step {
        Step::Understand => {
            need(inputs.focal.is_some(), "the focal context")?;
            (understand_instructions(), vec![focal_section(inputs)])
        }
        Step::Generate => {
            need(inputs.focal.is_some(), "the focal context")?;
            need(inputs.config_deps.is_some(), "configuration dependencies")?;
            need(inputs.cross_file.is_some(), "cross-file dependencies")?;
            need(inputs.intent.is_some(), "the step-1 intent summary")?;
            let intent = inputs.intent.expect("checked");
            let v = vec![
                focal_section(inputs),
                config_section(inputs.config_deps.expect("checked")),
                cross_file_section(inputs.cross_file.expect("checked")),
                intention_section(inputs.docs, inputs.code_examples),
                ContextSection {
                    kind: SectionKind::IntentSummary,
                    items: vec![intent.intent.clone()],
                },
                ContextSection {
                    kind: SectionKind::Ingredients,
                    items: intent.ingredients.clone(),
                },
            ];
            (generate_instructions(inputs.guidelines), v)
        }
        Step::Refine => {
            need(inputs.test_source.is_some(), "the test file")?;
            need(!inputs.guidelines.is_empty(), "guidelines")?;
            (
                refine_instructions(),
                vec![
                    ContextSection {
                        kind: SectionKind::Guidelines,
                        items: inputs.guidelines.iter().map(|g| g.to_string()).collect(),
                    },
                    test_file_section(inputs.test_source.expect("checked")),
                ],
            )
        }
        Step::Fix => {
            need(inputs.test_source.is_some(), "the test file")?;
            need(!inputs.diagnostics.is_empty(), "compiler diagnostics")?;
            (
                fix_instructions(),
                vec![
                    test_file_section(inputs.test_source.expect("checked")),
                    ContextSection {
                        kind: SectionKind::Diagnostics,
                        items: vec![inputs.diagnostics.join("\n")],
                    },
                ],
            )
        }
    };
    let output_format = match step {
        Step::Understand => UNDERSTAND_OUTPUT,
        _ => CODE_OUTPUT,
    };

    let mut truncated = Vec::new();
    loop {
        let rendered = render(&instructions, &sections, output_format);
        let token_estimate = estimate_tokens(&rendered);
        if token_estimate <= budget {
            return Ok(PromptBundle {
                step,
                task_definition: TASK_DEFINITION.to_string(),
                step_instructions: instructions,
                contextual_information: sections,
                output_format: output_format.to_string(),
                rendered,
                token_estimate,
                truncated,
            });
        }
        let victim = sections
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.kind.drop_rank().map(|r| (r, i)))
            .min()
            .map(|(_, i)| i);
        let Some(i) = victim else {
            return Err(PromptError::OverBudget {
                estimate: token_estimate,
                budget,
            });
        };
        if !truncated.contains(&sections[i].kind) {
            truncated.push(sections[i].kind);
        }
        sections[i].items.pop();
        if sections[i].items.is_empty() {
            sections.remove(i);
        }
    }
}

fn render(instructions: &str, sections: &[ContextSection], output_format: &str) -> String {
    let mut out = String::new();
    let _ = write!(out, "{}\n{TASK_DEFINITION}\n\n", COMPONENT_HEADERS[0]);
    let _ = write!(out, "{}\n{instructions}\n\n", COMPONENT_HEADERS[1]);
    let _ = writeln!(out, "{}", COMPONENT_HEADERS[2]);
    for s in sections {
        let _ = writeln!(out, "#### {}", s.kind.title());
        if s.items.is_empty() {
            out.push_str("None.\n");
        }
        for item in &s.items {
            out.push_str(item);
            if !item.ends_with('\n') {
                out.push('\n');
            }
        }
        out.push('\n');
    }
    let _ = writeln!(out, "{}\n{output_format}", COMPONENT_HEADERS[3]);
    out
}

fn fenced(code: &str) -> String {
    let nl = if code.ends_with('\n') { "" } else { "\n" };
    format!("```cpp\n{code}{nl}```\n")
}

fn focal_section(inputs: &PromptInputs<'_>) -> ContextSection {
    ContextSection {
        kind: SectionKind::FocalContext,
        items: vec![fenced(&inputs.focal.expect("checked").render())],
    }
}

fn config_section(d: &ConfigDependencies) -> ContextSection {
    let libs = d.describe_libraries();
    ContextSection {
        kind: SectionKind::ConfigDeps,
        items: vec![
            format!(
                "Linked libraries: {}",
                if libs.is_empty() { "none" } else { &libs }
            ),
            format!(
                "C++ standard: {}",
                d.cxx_standard.as_deref().unwrap_or("unspecified")
            ),
            format!(
                "GoogleTest available: {}",
                if d.gtest_available { "yes" } else { "no" }
            ),
        ],
    }
}

fn cross_file_section(d: &CrossFileDependencies) -> ContextSection {
    ContextSection {
        kind: SectionKind::CrossFileDeps,
        items: d
            .entries
            .iter()
            .map(|e| {
                format!(
                    "// {} (declared in {})\n{}",
                    e.symbol,
                    e.declaring_file.display(),
                    fenced(&e.declaration_text)
                )
            })
            .collect(),
    }
}

fn intention_section(docs: &[RetrievalResult], code: &[RetrievalResult]) -> ContextSection {
    let docs = docs
        .iter()
        .map(|d| format!("Documentation excerpt:\n{}", d.snippet.trim_end()));
    let code = code
        .iter()
        .map(|c| format!("Usage example:\n{}", fenced(&c.snippet)));
    ContextSection {
        kind: SectionKind::IntentionContexts,
        items: docs.chain(code).collect(),
    }
}

fn test_file_section(source: &str) -> ContextSection {
    ContextSection {
        kind: SectionKind::TestFile,
        items: vec![fenced(source)],
    }
}

fn understand_instructions() -> String {
    "Step 1. Read the focal method and its surrounding context.\n\
     Describe the method's intended functionality and list the core ingredients \
     (types, functions, constants, headers) it depends on. Do not write tests yet."
        .to_string()
}

fn generate_instructions(guidelines: &[StagedGuideline]) -> String {
    let mut s = String::from(
        "Step 2. Using the intent and ingredients from step 1 together with the contextual \
         information, write unit tests for the focal method.\n\
         Include the headers that declare everything the tests use, respect the project's \
         C++ standard and linked libraries, and write one test per behavior.",
    );
    if !guidelines.is_empty() {
        s.push_str("\nFollow these guidelines:");
        for g in guidelines {
            let _ = write!(s, "\n{g}");
        }
    }
    s
}

fn refine_instructions() -> String {
    "Step 3. Review the test file against every guideline below and correct each violation. \
     Guidelines marked [ACTIVE] apply to this project. Keep tests that already comply unchanged."
        .to_string()
}

fn fix_instructions() -> String {
    "The test file below fails to compile. Fix every compilation error reported by the \
     compiler while keeping the intent of each test."
        .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guidance::{guidelines_for, Stage};
    use crate::repo::{FocalMethod, LineSpan, Signature};

    fn focal() -> StructuredFocalContext {
        StructuredFocalContext {
            focal: FocalMethod {
                id: "a_cpp__add_L1".into(),
                name: "add".into(),
                class_name: String::new(),
                signature: Signature {
                    return_type: "int".into(),
                    parameter_types: vec!["int".into(), "int".into()],
                },
                file: "a.cpp".into(),
                line_span: LineSpan { start: 1, end: 3 },
                body: "int add(int a, int b) {\n  return a + b;\n}".into(),
                cyclomatic_complexity: 1,
                kind: crate::repo::syntax::FunctionKind::Free,
                byte_start: 0,
            },
            std_imports: vec![],
            third_party_imports: vec![],
            user_imports: vec!["#include \"a.h\"".into()],
            namespaces: vec![],
            sibling_signatures: vec![],
            class_fields: vec![],
        }
    }

    fn doc(id: usize, text: &str) -> RetrievalResult {
        RetrievalResult {
            chunk_id: id,
            score: 0.5,
            snippet: text.into(),
        }
    }

    fn positions(rendered: &str, needles: &[&str]) -> Vec<usize> {
        needles
            .iter()
            .map(|n| rendered.find(n).unwrap_or_else(|| panic!("missing {n}")))
            .collect()
    }

    #[test]
    fn generate_prompt_has_ordered_components() {
        let ctx = focal();
        let deps = ConfigDependencies::default();
        let cross = CrossFileDependencies::default();
        let intent = IntentSummary {
            intent: "adds".into(),
            ingredients: vec!["int".into()],
        };
        let docs = [doc(0, "Adds two ints.")];
        let inputs = PromptInputs {
            focal: Some(&ctx),
            config_deps: Some(&deps),
            cross_file: Some(&cross),
            docs: &docs,
            intent: Some(&intent),
            ..PromptInputs::default()
        };
        let b = assemble_prompt(Step::Generate, &inputs, 10_000).unwrap();
        let p = positions(&b.rendered, &COMPONENT_HEADERS);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        let kinds: Vec<_> = b.contextual_information.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            [
                SectionKind::FocalContext,
                SectionKind::ConfigDeps,
                SectionKind::CrossFileDeps,
                SectionKind::IntentionContexts,
                SectionKind::IntentSummary,
                SectionKind::Ingredients
            ]
        );
        let titles: Vec<String> = kinds
            .iter()
            .map(|k| format!("#### {}", k.title()))
            .collect();
        let t: Vec<&str> = titles.iter().map(String::as_str).collect();
        let p = positions(&b.rendered, &t);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b.token_estimate, estimate_tokens(&b.rendered));
        assert!(b.truncated.is_empty());
    }

    #[test]
    fn refine_prompt_lists_all_guidelines() {
        let g = guidelines_for(Stage::Refinement, &ConfigDependencies::default());
        let inputs = PromptInputs {
            test_source: Some("int main() {}"),
            guidelines: &g,
            ..PromptInputs::default()
        };
        let b = assemble_prompt(Step::Refine, &inputs, 10_000).unwrap();
        for s in &g {
            assert!(b.rendered.contains(&s.guideline.text), "{}", s.guideline.id);
        }
        assert!(b.rendered.contains("(A.3)") && b.rendered.contains("[ACTIVE]"));
    }

    #[test]
    fn oversized_intention_context_is_dropped() {
        let ctx = focal();
        let deps = ConfigDependencies::default();
        let cross = CrossFileDependencies::default();
        let intent = IntentSummary::default();
        let big = "lorem ipsum ".repeat(2_000);
        let docs = [doc(0, &big)];
        let inputs = PromptInputs {
            focal: Some(&ctx),
            config_deps: Some(&deps),
            cross_file: Some(&cross),
            docs: &docs,
            intent: Some(&intent),
            ..PromptInputs::default()
        };
        let b = assemble_prompt(Step::Generate, &inputs, 1_000).unwrap();
        assert_eq!(b.truncated, [SectionKind::IntentionContexts]);
        assert!(!b.rendered.contains("lorem"));
        assert!(b.rendered.contains(&ctx.focal.body));
        assert!(b.token_estimate <= 1_000);
    }

    #[test]
    fn whole_items_are_kept_up_to_budget() {
        let ctx = focal();
        let deps = ConfigDependencies::default();
        let cross = CrossFileDependencies::default();
        let intent = IntentSummary::default();
        let docs = [doc(0, &"a".repeat(400)), doc(1, &"b".repeat(400))];
        let inputs = PromptInputs {
            focal: Some(&ctx),
            config_deps: Some(&deps),
            cross_file: Some(&cross),
            docs: &docs,
            intent: Some(&intent),
            ..PromptInputs::default()
        };
        let full = assemble_prompt(Step::Generate, &inputs, 100_000).unwrap();
        let b = assemble_prompt(Step::Generate, &inputs, full.token_estimate - 50).unwrap();
        assert!(b.rendered.contains(&"a".repeat(400)));
        assert!(!b.rendered.contains(&"b".repeat(400)));
    }

    #[test]
    fn focal_alone_over_budget_is_fatal() {
        let ctx = focal();
        let inputs = PromptInputs {
            focal: Some(&ctx),
            ..PromptInputs::default()
        };
        assert!(matches!(
            assemble_prompt(Step::Understand, &inputs, 20),
            Err(PromptError::OverBudget { .. })
        ));
    }

    #[test]
    fn missing_inputs_are_reported() {
        let ctx = focal();
        let inputs = PromptInputs {
            focal: Some(&ctx),
            ..PromptInputs::default()
        };
        assert_eq!(
            assemble_prompt(Step::Generate, &inputs, 10_000).unwrap_err(),
            PromptError::MissingInput {
                step: "generate",
                input: "configuration dependencies"
            }
        );
        assert!(assemble_prompt(Step::Refine, &PromptInputs::default(), 10_000).is_err());
    }
}
