use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::extract::{code_blocks, parse_intent, IntentSummary};
use super::llm::{LlmError, LlmSession, Step};
use super::prompt::{assemble_prompt, PromptError, PromptInputs};
use crate::guidance::StagedGuideline;
use crate::repo::scan::GENERATED_PREFIX;
use crate::repo::StructuredFocalContext;

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Provider(#[from] LlmError),
    #[error("{0} step got an empty response")]
    EmptyResponse(&'static str),
    #[error("generate step response has no fenced code block")]
    NoCodeBlock,
    #[error("{op:?} needs a file at stage {expected:?}, found {found:?}")]
    StageOrder {
        op: Operation,
        expected: TestStage,
        found: TestStage,
    },
}

/// Ordered: a file's stage never moves backwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStage {
    Initial,
    Refined,
    RuleFixed,
    LlmFixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Step2Generate,
    Step3Refine,
    SyntaxRules,
    CompileRules,
    LlmFix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageEntry {
    pub op: Operation,
    pub stage: TestStage,
    /// Set when the operation left the source unchanged or took a fallback.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedTestFile {
    pub focal_id: String,
    pub source: String,
    pub stage: TestStage,
    /// Starts with `Step2Generate`; one entry per operation applied.
    pub lineage: Vec<LineageEntry>,
}

impl GeneratedTestFile {
    pub fn new(focal_id: &str, source: String, note: Option<String>) -> Self {
        Self {
            focal_id: focal_id.to_string(),
            source,
            stage: TestStage::Initial,
            lineage: vec![LineageEntry {
                op: Operation::Step2Generate,
                stage: TestStage::Initial,
                note,
            }],
        }
    }

    pub fn file_name(&self) -> String {
        format!("{GENERATED_PREFIX}{}.cpp", self.focal_id)
    }

    /// Records `op`, moving to `stage`.
    ///
    /// # Panics
    /// If `stage` is earlier than the current stage.
    pub fn record(&mut self, op: Operation, stage: TestStage, note: Option<String>) {
        assert!(
            stage >= self.stage,
            "stage regression {:?} -> {stage:?}",
            self.stage
        );
        self.stage = stage;
        self.lineage.push(LineageEntry { op, stage, note });
    }

    pub fn applied(&self, op: Operation) -> usize {
        self.lineage.iter().filter(|e| e.op == op).count()
    }
}

/// Step 1: intent and core ingredients of the focal method.
pub fn run_step1_understanding(
    ctx: &StructuredFocalContext,
    session: &mut LlmSession<'_>,
    budget: usize,
) -> Result<IntentSummary, GenerationError> {
    let inputs = PromptInputs {
        focal: Some(ctx),
        ..PromptInputs::default()
    };
    let prompt = assemble_prompt(Step::Understand, &inputs, budget)?;
    let resp = session.ask(Step::Understand, &prompt.rendered)?;
    parse_intent(&resp.text).ok_or(GenerationError::EmptyResponse("understand"))
}

/// Step 2: the initial test file, taken from the first fenced block.
pub fn run_step2_generate(
    inputs: &PromptInputs<'_>,
    session: &mut LlmSession<'_>,
    budget: usize,
) -> Result<GeneratedTestFile, GenerationError> {
    let prompt = assemble_prompt(Step::Generate, inputs, budget)?;
    let resp = session.ask(Step::Generate, &prompt.rendered)?;
    let mut blocks = code_blocks(&resp.text).into_iter();
    let source = blocks.next().ok_or(GenerationError::NoCodeBlock)?;
    let extra = blocks.count();
    let note = (extra > 0).then(|| {
        log::info!(
            "{}: ignored {extra} additional code block(s)",
            session.focal_id()
        );
        format!("ignored {extra} additional code block(s)")
    });
    let mut notes: Vec<String> = note.into_iter().collect();
    if !prompt.truncated.is_empty() {
        notes.push(format!("prompt truncated: {:?}", prompt.truncated));
    }
    let note = (!notes.is_empty()).then(|| notes.join("; "));
    Ok(GeneratedTestFile::new(session.focal_id(), source, note))
}

/// Step 3: guideline-driven refinement. Failures keep the initial source;
/// the stage advances either way.
pub fn run_step3_refine(
    mut tc: GeneratedTestFile,
    guidelines: &[StagedGuideline],
    session: &mut LlmSession<'_>,
    budget: usize,
) -> Result<GeneratedTestFile, GenerationError> {
    if tc.stage != TestStage::Initial {
        return Err(GenerationError::StageOrder {
            op: Operation::Step3Refine,
            expected: TestStage::Initial,
            found: tc.stage,
        });
    }
    let note = if guidelines.is_empty() {
        Some("no guidelines configured; provider not called".to_string())
    } else {
        let inputs = PromptInputs {
            test_source: Some(&tc.source),
            guidelines,
            ..PromptInputs::default()
        };
        match assemble_prompt(Step::Refine, &inputs, budget)
            .map_err(GenerationError::from)
            .and_then(|p| Ok(session.ask(Step::Refine, &p.rendered)?))
        {
            Ok(resp) => match code_blocks(&resp.text).into_iter().next() {
                Some(src) => {
                    tc.source = src;
                    None
                }
                None => Some("response had no code block; kept initial file".to_string()),
            },
            Err(e) => Some(format!("refinement failed ({e}); kept initial file")),
        }
    };
    tc.record(Operation::Step3Refine, TestStage::Refined, note);
    Ok(tc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deps::{ConfigDependencies, CrossFileDependencies};
    use crate::generation::llm::DecodingSettings;
    use crate::generation::mock::ScriptedProvider;
    use crate::guidance::{guidelines_for, Stage};
    use crate::repo::{FocalMethod, LineSpan, Signature};

    fn ctx() -> StructuredFocalContext {
        StructuredFocalContext {
            focal: FocalMethod {
                id: "a_cpp__add_L1".into(),
                name: "add".into(),
                class_name: String::new(),
                signature: Signature {
                    return_type: "int".into(),
                    parameter_types: vec!["int".into()],
                },
                file: "a.cpp".into(),
                line_span: LineSpan { start: 1, end: 3 },
                body: "int add(int a) {\n  return a + 1;\n}".into(),
                cyclomatic_complexity: 1,
                kind: crate::repo::syntax::FunctionKind::Free,
                byte_start: 0,
            },
            std_imports: vec![],
            third_party_imports: vec![],
            user_imports: vec![],
            namespaces: vec![],
            sibling_signatures: vec![],
            class_fields: vec![],
        }
    }

    fn step2(reply: &str) -> (Result<GeneratedTestFile, GenerationError>, usize) {
        let p = ScriptedProvider::constant(reply);
        let mut s = LlmSession::new(&p, DecodingSettings::default(), "a_cpp__add_L1");
        let c = ctx();
        let deps = ConfigDependencies::default();
        let cross = CrossFileDependencies::default();
        let intent = IntentSummary::default();
        let inputs = PromptInputs {
            focal: Some(&c),
            config_deps: Some(&deps),
            cross_file: Some(&cross),
            intent: Some(&intent),
            ..PromptInputs::default()
        };
        (
            run_step2_generate(&inputs, &mut s, 10_000),
            s.exchanges.len(),
        )
    }

    #[test]
    fn step1_parses_or_falls_back() {
        let p = ScriptedProvider::constant("INTENT: adds one\nINGREDIENTS: int");
        let mut s = LlmSession::new(&p, DecodingSettings::default(), "x");
        let i = run_step1_understanding(&ctx(), &mut s, 10_000).unwrap();
        assert_eq!((i.intent.as_str(), i.ingredients.len()), ("adds one", 1));

        let p = ScriptedProvider::constant("It adds one.");
        let mut s = LlmSession::new(&p, DecodingSettings::default(), "x");
        let i = run_step1_understanding(&ctx(), &mut s, 10_000).unwrap();
        assert_eq!(i.intent, "It adds one.");
        assert!(i.ingredients.is_empty());

        let p = ScriptedProvider::constant("");
        let mut s = LlmSession::new(&p, DecodingSettings::default(), "x");
        assert!(matches!(
            run_step1_understanding(&ctx(), &mut s, 10_000),
            Err(GenerationError::EmptyResponse(_))
        ));
    }

    #[test]
    fn step2_extracts_first_block() {
        let (tc, calls) = step2("```cpp\nTEST(A, B) {}\n```");
        let tc = tc.unwrap();
        assert_eq!(calls, 1);
        assert_eq!(tc.source, "TEST(A, B) {}\n");
        assert_eq!(tc.stage, TestStage::Initial);
        assert_eq!(tc.lineage[0].op, Operation::Step2Generate);

        let tc = step2("Sure.\n```cpp\nfirst\n```\nAlso:\n```cpp\nsecond\n```\n")
            .0
            .unwrap();
        assert_eq!(tc.source, "first\n");
        assert!(tc.lineage[0]
            .note
            .as_deref()
            .unwrap()
            .contains("1 additional"));

        assert!(matches!(
            step2("no code").0,
            Err(GenerationError::NoCodeBlock)
        ));
        assert_eq!(tc.file_name(), "utgen_test_a_cpp__add_L1.cpp");
    }

    #[test]
    fn step3_refines_or_keeps_initial() {
        let g = guidelines_for(Stage::Refinement, &ConfigDependencies::default());
        let init = GeneratedTestFile::new("x", "int main() {}\n".into(), None);

        let p = ScriptedProvider::constant("```cpp\n// refined-marker\n{{echo}}\n```");
        let mut s = LlmSession::new(&p, DecodingSettings::default(), "x");
        let tc = run_step3_refine(init.clone(), &g, &mut s, 10_000).unwrap();
        assert_eq!(tc.source, "// refined-marker\nint main() {}\n");
        assert_eq!(tc.stage, TestStage::Refined);
        assert_eq!(tc.lineage.len(), 2);

        let p = ScriptedProvider::constant("Looks fine to me.");
        let mut s = LlmSession::new(&p, DecodingSettings::default(), "x");
        let tc = run_step3_refine(init.clone(), &g, &mut s, 10_000).unwrap();
        assert_eq!(tc.source, init.source);
        assert_eq!(tc.stage, TestStage::Refined);
        assert!(tc.lineage[1].note.is_some());

        let p = ScriptedProvider::constant("unused");
        let mut s = LlmSession::new(&p, DecodingSettings::default(), "x");
        let tc = run_step3_refine(init.clone(), &[], &mut s, 10_000).unwrap();
        assert_eq!(tc.source, init.source);
        assert!(p.requests().is_empty());

        assert!(matches!(
            run_step3_refine(tc, &g, &mut s, 10_000),
            Err(GenerationError::StageOrder { .. })
        ));
    }

    #[test]
    fn step3_provider_failure_keeps_initial() {
        let g = guidelines_for(Stage::Refinement, &ConfigDependencies::default());
        let init = GeneratedTestFile::new("x", "int main() {}\n".into(), None);
        let p = ScriptedProvider::from_json(r#"{"rules": [{"fail": "status"}]}"#).unwrap();
        let mut s = LlmSession::new(&p, DecodingSettings::default(), "x");
        let tc = run_step3_refine(init.clone(), &g, &mut s, 10_000).unwrap();
        assert_eq!(tc.source, init.source);
        assert_eq!(tc.stage, TestStage::Refined);
    }

    #[test]
    #[should_panic(expected = "stage regression")]
    fn stages_never_regress() {
        let mut tc = GeneratedTestFile::new("x", String::new(), None);
        tc.record(Operation::SyntaxRules, TestStage::RuleFixed, None);
        tc.record(Operation::Step3Refine, TestStage::Refined, None);
    }
}
