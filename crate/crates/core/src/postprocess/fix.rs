//! Phase 3: one LLM round fed by compile diagnostics only.

use super::compile::{CompileResult, CompileStatus};
use super::PostprocessError;
use crate::generation::{
    assemble_prompt, code_blocks, GeneratedTestFile, LlmSession, Operation, PromptInputs, Step,
    TestStage,
};

/// Takes only a `CompileResult`, so no execution output can reach the prompt.
pub fn llm_fix(
    mut tc: GeneratedTestFile,
    compile: &CompileResult,
    session: &mut LlmSession<'_>,
    budget: usize,
) -> Result<GeneratedTestFile, PostprocessError> {
    if compile.status != CompileStatus::Failure {
        return Err(PostprocessError::Precondition(
            "llm_fix needs a failed compile".into(),
        ));
    }
    if tc.applied(Operation::LlmFix) > 0 {
        return Err(PostprocessError::Precondition(
            "llm_fix already ran for this file".into(),
        ));
    }
    if tc.applied(Operation::CompileRules) == 0 {
        return Err(PostprocessError::Precondition(
            "llm_fix runs only after compile rules".into(),
        ));
    }
    let inputs = PromptInputs {
        test_source: Some(&tc.source),
        diagnostics: &compile.diagnostics,
        ..PromptInputs::default()
    };
    let outcome = assemble_prompt(Step::Fix, &inputs, budget)
        .map_err(|e| e.to_string())
        .and_then(|p| {
            session
                .ask(Step::Fix, &p.rendered)
                .map_err(|e| e.to_string())
        });
    let note = match outcome {
        Ok(resp) => match code_blocks(&resp.text).into_iter().next() {
            Some(src) => {
                tc.source = src;
                None
            }
            None => Some("response had no code block; file unchanged".to_string()),
        },
        Err(e) => Some(format!("fix failed ({e}); file unchanged")),
    };
    tc.record(Operation::LlmFix, TestStage::LlmFixed, note);
    Ok(tc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::{DecodingSettings, ScriptedProvider};
    use std::time::Duration;

    fn failed() -> CompileResult {
        CompileResult {
            status: CompileStatus::Failure,
            diagnostics: vec!["t.cpp:1:9: error: expected expression".into()],
            command: vec![],
            duration: Duration::ZERO,
        }
    }

    fn after_phase_two() -> GeneratedTestFile {
        let mut tc = GeneratedTestFile::new("x", "int x = ;\n".into(), None);
        tc.record(Operation::SyntaxRules, TestStage::RuleFixed, None);
        tc.record(Operation::CompileRules, TestStage::RuleFixed, None);
        tc
    }

    #[test]
    fn replaces_source_once() {
        let p = ScriptedProvider::constant("```cpp\nint x = 1;\n```");
        let mut s = LlmSession::new(&p, DecodingSettings::default(), "x");
        let tc = llm_fix(after_phase_two(), &failed(), &mut s, 10_000).unwrap();
        assert_eq!(tc.source, "int x = 1;\n");
        assert_eq!(tc.stage, TestStage::LlmFixed);
        let prompt = p.requests()[0].prompt().to_string();
        assert!(prompt.contains("expected expression") && prompt.contains("int x = ;"));
        assert!(matches!(
            llm_fix(tc, &failed(), &mut s, 10_000),
            Err(PostprocessError::Precondition(_))
        ));
        assert_eq!(p.requests().len(), 1);
    }

    #[test]
    fn requires_phase_two_first() {
        let p = ScriptedProvider::constant("```cpp\n```");
        let mut s = LlmSession::new(&p, DecodingSettings::default(), "x");
        let tc = GeneratedTestFile::new("x", "int x = ;\n".into(), None);
        assert!(llm_fix(tc, &failed(), &mut s, 10_000).is_err());
        assert!(p.requests().is_empty());
    }

    #[test]
    fn provider_failure_keeps_file() {
        let p = ScriptedProvider::from_json(r#"{"rules": [{"fail": "transport"}]}"#).unwrap();
        let mut s = LlmSession::new(&p, DecodingSettings::default(), "x");
        let tc = llm_fix(after_phase_two(), &failed(), &mut s, 10_000).unwrap();
        assert_eq!(tc.source, "int x = ;\n");
        assert_eq!(tc.stage, TestStage::LlmFixed);
    }
}
