//! Deterministic scripted provider for tests and offline runs.
//!
//! A script is JSON:
//!
//! ```json
//! {
//!   "rules": [
//!     {"step": "understand", "focal": "*parse*", "text": "INTENT: ...\nINGREDIENTS: a, b"},
//!     {"step": "refine", "text": "```cpp\n// refined\n{{echo}}\n```"},
//!     {"step": "fix", "fail": "transport"}
//!   ],
//!   "fallback": "no rule matched"
//! }
//! ```
//!
//! The first rule whose `step`, `focal` glob and `contains` substring all
//! match answers. In `text`, `{{echo}}` expands to the body of the first
//! fenced block of the prompt and `{{focal_id}}` to the request's focal id.

use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::extract::code_blocks;
use super::llm::{LlmError, LlmProvider, LlmRequest, LlmResponse, Step, Usage};
use crate::net::HttpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedFailure {
    Transport,
    Status,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptRule {
    pub step: Option<Step>,
    /// Glob over the focal id.
    pub focal: Option<String>,
    /// Substring of the prompt.
    pub contains: Option<String>,
    #[serde(default)]
    pub text: String,
    pub fail: Option<ScriptedFailure>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    pub rules: Vec<ScriptRule>,
    pub fallback: Option<String>,
}

struct CompiledRule {
    rule: ScriptRule,
    focal: Option<glob::Pattern>,
}

pub struct ScriptedProvider {
    rules: Vec<CompiledRule>,
    fallback: Option<String>,
    log: Mutex<Vec<LlmRequest>>,
}

impl ScriptedProvider {
    pub fn new(script: Script) -> Result<Self, LlmError> {
        let rules = script
            .rules
            .into_iter()
            .map(|rule| {
                let focal = rule
                    .focal
                    .as_deref()
                    .map(glob::Pattern::new)
                    .transpose()
                    .map_err(|e| LlmError::Script(format!("bad focal glob: {e}")))?;
                Ok(CompiledRule { rule, focal })
            })
            .collect::<Result<_, LlmError>>()?;
        Ok(Self {
            rules,
            fallback: script.fallback,
            log: Mutex::new(Vec::new()),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let script: Script =
            serde_json::from_str(text).map_err(|e| LlmError::Script(e.to_string()))?;
        Self::new(script)
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Script(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Answers every request with the same text.
    pub fn constant(text: &str) -> Self {
        Self::new(Script {
            rules: Vec::new(),
            fallback: Some(text.to_string()),
        })
        .expect("no globs to compile")
    }

    /// Every request received so far, in arrival order.
    pub fn requests(&self) -> Vec<LlmRequest> {
        self.log.lock().expect("request log poisoned").clone()
    }
}

impl LlmProvider for ScriptedProvider {
    fn id(&self) -> String {
        "scripted".into()
    }

    fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        self.log
            .lock()
            .expect("request log poisoned")
            .push(req.clone());
        let prompt = req.prompt();
        let hit = self.rules.iter().find(|c| {
            c.rule.step.is_none_or(|s| s == req.step)
                && c.focal.as_ref().is_none_or(|g| g.matches(&req.focal_id))
                && c.rule
                    .contains
                    .as_deref()
                    .is_none_or(|s| prompt.contains(s))
        });
        let text = match hit {
            Some(c) => match c.rule.fail {
                Some(ScriptedFailure::Transport) => {
                    return Err(HttpError::Transport("scripted transport failure".into()).into())
                }
                Some(ScriptedFailure::Status) => {
                    return Err(HttpError::Status {
                        status: 500,
                        body: "scripted status failure".into(),
                    }
                    .into())
                }
                None => &c.rule.text,
            },
            None => self.fallback.as_ref().ok_or_else(|| {
                LlmError::Script(format!(
                    "no rule for {} step of {}",
                    req.step.name(),
                    req.focal_id
                ))
            })?,
        };
        let echo = code_blocks(prompt).into_iter().next().unwrap_or_default();
        let text = text
            .replace("{{echo}}", echo.trim_end_matches('\n'))
            .replace("{{focal_id}}", &req.focal_id);
        Ok(LlmResponse {
            usage: Usage {
                prompt_tokens: prompt.len().div_ceil(4) as u64,
                completion_tokens: text.len().div_ceil(4) as u64,
            },
            text,
            metadata: Default::default(),
        })
    }
}
