use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::LlmConfig;
use crate::net::{HttpError, JsonClient};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("provider returned no choices")]
    NoChoices,
    #[error("scripted provider: {0}")]
    Script(String),
}

impl LlmError {
    pub fn is_transport(&self) -> bool {
        matches!(self, Self::Http(e) if e.is_transport())
    }
}

/// Which prompt a request carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Understand,
    Generate,
    Refine,
    Fix,
}

impl Step {
    pub fn name(self) -> &'static str {
        match self {
            Self::Understand => "understand",
            Self::Generate => "generate",
            Self::Refine => "refine",
            Self::Fix => "fix",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

/// Decoding parameters shared by every request of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingSettings {
    pub model: String,
    pub temperature: f64,
    pub choice_count: u32,
    pub max_output_tokens: u32,
}

impl From<&LlmConfig> for DecodingSettings {
    fn from(c: &LlmConfig) -> Self {
        Self {
            model: c.model.clone(),
            temperature: c.temperature,
            choice_count: c.choice_count,
            max_output_tokens: c.max_output_tokens,
        }
    }
}

impl Default for DecodingSettings {
    fn default() -> Self {
        Self::from(&LlmConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub provider: String,
    pub model: String,
    pub focal_id: String,
    pub step: Step,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub choice_count: u32,
}

impl LlmRequest {
    /// Content of the last user message.
    pub fn prompt(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map_or("", |m| m.content.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    pub usage: Usage,
    pub metadata: BTreeMap<String, String>,
}

/// A chat-completion backend. Implementations must tolerate concurrent calls.
pub trait LlmProvider: Send + Sync {
    fn id(&self) -> String;
    fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError>;
}

/// OpenAI-compatible chat-completions endpoint. Transport errors are retried
/// by the underlying client; HTTP status errors are not.
pub struct HttpChatClient {
    endpoint: String,
    api_key: Option<String>,
    client: JsonClient,
}

impl HttpChatClient {
    pub fn new(
        endpoint: &str,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<Self, LlmError> {
        Ok(Self {
            endpoint: endpoint.to_string(),
            api_key,
            client: JsonClient::new(timeout)?,
        })
    }

    pub fn from_config(cfg: &LlmConfig, api_key: Option<String>) -> Result<Self, LlmError> {
        Self::new(
            &cfg.endpoint,
            api_key,
            Duration::from_secs(cfg.request_timeout_secs),
        )
    }
}

impl LlmProvider for HttpChatClient {
    fn id(&self) -> String {
        format!("http:{}", self.endpoint)
    }

    fn complete(&self, r: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let body = json!({
            "model": r.model,
            "messages": r.messages,
            "temperature": r.temperature,
            "max_tokens": r.max_output_tokens,
            "n": r.choice_count,
        });
        let resp = self
            .client
            .post(&self.endpoint, self.api_key.as_deref(), &body)?;
        parse_chat_response(&resp)
    }
}

/// Top-1 choice of a chat-completions response body.
pub fn parse_chat_response(v: &Value) -> Result<LlmResponse, LlmError> {
    let choice = v["choices"].get(0).ok_or(LlmError::NoChoices)?;
    let text = choice["message"]["content"]
        .as_str()
        .ok_or_else(|| HttpError::Decode("choice has no message content".into()))?
        .to_string();
    let mut metadata = BTreeMap::new();
    for (key, val) in [
        ("id", &v["id"]),
        ("model", &v["model"]),
        ("finish_reason", &choice["finish_reason"]),
    ] {
        if let Some(s) = val.as_str() {
            metadata.insert(key.to_string(), s.to_string());
        }
    }
    Ok(LlmResponse {
        text,
        usage: Usage {
            prompt_tokens: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
            completion_tokens: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
        },
        metadata,
    })
}

/// One request and its outcome, as persisted in transcripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub request: LlmRequest,
    pub response: Option<LlmResponse>,
    pub error: Option<String>,
}

/// Issues requests for one focal method and records every exchange.
pub struct LlmSession<'a> {
    provider: &'a dyn LlmProvider,
    settings: DecodingSettings,
    focal_id: String,
    pub exchanges: Vec<Exchange>,
}

pub const SYSTEM_PROMPT: &str =
    "You are an expert C++ developer who writes precise, compilable unit tests.";

impl<'a> LlmSession<'a> {
    pub fn new(provider: &'a dyn LlmProvider, settings: DecodingSettings, focal_id: &str) -> Self {
        Self {
            provider,
            settings,
            focal_id: focal_id.to_string(),
            exchanges: Vec::new(),
        }
    }

    pub fn focal_id(&self) -> &str {
        &self.focal_id
    }

    pub fn ask(&mut self, step: Step, prompt: &str) -> Result<LlmResponse, LlmError> {
        let request = LlmRequest {
            provider: self.provider.id(),
            model: self.settings.model.clone(),
            focal_id: self.focal_id.clone(),
            step,
            messages: vec![
                ChatMessage {
                    role: Role::System,
                    content: SYSTEM_PROMPT.into(),
                },
                ChatMessage {
                    role: Role::User,
                    content: prompt.into(),
                },
            ],
            temperature: self.settings.temperature,
            max_output_tokens: self.settings.max_output_tokens,
            choice_count: self.settings.choice_count,
        };
        let outcome = self.provider.complete(&request);
        self.exchanges.push(Exchange {
            request,
            response: outcome.as_ref().ok().cloned(),
            error: outcome.as_ref().err().map(|e| e.to_string()),
        });
        outcome
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chat_response_takes_first_choice() {
        let v = json!({
            "id": "c1",
            "model": "m",
            "choices": [
                {"message": {"role": "assistant", "content": "one"}, "finish_reason": "stop"},
                {"message": {"role": "assistant", "content": "two"}}
            ],
            "usage": {"prompt_tokens": 7, "completion_tokens": 2}
        });
        let r = parse_chat_response(&v).unwrap();
        assert_eq!(r.text, "one");
        assert_eq!(r.usage.prompt_tokens, 7);
        assert_eq!(r.metadata["finish_reason"], "stop");
        assert!(matches!(
            parse_chat_response(&json!({"choices": []})),
            Err(LlmError::NoChoices)
        ));
    }

    #[test]
    fn unreachable_endpoint_is_a_transport_error() {
        let mut c = HttpChatClient::new("http://127.0.0.1:9/v1/chat", None, Duration::from_secs(2))
            .unwrap();
        c.client.retry.base_delay = Duration::from_millis(1);
        let mut s = LlmSession::new(&c, DecodingSettings::default(), "f");
        let err = s.ask(Step::Understand, "hi").unwrap_err();
        assert!(err.is_transport(), "{err}");
        assert_eq!(s.exchanges.len(), 1);
        assert!(s.exchanges[0].error.is_some());
    }
}
