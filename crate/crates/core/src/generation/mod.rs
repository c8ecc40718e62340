//! Prompt assembly and the three LLM steps: understand, generate, refine.

pub mod extract;
pub mod llm;
pub mod mock;
pub mod prompt;
pub mod steps;

pub use extract::{code_blocks, parse_intent, IntentSummary};
pub use llm::{
    ChatMessage, DecodingSettings, Exchange, HttpChatClient, LlmError, LlmProvider, LlmRequest,
    LlmResponse, LlmSession, Role, Step, Usage,
};
pub use mock::{Script, ScriptRule, ScriptedProvider};
pub use prompt::{
    assemble_prompt, estimate_tokens, ContextSection, PromptBundle, PromptError, PromptInputs,
    SectionKind,
};
pub use steps::{
    run_step1_understanding, run_step2_generate, run_step3_refine, GeneratedTestFile,
    GenerationError, LineageEntry, Operation, TestStage,
};
