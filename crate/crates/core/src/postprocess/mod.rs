//! Three-phase repair of generated tests, plus compilation and execution.

pub mod compile;
pub mod count;
pub mod exec;
pub mod fix;
pub mod rules;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use compile::{
    build_project_objects, check_toolchain, compile_test, render_command, CommandParts,
    CompileRequest, CompileResult, CompileStatus, ProjectBuild,
};
pub use count::count_test_cases;
pub use exec::{execute_test, ExecLimits, ExecResult, ExecStatus};
pub use fix::llm_fix;
pub use rules::{
    apply_compile_rules, apply_syntax_rules, focal_namespaces, FixRule, TestLayout, FIX_RULES,
};

#[derive(Debug, Error)]
pub enum PostprocessError {
    #[error("C++ toolchain unavailable: {0}")]
    ToolchainMissing(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl PostprocessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
