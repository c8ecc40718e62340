//! Compile, run and coverage export behind one interface so the orchestrator
//! can run with or without a real toolchain.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use serde_json::Value;

use super::Workspace;
use crate::generation::GeneratedTestFile;
use crate::metrics::{run_coverage_export, CoverageError};
use crate::postprocess::{
    build_project_objects, check_toolchain, compile_test, execute_test, CompileRequest,
    CompileResult, ExecLimits, ExecResult, PostprocessError, ProjectBuild,
};

pub trait BuildHarness: Sync {
    /// Writes the test file under the test directory and compiles it.
    fn compile(&self, tc: &GeneratedTestFile) -> Result<CompileResult, PostprocessError>;
    /// Runs the binary of the last successful compile of `focal_id`.
    fn execute(&self, focal_id: &str) -> Result<ExecResult, PostprocessError>;
    /// Export JSON for the last execution; `None` when not instrumented.
    fn coverage(&self, focal_id: &str) -> Option<Result<Value, CoverageError>>;
}

/// The configured compiler against objects of the project built once.
pub struct ToolchainHarness<'a> {
    ws: &'a Workspace,
    build: ProjectBuild,
    instrumented: bool,
    export_available: bool,
    bin_dir: PathBuf,
    run_dir: PathBuf,
}

impl<'a> ToolchainHarness<'a> {
    /// Fails when the compiler cannot be started. The project build happens
    /// here, before any worker starts.
    pub fn new(ws: &'a Workspace, instrumented: bool) -> Result<Self, PostprocessError> {
        let tc = &ws.config.toolchain;
        check_toolchain(&tc.cxx)?;
        let flavor = if instrumented { "cov" } else { "plain" };
        let out = ws.out_dir();
        let build = build_project_objects(
            &ws.project,
            &ws.deps,
            tc,
            &out.join("obj").join(flavor),
            instrumented,
        )?;
        let export_available = instrumented && tc.coverage_export.iter().all(|c| tool_available(c));
        Ok(Self {
            ws,
            build,
            instrumented,
            export_available,
            bin_dir: out.join("bin").join(flavor),
            run_dir: out.join("run"),
        })
    }

    pub fn project_build(&self) -> &ProjectBuild {
        &self.build
    }

    /// False when instrumented but the export tools are missing.
    pub fn coverage_available(&self) -> bool {
        self.export_available
    }

    fn scratch(&self, focal_id: &str) -> PathBuf {
        self.run_dir.join(focal_id)
    }
}

fn tool_available(command: &str) -> bool {
    command.split_whitespace().next().is_some_and(|exe| {
        Command::new(exe)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
    })
}

impl BuildHarness for ToolchainHarness<'_> {
    fn compile(&self, tc: &GeneratedTestFile) -> Result<CompileResult, PostprocessError> {
        let req = CompileRequest {
            index: &self.ws.project.index,
            deps: &self.ws.deps,
            toolchain: &self.ws.config.toolchain,
            build: &self.build,
            bin_dir: &self.bin_dir,
            coverage: self.instrumented,
        };
        compile_test(tc, &req).map(|(r, _)| r)
    }

    fn execute(&self, focal_id: &str) -> Result<ExecResult, PostprocessError> {
        let workdir = self.scratch(focal_id);
        let profraw = workdir.join("default.profraw");
        let _ = std::fs::remove_file(&profraw);
        let limits = ExecLimits {
            timeout: Duration::from_secs(self.ws.config.toolchain.exec_timeout_secs),
            workdir,
            env: vec![("LLVM_PROFILE_FILE".into(), profraw.display().to_string())],
        };
        execute_test(&self.bin_dir.join(focal_id), &limits)
    }

    fn coverage(&self, focal_id: &str) -> Option<Result<Value, CoverageError>> {
        if !self.instrumented {
            return None;
        }
        if !self.export_available {
            return Some(Err(CoverageError::Export(
                "coverage export tools not found".into(),
            )));
        }
        let dir = self.scratch(focal_id);
        Some(run_coverage_export(
            &self.ws.config.toolchain.coverage_export,
            &self.bin_dir.join(focal_id),
            &dir.join("default.profraw"),
            &dir.join("merged.profdata"),
        ))
    }
}

/// Absolute path of the generated file for `tc`.
pub fn test_file_abs(ws: &Workspace, tc: &GeneratedTestFile) -> PathBuf {
    ws.project
        .index
        .abs(&ws.project.index.test_dir.join(tc.file_name()))
}

pub(crate) fn write_test_file(path: &Path, source: &str) -> Result<(), PostprocessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PostprocessError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, source).map_err(|e| PostprocessError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
