//! Fixture plumbing shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::Value;
use utgen_core::generation::{GeneratedTestFile, ScriptedProvider};
use utgen_core::kb::HashingEmbedder;
use utgen_core::metrics::{CoverageError, MetricsReport};
use utgen_core::pipeline::{
    evaluate, generate, BuildHarness, GenerateOptions, Manifest, Providers, ToolchainHarness,
    Workspace,
};
use utgen_core::postprocess::{
    CompileResult, CompileStatus, ExecResult, ExecStatus, PostprocessError,
};
use utgen_core::RunConfig;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Copies `repos/<name>` to `<tmp>/<name>` so runs never touch the fixture.
pub fn copy_repo(name: &str) -> (tempfile::TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let src = fixtures().join("repos").join(name);
    let dst = tmp.path().join(name);
    for e in walkdir::WalkDir::new(&src) {
        let e = e.unwrap();
        let to = dst.join(e.path().strip_prefix(&src).unwrap());
        if e.file_type().is_dir() {
            std::fs::create_dir_all(&to).unwrap();
        } else {
            std::fs::copy(e.path(), &to).unwrap();
        }
    }
    (tmp, dst)
}

pub fn script(name: &str) -> ScriptedProvider {
    ScriptedProvider::from_file(&fixtures().join("scripts").join(name)).unwrap()
}

pub fn config(root: &Path) -> RunConfig {
    let mut cfg = RunConfig::for_root(root);
    cfg.features.save_transcripts = true;
    cfg
}

pub fn toolchain_present() -> bool {
    utgen_core::postprocess::check_toolchain(&RunConfig::default().toolchain.cxx).is_ok()
}

/// Everything one full run leaves behind.
pub struct RunOutput {
    pub manifest: Manifest,
    pub report: MetricsReport,
    pub report_json: String,
    /// (file name, contents) of every generated test file, sorted.
    pub test_files: Vec<(String, String)>,
}

/// `generate` then `evaluate`, with the real toolchain or the stub.
pub fn full_run(root: &Path, provider: &ScriptedProvider, real_toolchain: bool) -> RunOutput {
    let ws = Workspace::open(config(root)).unwrap();
    let embedder = HashingEmbedder::new(ws.config.embedding.dimension);
    let providers = Providers {
        llm: provider,
        embedder: &embedder,
    };
    let opts = GenerateOptions::default();
    let (manifest, report) = if real_toolchain {
        let h = ToolchainHarness::new(&ws, false).unwrap();
        let m = generate(&ws, &providers, Some(&h), &opts).unwrap();
        let h = ToolchainHarness::new(&ws, true).unwrap();
        (m, evaluate(&ws, &h).unwrap())
    } else {
        let h = StubHarness::new(&ws);
        let m = generate(&ws, &providers, Some(&h), &opts).unwrap();
        (m, evaluate(&ws, &h).unwrap())
    };
    let report_json = report.to_json();
    RunOutput {
        manifest,
        report,
        report_json,
        test_files: generated_files(root),
    }
}

pub fn generated_files(root: &Path) -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = std::fs::read_dir(root.join("test"))
        .map(|rd| {
            rd.filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|p| {
                    p.file_name()
                        .unwrap()
                        .to_string_lossy()
                        .starts_with("utgen_test_")
                })
                .map(|p| {
                    (
                        p.file_name().unwrap().to_string_lossy().into_owned(),
                        std::fs::read_to_string(&p).unwrap(),
                    )
                })
                .collect()
        })
        .unwrap_or_default();
    v.sort();
    v
}

/// Stands in for the compiler with fixed text checks that mirror clang's
/// verdicts on the scripted fixture files. Executions always pass.
pub struct StubHarness {
    root: PathBuf,
    test_dir: PathBuf,
    headers: Vec<String>,
}

impl StubHarness {
    pub fn new(ws: &Workspace) -> Self {
        let idx = &ws.project.index;
        Self {
            root: idx.root.clone(),
            test_dir: idx.test_dir.clone(),
            headers: idx
                .header_files
                .iter()
                .map(|h| h.file_name().unwrap().to_string_lossy().into_owned())
                .collect(),
        }
    }

    pub fn diagnose(&self, src: &str) -> Vec<String> {
        let mut d = Vec::new();
        let opens = src.matches('{').count();
        let closes = src.matches('}').count();
        if opens != closes {
            d.push("error: expected '}'".to_string());
        }
        for line in src.lines() {
            let l = line.trim();
            if let Some(rest) = l.strip_prefix("#include \"") {
                let name = rest.trim_end_matches('"');
                if !self.headers.iter().any(|h| h == name) {
                    d.push(format!("fatal error: '{name}' file not found"));
                    return d;
                }
            }
        }
        if src.matches("int main(").count() > 1 {
            d.push("error: redefinition of 'main'".to_string());
        }
        let unqualified = src.lines().any(|l| l.trim_start().starts_with("Node "));
        if unqualified && !src.contains("using namespace YAML;") {
            d.push("error: unknown type name 'Node'; did you mean 'YAML::Node'?".to_string());
        }
        if src.contains("int t = YAML::Tag") {
            d.push("error: no viable conversion from 'std::string' to 'int'".to_string());
        }
        if src.contains("n[0] = 5") {
            d.push("error: no viable overloaded '='".to_string());
        }
        d
    }
}

impl BuildHarness for StubHarness {
    fn compile(&self, tc: &GeneratedTestFile) -> Result<CompileResult, PostprocessError> {
        let rel = self.test_dir.join(tc.file_name());
        let path = self.root.join(&rel);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &tc.source).unwrap();
        let diagnostics: Vec<String> = self
            .diagnose(&tc.source)
            .into_iter()
            .map(|m| format!("{}:1:1: {m}", rel.display()))
            .collect();
        Ok(CompileResult {
            status: if diagnostics.is_empty() {
                CompileStatus::Success
            } else {
                CompileStatus::Failure
            },
            diagnostics,
            command: vec!["stub".into()],
            duration: Duration::ZERO,
        })
    }

    fn execute(&self, _focal_id: &str) -> Result<ExecResult, PostprocessError> {
        Ok(ExecResult {
            status: ExecStatus::Pass,
            stdout: String::new(),
            stderr: String::new(),
            duration: Duration::ZERO,
        })
    }

    fn coverage(&self, _focal_id: &str) -> Option<Result<Value, CoverageError>> {
        None
    }
}
