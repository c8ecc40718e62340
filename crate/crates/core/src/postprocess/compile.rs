//! Standalone compilation of a test file against the project's objects.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PostprocessError;
use crate::config::ToolchainConfig;
use crate::deps::ConfigDependencies;
use crate::generation::GeneratedTestFile;
use crate::repo::{Project, RepoIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompileStatus {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileResult {
    pub status: CompileStatus,
    /// Non-empty on failure.
    pub diagnostics: Vec<String>,
    pub command: Vec<String>,
    pub duration: Duration,
}

impl CompileResult {
    pub fn ok(&self) -> bool {
        self.status == CompileStatus::Success
    }
}

/// Fails when the compiler driver cannot be started.
pub fn check_toolchain(cxx: &str) -> Result<(), PostprocessError> {
    match Command::new(cxx).arg("--version").output() {
        Ok(o) if o.status.success() => Ok(()),
        Ok(o) => Err(PostprocessError::ToolchainMissing(format!(
            "{cxx} --version exited with {}",
            o.status
        ))),
        Err(e) => Err(PostprocessError::ToolchainMissing(format!("{cxx}: {e}"))),
    }
}

/// `-std=c++NN` from the project configuration, else the configured default.
pub fn std_flag(deps: &ConfigDependencies, tc: &ToolchainConfig) -> String {
    let v = deps.cxx_standard.as_deref().unwrap_or(&tc.default_std);
    format!("-std=c++{v}")
}

/// Link flags for the libraries the project configuration names.
pub fn link_flags(deps: &ConfigDependencies) -> Vec<String> {
    let mut v = Vec::new();
    if deps.gmock_available() {
        v.push("-lgmock".to_string());
    }
    if deps.gtest_available {
        v.extend(["-lgtest_main".to_string(), "-lgtest".to_string()]);
    }
    if deps.gtest_available || deps.has_library("Threads") || deps.has_library("pthread") {
        v.push("-pthread".to_string());
    }
    v
}

pub fn include_flags(index: &RepoIndex) -> Vec<String> {
    index
        .include_dirs()
        .iter()
        .map(|d| format!("-I{}", index.abs(d).display()))
        .collect()
}

/// Object files of the project's translation units, built once per run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectBuild {
    pub objects: Vec<PathBuf>,
    /// Sources that failed to compile, with the first diagnostic line.
    pub skipped: Vec<(PathBuf, String)>,
}

/// Compiles every non-test source that does not define `main` into
/// `obj_dir`. Unbuildable sources are skipped with a note.
pub fn build_project_objects(
    project: &Project,
    deps: &ConfigDependencies,
    tc: &ToolchainConfig,
    obj_dir: &Path,
    coverage: bool,
) -> Result<ProjectBuild, PostprocessError> {
    fs::create_dir_all(obj_dir).map_err(|e| PostprocessError::io(obj_dir, e))?;
    let index = &project.index;
    let sources: Vec<&PathBuf> = index
        .source_files
        .iter()
        .filter(|s| !index.is_in_test_dir(s))
        .filter(|s| {
            project.file(s).is_ok_and(|f| {
                f.outline.as_ref().is_ok_and(|o| {
                    !o.functions
                        .iter()
                        .any(|f| f.name == "main" && f.class_name.is_none())
                })
            })
        })
        .collect();
    let results: Vec<(PathBuf, Result<PathBuf, String>)> = sources
        .par_iter()
        .map(|rel| {
            let obj = obj_dir.join(format!(
                "{}.o",
                rel.to_string_lossy().replace(['/', '\\'], "__")
            ));
            let mut cmd = vec![tc.cxx.clone(), std_flag(deps, tc)];
            if coverage {
                cmd.extend(tc.coverage_flags.iter().cloned());
            }
            cmd.extend(include_flags(index));
            cmd.extend(tc.extra_flags.iter().cloned());
            cmd.extend([
                "-c".into(),
                index.abs(rel).display().to_string(),
                "-o".into(),
                obj.display().to_string(),
            ]);
            let out = run(&cmd);
            let res = match out {
                Ok((true, _)) => Ok(obj),
                Ok((false, diag)) => Err(diag.into_iter().next().unwrap_or_default()),
                Err(e) => Err(e),
            };
            ((*rel).clone(), res)
        })
        .collect();
    let mut build = ProjectBuild::default();
    for (rel, r) in results {
        match r {
            Ok(o) => build.objects.push(o),
            Err(d) => {
                log::warn!("skipping {}: {d}", rel.display());
                build.skipped.push((rel, d));
            }
        }
    }
    Ok(build)
}

fn run(cmd: &[String]) -> Result<(bool, Vec<String>), String> {
    let out = Command::new(&cmd[0])
        .args(&cmd[1..])
        .output()
        .map_err(|e| format!("{}: {e}", cmd[0]))?;
    let diag = String::from_utf8_lossy(&out.stderr)
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect();
    Ok((out.status.success(), diag))
}

/// Values substituted into the compile template.
#[derive(Debug, Clone, Default)]
pub struct CommandParts {
    pub cxx: String,
    pub std: String,
    /// Empty unless instrumenting for coverage.
    pub coverage: Vec<String>,
    pub includes: Vec<String>,
    pub test_file: PathBuf,
    pub objects: Vec<PathBuf>,
    pub libs: Vec<String>,
    pub output: PathBuf,
    pub extra: Vec<String>,
}

/// Expands the compile template. Placeholders standing alone expand to zero
/// or more arguments; extra flags are appended.
pub fn render_command(template: &str, p: &CommandParts) -> Vec<String> {
    let mut cmd = Vec::new();
    for word in template.split_whitespace() {
        match word {
            "{cxx}" => cmd.push(p.cxx.clone()),
            "{std}" => cmd.push(p.std.clone()),
            "{coverage}" => cmd.extend(p.coverage.iter().cloned()),
            "{includes}" => cmd.extend(p.includes.iter().cloned()),
            "{test_file}" => cmd.push(p.test_file.display().to_string()),
            "{objects}" => cmd.extend(p.objects.iter().map(|o| o.display().to_string())),
            "{libs}" => cmd.extend(p.libs.iter().cloned()),
            "{output}" => cmd.push(p.output.display().to_string()),
            w => cmd.push(w.to_string()),
        }
    }
    cmd.extend(p.extra.iter().cloned());
    cmd
}

#[derive(Debug, Clone)]
pub struct CompileRequest<'a> {
    pub index: &'a RepoIndex,
    pub deps: &'a ConfigDependencies,
    pub toolchain: &'a ToolchainConfig,
    pub build: &'a ProjectBuild,
    /// Directory for the output binary.
    pub bin_dir: &'a Path,
    pub coverage: bool,
}

/// Writes the test under the test directory and compiles it to
/// `bin_dir/<focal-id>`.
pub fn compile_test(
    tc: &GeneratedTestFile,
    req: &CompileRequest<'_>,
) -> Result<(CompileResult, PathBuf), PostprocessError> {
    let rel = req.index.test_dir.join(tc.file_name());
    let test_file = req.index.abs(&rel);
    if let Some(dir) = test_file.parent() {
        fs::create_dir_all(dir).map_err(|e| PostprocessError::io(dir, e))?;
    }
    fs::write(&test_file, &tc.source).map_err(|e| PostprocessError::io(&test_file, e))?;
    fs::create_dir_all(req.bin_dir).map_err(|e| PostprocessError::io(req.bin_dir, e))?;
    let output = req.bin_dir.join(&tc.focal_id);
    let parts = CommandParts {
        cxx: req.toolchain.cxx.clone(),
        std: std_flag(req.deps, req.toolchain),
        coverage: if req.coverage {
            req.toolchain.coverage_flags.clone()
        } else {
            Vec::new()
        },
        includes: include_flags(req.index),
        test_file: test_file.clone(),
        objects: req.build.objects.clone(),
        libs: link_flags(req.deps),
        output: output.clone(),
        extra: req.toolchain.extra_flags.clone(),
    };
    let cmd = render_command(&req.toolchain.compile_template, &parts);
    let start = Instant::now();
    let (ok, diagnostics) = run(&cmd).map_err(PostprocessError::ToolchainMissing)?;
    let duration = start.elapsed();
    // Paths relative to the project root keep diagnostics location-independent.
    let root = format!("{}/", req.index.root.display());
    let mut diagnostics: Vec<String> = diagnostics
        .into_iter()
        .map(|d| d.replace(&root, ""))
        .collect();
    if !ok && diagnostics.is_empty() {
        diagnostics.push("compiler failed without diagnostics".into());
    }
    Ok((
        CompileResult {
            status: if ok {
                CompileStatus::Success
            } else {
                CompileStatus::Failure
            },
            diagnostics: if ok { Vec::new() } else { diagnostics },
            command: cmd,
            duration,
        },
        output,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deps::Library;

    #[test]
    fn standard_flag_from_configuration() {
        let tc = ToolchainConfig::default();
        let deps = ConfigDependencies {
            cxx_standard: Some("11".into()),
            ..ConfigDependencies::default()
        };
        assert_eq!(std_flag(&deps, &tc), "-std=c++11");
        assert_eq!(std_flag(&ConfigDependencies::default(), &tc), "-std=c++17");
    }

    #[test]
    fn template_snapshot() {
        let tc = ToolchainConfig::default();
        let parts = CommandParts {
            cxx: tc.cxx.clone(),
            std: "-std=c++11".into(),
            coverage: tc.coverage_flags.clone(),
            includes: vec!["-I/r/src".into()],
            test_file: "/r/test/t.cpp".into(),
            objects: vec!["/o/a.o".into()],
            libs: vec!["-lgtest".into()],
            output: "/b/t".into(),
            extra: vec![],
        };
        let cmd = render_command(&tc.compile_template, &parts);
        assert_eq!(
            cmd.join(" "),
            "clang++ -std=c++11 -fprofile-instr-generate -fcoverage-mapping -I/r/src /r/test/t.cpp /o/a.o -lgtest -o /b/t"
        );
        let parts = CommandParts {
            cxx: tc.cxx.clone(),
            std: "-std=c++17".into(),
            test_file: "t.cpp".into(),
            output: "t".into(),
            ..CommandParts::default()
        };
        let cmd = render_command(&tc.compile_template, &parts);
        assert_eq!(cmd.join(" "), "clang++ -std=c++17 t.cpp -o t");
    }

    #[test]
    fn gtest_links_main_and_threads() {
        let lib = |n: &str| Library {
            name: n.into(),
            version: None,
            provenance: vec![],
        };
        let deps = ConfigDependencies {
            libraries: vec![lib("gtest"), lib("gmock")],
            gtest_available: true,
            ..ConfigDependencies::default()
        };
        assert_eq!(
            link_flags(&deps),
            ["-lgmock", "-lgtest_main", "-lgtest", "-pthread"]
        );
        assert!(link_flags(&ConfigDependencies::default()).is_empty());
    }

    #[test]
    fn missing_compiler_is_reported() {
        assert!(matches!(
            check_toolchain("definitely-not-a-compiler-xyz"),
            Err(PostprocessError::ToolchainMissing(_))
        ));
    }
}
