//! Lexical CMake scan for linked libraries and the C++ standard.
//! Variables are never expanded.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::repo::RepoIndex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub file: PathBuf,
    /// Line of the command keyword, 1-based.
    pub line: usize,
    /// The whole command, whitespace collapsed.
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Library {
    pub name: String,
    pub version: Option<String>,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigDependencies {
    pub libraries: Vec<Library>,
    pub cxx_standard: Option<String>,
    pub cxx_standard_provenance: Option<Provenance>,
    pub gtest_available: bool,
    /// Every matched command, in scan order.
    pub provenance: Vec<Provenance>,
}

impl ConfigDependencies {
    pub fn has_library(&self, name: &str) -> bool {
        self.libraries
            .iter()
            .any(|l| l.name.eq_ignore_ascii_case(name))
    }

    pub fn gmock_available(&self) -> bool {
        self.has_library("gmock") || self.has_library("gmock_main")
    }

    /// e.g. `gtest 1.11.0, Threads`.
    pub fn describe_libraries(&self) -> String {
        self.libraries
            .iter()
            .map(|l| match &l.version {
                Some(v) => format!("{} {v}", l.name),
                None => l.name.clone(),
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

pub fn is_gtest_name(name: &str) -> bool {
    name.eq_ignore_ascii_case("gtest") || name.eq_ignore_ascii_case("googletest")
}

/// Libraries that link gtest transitively.
fn implies_gtest(name: &str) -> bool {
    ["gtest_main", "gmock", "gmock_main"]
        .iter()
        .any(|n| name.eq_ignore_ascii_case(n))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub name: String,
    pub args: Vec<String>,
    pub line: usize,
    pub raw: String,
}

/// Splits CMake text into commands. Comments (`#` and `#[[...]]`) are dropped;
/// quoted arguments keep their content without quotes.
pub fn parse_commands(text: &str) -> Vec<Command> {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut line = 1;
    let mut out = Vec::new();
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line += 1;
            i += 1;
        } else if c == b'#' {
            i = skip_comment(text, i, &mut line);
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let name = &text[start..i];
            let mut j = i;
            while j < bytes.len() && (bytes[j] == b' ' || bytes[j] == b'\t') {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'(' {
                let cmd_line = line;
                let (args, end) = parse_args(text, j + 1, &mut line);
                out.push(Command {
                    name: name.to_ascii_lowercase(),
                    args,
                    line: cmd_line,
                    raw: text[start..end]
                        .split_whitespace()
                        .collect::<Vec<_>>()
                        .join(" "),
                });
                i = end;
            }
        } else {
            i += 1;
        }
    }
    out
}

fn skip_comment(text: &str, i: usize, line: &mut usize) -> usize {
    let rest = &text[i..];
    if let Some(tail) = rest.strip_prefix("#[") {
        let eqs = tail.bytes().take_while(|&b| b == b'=').count();
        if tail.as_bytes().get(eqs) == Some(&b'[') {
            let close = format!("]{}]", "=".repeat(eqs));
            let body_start = i + 2 + eqs + 1;
            let end = text[body_start..]
                .find(&close)
                .map_or(text.len(), |p| body_start + p + close.len());
            *line += text[i..end].matches('\n').count();
            return end;
        }
    }
    rest.find('\n').map_or(text.len(), |p| i + p)
}

/// Arguments up to the balancing `)`; returns them and the index past it.
fn parse_args(text: &str, mut i: usize, line: &mut usize) -> (Vec<String>, usize) {
    let bytes = text.as_bytes();
    let mut args = Vec::new();
    let mut cur = String::new();
    let mut depth = 0usize;
    let push = |cur: &mut String, args: &mut Vec<String>| {
        if !cur.is_empty() {
            args.push(std::mem::take(cur));
        }
    };
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'\n' => {
                *line += 1;
                push(&mut cur, &mut args);
                i += 1;
            }
            b' ' | b'\t' | b'\r' => {
                push(&mut cur, &mut args);
                i += 1;
            }
            b'#' => {
                push(&mut cur, &mut args);
                i = skip_comment(text, i, line);
            }
            b'"' => {
                let mut j = i + 1;
                while j < bytes.len() && bytes[j] != b'"' {
                    if bytes[j] == b'\\' {
                        j += 1;
                    } else if bytes[j] == b'\n' {
                        *line += 1;
                    }
                    j += 1;
                }
                cur.push_str(&text[i + 1..j.min(bytes.len())]);
                i = j + 1;
            }
            b'(' => {
                depth += 1;
                cur.push('(');
                i += 1;
            }
            b')' if depth > 0 => {
                depth -= 1;
                cur.push(')');
                i += 1;
            }
            b')' => {
                push(&mut cur, &mut args);
                return (args, i + 1);
            }
            _ => {
                let ch = text[i..].chars().next().expect("in bounds");
                cur.push(ch);
                i += ch.len_utf8();
            }
        }
    }
    push(&mut cur, &mut args);
    (args, text.len())
}

const LINK_KEYWORDS: &[&str] = &[
    "PUBLIC",
    "PRIVATE",
    "INTERFACE",
    "LINK_PUBLIC",
    "LINK_PRIVATE",
    "LINK_INTERFACE_LIBRARIES",
    "debug",
    "optimized",
    "general",
];

fn version_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^v?[0-9]+(\.[0-9]+)*$").unwrap())
}

/// `gtest-1.11.0`, `googletest-release-1.11.0`, `fmt_9.1` -> (name, version).
fn split_versioned(token: &str) -> Option<(String, String)> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        Regex::new(r"^([A-Za-z][A-Za-z0-9_+]*?)(?:[-_]release)?[-_]v?([0-9]+(?:\.[0-9]+)+)$")
            .unwrap()
    });
    let c = re.captures(token)?;
    Some((c[1].to_string(), c[2].to_string()))
}

fn same_library(a: &str, b: &str) -> bool {
    a.eq_ignore_ascii_case(b) || (is_gtest_name(a) && is_gtest_name(b))
}

/// Root CMakeLists first, then the test dir's, then the rest in path order.
fn prioritized(index: &RepoIndex) -> Vec<&PathBuf> {
    let mut files: Vec<&PathBuf> = index.config_files.iter().collect();
    files.sort_by_key(|p| {
        let rank = if p.parent().is_none_or(|d| d.as_os_str().is_empty()) {
            0
        } else if index.is_in_test_dir(p) && p.parent() == Some(index.test_dir.as_path()) {
            1
        } else {
            2
        };
        (rank, (*p).clone())
    });
    files
}

#[derive(Default)]
struct Collector {
    deps: ConfigDependencies,
    /// add_subdirectory versions, by library name.
    subdir_versions: Vec<(String, String, Provenance)>,
    project_targets: HashSet<String>,
}

impl Collector {
    fn add_library(&mut self, name: &str, version: Option<String>, prov: &Provenance) {
        if let Some(lib) = self
            .deps
            .libraries
            .iter_mut()
            .find(|l| l.name.eq_ignore_ascii_case(name))
        {
            if lib.version.is_none() {
                lib.version = version;
            }
            if !lib.provenance.contains(prov) {
                lib.provenance.push(prov.clone());
            }
            return;
        }
        self.deps.libraries.push(Library {
            name: name.to_string(),
            version,
            provenance: vec![prov.clone()],
        });
    }

    fn set_standard(&mut self, value: &str, prov: &Provenance) {
        if self.deps.cxx_standard.is_none() {
            let v = value.trim_start_matches("cxx_std_");
            self.deps.cxx_standard = Some(v.to_string());
            self.deps.cxx_standard_provenance = Some(prov.clone());
        }
    }
}

pub fn extract_config_dependencies(index: &RepoIndex) -> ConfigDependencies {
    let files = prioritized(index);
    let mut parsed: Vec<(&Path, Vec<Command>)> = Vec::new();
    for rel in files {
        match std::fs::read_to_string(index.abs(rel)) {
            Ok(text) => parsed.push((rel.as_path(), parse_commands(&text))),
            Err(e) => log::warn!("skipping {}: {e}", rel.display()),
        }
    }
    let mut col = Collector::default();
    // project targets are known before any link command is read
    for (_, cmds) in parsed.iter().filter(|(f, _)| !is_vendored(f)) {
        for c in cmds {
            if matches!(c.name.as_str(), "add_library" | "add_executable") {
                if let Some(t) = c.args.first() {
                    col.project_targets.insert(t.clone());
                }
            }
        }
    }
    for (file, cmds) in &parsed {
        for c in cmds {
            let prov = Provenance {
                file: file.to_path_buf(),
                line: c.line,
                raw: c.raw.clone(),
            };
            let matched = match c.name.as_str() {
                "target_link_libraries" => {
                    link_libraries(&mut col, c, &prov);
                    true
                }
                "find_package" => find_package(&mut col, c, &prov),
                "set_target_properties" => target_properties(&mut col, c, &prov),
                "set" => {
                    let is_std = c.args.first().map(String::as_str) == Some("CMAKE_CXX_STANDARD");
                    if is_std {
                        if let Some(v) = c.args.get(1) {
                            col.set_standard(v, &prov);
                        }
                    }
                    is_std
                }
                "add_subdirectory" => subdirectory(&mut col, c, &prov),
                _ => false,
            };
            if matched {
                col.deps.provenance.push(prov);
            }
        }
    }
    // versions from versioned subdirectories fill unversioned libraries
    for (name, version, prov) in std::mem::take(&mut col.subdir_versions) {
        for lib in col.deps.libraries.iter_mut() {
            if lib.version.is_none() && same_library(&lib.name, &name) {
                lib.version = Some(version.clone());
                if !lib.provenance.contains(&prov) {
                    lib.provenance.push(prov.clone());
                }
            }
        }
    }
    col.deps.gtest_available = col.deps.libraries.iter().any(|l| is_gtest_name(&l.name));
    col.deps
}

/// CMake files inside bundled third-party trees define library targets
/// that are dependencies, not project targets.
fn is_vendored(file: &Path) -> bool {
    const VENDOR_DIRS: &[&str] = &[
        "third_party",
        "thirdparty",
        "3rdparty",
        "external",
        "extern",
        "vendor",
        "googletest",
    ];
    file.parent()
        .into_iter()
        .flat_map(Path::components)
        .any(|c| {
            let c = c.as_os_str().to_string_lossy();
            VENDOR_DIRS.contains(&c.to_ascii_lowercase().as_str()) || split_versioned(&c).is_some()
        })
}

fn link_libraries(col: &mut Collector, c: &Command, prov: &Provenance) {
    for arg in c.args.iter().skip(1) {
        if LINK_KEYWORDS.contains(&arg.as_str())
            || arg.starts_with('$')
            || arg.starts_with('-')
            || arg.contains('/')
            || col.project_targets.contains(arg)
        {
            continue;
        }
        let bare = arg.rsplit("::").next().unwrap_or(arg);
        let (name, version) = match split_versioned(bare) {
            Some((n, v)) => (n, Some(v)),
            None => (bare.to_string(), None),
        };
        if implies_gtest(&name) {
            col.add_library(&name, version.clone(), prov);
            col.add_library("gtest", version, prov);
        } else {
            col.add_library(&name, version, prov);
        }
    }
}

fn find_package(col: &mut Collector, c: &Command, prov: &Provenance) -> bool {
    let Some(name) = c.args.first() else {
        return false;
    };
    let mut version = c.args.get(1).filter(|v| version_re().is_match(v)).cloned();
    if let Some(pos) = c.args.iter().position(|a| a == "VERSION") {
        version = version.or_else(|| c.args.get(pos + 1).cloned());
    }
    col.add_library(name, version, prov);
    true
}

fn target_properties(col: &mut Collector, c: &Command, prov: &Provenance) -> bool {
    let Some(pos) = c.args.iter().position(|a| a == "CXX_STANDARD") else {
        return false;
    };
    match c.args.get(pos + 1) {
        Some(v) => {
            col.set_standard(v, prov);
            true
        }
        None => false,
    }
}

fn subdirectory(col: &mut Collector, c: &Command, prov: &Provenance) -> bool {
    let Some(dir) = c.args.first() else {
        return false;
    };
    let last = dir.trim_end_matches('/').rsplit('/').next().unwrap_or(dir);
    match split_versioned(last) {
        Some((name, version)) => {
            col.subdir_versions.push((name, version, prov.clone()));
            true
        }
        None => false,
    }
}
