//! Line and branch coverage of a focal method from an LLVM coverage export.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::repo::FocalMethod;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoverageError {
    #[error("malformed coverage export: {0}")]
    Malformed(String),
    #[error("coverage export command failed: {0}")]
    Export(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub lines_covered: u64,
    pub lines_total: u64,
    pub branches_covered: u64,
    pub branches_total: u64,
}

impl CoverageRecord {
    pub fn add(&mut self, o: &CoverageRecord) {
        self.lines_covered += o.lines_covered;
        self.lines_total += o.lines_total;
        self.branches_covered += o.branches_covered;
        self.branches_total += o.branches_total;
    }
}

/// One entry of a file's `segments` array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub line: u64,
    pub col: u64,
    pub count: u64,
    pub has_count: bool,
    pub is_region_entry: bool,
    pub is_gap: bool,
}

impl Segment {
    fn starts_region(&self) -> bool {
        !self.is_gap && self.has_count && self.is_region_entry
    }
}

/// Per-line execution counts for mapped lines in `first..=last`, following
/// llvm-cov's line statistics: a line is mapped when a counted region starts
/// on it or a counted region wraps into it, unless a skipped region starts it;
/// its count is the maximum of the wrapping count and of regions starting on it.
pub fn line_counts(segments: &[Segment], first: u64, last: u64) -> BTreeMap<u64, u64> {
    let mut out = BTreeMap::new();
    let mut idx = 0;
    let mut wrapped: Option<&Segment> = None;
    for line in first..=last {
        while idx < segments.len() && segments[idx].line < line {
            wrapped = Some(&segments[idx]);
            idx += 1;
        }
        let on_line: Vec<&Segment> = segments[idx..]
            .iter()
            .take_while(|s| s.line == line)
            .collect();
        let starts = on_line.iter().filter(|s| s.starts_region()).count();
        let skipped_start = on_line
            .first()
            .is_some_and(|s| !s.has_count && s.is_region_entry);
        let mapped = !skipped_start && (wrapped.is_some_and(|w| w.has_count) || starts > 0);
        if !mapped {
            continue;
        }
        let mut count = wrapped.map_or(0, |w| w.count);
        for s in on_line.iter().filter(|s| s.starts_region()) {
            count = count.max(s.count);
        }
        out.insert(line, count);
    }
    out
}

fn as_u64(v: &Value, what: &str) -> Result<u64, CoverageError> {
    v.as_u64()
        .ok_or_else(|| CoverageError::Malformed(format!("{what} is not a non-negative integer")))
}

fn as_bool(v: &Value, what: &str) -> Result<bool, CoverageError> {
    v.as_bool()
        .or_else(|| v.as_u64().map(|n| n != 0))
        .ok_or_else(|| CoverageError::Malformed(format!("{what} is not a boolean")))
}

fn parse_segment(v: &Value) -> Result<Segment, CoverageError> {
    let a = v
        .as_array()
        .filter(|a| a.len() >= 5)
        .ok_or_else(|| CoverageError::Malformed("segment is not an array of 5 or 6".into()))?;
    Ok(Segment {
        line: as_u64(&a[0], "segment line")?,
        col: as_u64(&a[1], "segment column")?,
        count: as_u64(&a[2], "segment count")?,
        has_count: as_bool(&a[3], "segment has-count")?,
        is_region_entry: as_bool(&a[4], "segment region-entry")?,
        is_gap: a
            .get(5)
            .map(|g| as_bool(g, "segment gap"))
            .transpose()?
            .unwrap_or(false),
    })
}

/// Export entries whose path ends with the focal file's relative path.
fn focal_files<'a>(
    export: &'a Value,
    focal: &FocalMethod,
) -> Result<Vec<&'a Value>, CoverageError> {
    let data = export["data"]
        .as_array()
        .ok_or_else(|| CoverageError::Malformed("missing data array".into()))?;
    let mut out = Vec::new();
    for d in data {
        let files = d["files"]
            .as_array()
            .ok_or_else(|| CoverageError::Malformed("missing files array".into()))?;
        for f in files {
            let name = f["filename"]
                .as_str()
                .ok_or_else(|| CoverageError::Malformed("file entry without filename".into()))?;
            if Path::new(name).ends_with(&focal.file) {
                out.push(f);
            }
        }
    }
    Ok(out)
}

/// Restricts the export to the focal method's line span. Lines the export
/// does not map are not counted; a file absent from the export counts every
/// span line as uncovered.
pub fn parse_coverage(
    export: &Value,
    focal: &FocalMethod,
) -> Result<CoverageRecord, CoverageError> {
    let (first, last) = (focal.line_span.start as u64, focal.line_span.end as u64);
    let files = focal_files(export, focal)?;
    if files.is_empty() {
        return Ok(CoverageRecord {
            lines_total: last - first + 1,
            ..CoverageRecord::default()
        });
    }
    let mut lines: BTreeMap<u64, u64> = BTreeMap::new();
    let mut rec = CoverageRecord::default();
    for f in files {
        let segs = f["segments"]
            .as_array()
            .ok_or_else(|| CoverageError::Malformed("missing segments".into()))?
            .iter()
            .map(parse_segment)
            .collect::<Result<Vec<_>, _>>()?;
        for (l, c) in line_counts(&segs, first, last) {
            let e = lines.entry(l).or_insert(0);
            *e = (*e).max(c);
        }
        for b in f["branches"]
            .as_array()
            .map(Vec::as_slice)
            .unwrap_or_default()
        {
            let a = b
                .as_array()
                .filter(|a| a.len() >= 6)
                .ok_or_else(|| CoverageError::Malformed("branch is not an array".into()))?;
            let line = as_u64(&a[0], "branch line")?;
            if !(first..=last).contains(&line) {
                continue;
            }
            let t = as_u64(&a[4], "branch true count")?;
            let fl = as_u64(&a[5], "branch false count")?;
            rec.branches_total += 2;
            rec.branches_covered += u64::from(t > 0) + u64::from(fl > 0);
        }
    }
    rec.lines_total = lines.len() as u64;
    rec.lines_covered = lines.values().filter(|&&c| c > 0).count() as u64;
    Ok(rec)
}

/// Runs the configured export commands; the last command's stdout is the
/// export. Placeholders: `{binary}`, `{profraw}`, `{profdata}`.
pub fn run_coverage_export(
    commands: &[String],
    binary: &Path,
    profraw: &Path,
    profdata: &Path,
) -> Result<Value, CoverageError> {
    let mut last = Vec::new();
    for template in commands {
        let argv: Vec<String> = template
            .split_whitespace()
            .map(|w| {
                w.replace("{binary}", &binary.display().to_string())
                    .replace("{profraw}", &profraw.display().to_string())
                    .replace("{profdata}", &profdata.display().to_string())
            })
            .collect();
        let Some((prog, args)) = argv.split_first() else {
            continue;
        };
        let out = Command::new(prog)
            .args(args)
            .output()
            .map_err(|e| CoverageError::Export(format!("{prog}: {e}")))?;
        if !out.status.success() {
            return Err(CoverageError::Export(format!(
                "{prog} exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        last = out.stdout;
    }
    serde_json::from_slice(&last).map_err(|e| CoverageError::Malformed(e.to_string()))
}
