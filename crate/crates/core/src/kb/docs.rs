use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::repo::ScanWarning;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocChunk {
    pub id: usize,
    pub source: PathBuf,
    pub heading_path: Vec<String>,
    pub text: String,
    /// Empty until embedded; unit length afterwards (or all zeros).
    pub vector: Vec<f64>,
}

/// Splits every doc file into chunks, numbering them in file order.
/// Markdown files split at headings; other text at paragraph groups.
pub fn chunk_documents(
    root: &Path,
    doc_files: &[PathBuf],
    paragraph_floor: usize,
) -> (Vec<DocChunk>, Vec<ScanWarning>) {
    let mut chunks = Vec::new();
    let mut warnings = Vec::new();
    for rel in doc_files {
        let text = match std::fs::read(root.join(rel)).map(String::from_utf8) {
            Ok(Ok(t)) => t,
            Ok(Err(_)) => {
                warnings.push(ScanWarning {
                    path: rel.clone(),
                    message: "not valid UTF-8; skipped".into(),
                });
                continue;
            }
            Err(e) => {
                warnings.push(ScanWarning {
                    path: rel.clone(),
                    message: format!("unreadable: {e}"),
                });
                continue;
            }
        };
        let pieces = if is_markdown(rel) {
            split_markdown(&text)
        } else {
            split_paragraphs(&text, paragraph_floor)
                .into_iter()
                .map(|t| (Vec::new(), t))
                .collect()
        };
        for (heading_path, text) in pieces {
            chunks.push(DocChunk {
                id: chunks.len(),
                source: rel.clone(),
                heading_path,
                text,
                vector: Vec::new(),
            });
        }
    }
    (chunks, warnings)
}

fn is_markdown(p: &Path) -> bool {
    matches!(
        p.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("md" | "markdown")
    )
}

/// ATX heading: level and title.
fn atx_heading(line: &str) -> Option<(usize, String)> {
    let t = line.trim_start();
    if line.len() - t.len() > 3 {
        return None;
    }
    let level = t.bytes().take_while(|&b| b == b'#').count();
    if level == 0 || level > 6 {
        return None;
    }
    let rest = &t[level..];
    if !(rest.is_empty() || rest.starts_with([' ', '\t'])) {
        return None;
    }
    let title = rest.trim().trim_end_matches('#').trim_end();
    Some((level, title.to_string()))
}

/// One chunk per heading section that has body text. The chunk text starts
/// with the heading line. Text before the first heading forms its own chunk.
pub fn split_markdown(text: &str) -> Vec<(Vec<String>, String)> {
    let mut out = Vec::new();
    let mut path: Vec<(usize, String)> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut has_body = false;
    let mut fence: Option<&str> = None;

    let flush = |path: &[(usize, String)],
                 lines: &mut Vec<&str>,
                 has_body: &mut bool,
                 out: &mut Vec<(Vec<String>, String)>| {
        if *has_body {
            let body = lines.join("\n").trim().to_string();
            out.push((path.iter().map(|(_, t)| t.clone()).collect(), body));
        }
        lines.clear();
        *has_body = false;
    };

    for line in text.lines() {
        let trimmed = line.trim_start();
        if let Some(marker) = fence {
            if trimmed.starts_with(marker) {
                fence = None;
            }
            current.push(line);
            has_body = true;
            continue;
        }
        if trimmed.starts_with("```") || trimmed.starts_with("~~~") {
            fence = Some(&trimmed[..3]);
            current.push(line);
            has_body = true;
            continue;
        }
        if let Some((level, title)) = atx_heading(line) {
            flush(&path, &mut current, &mut has_body, &mut out);
            path.retain(|(l, _)| *l < level);
            path.push((level, title));
            current.push(line);
            continue;
        }
        current.push(line);
        if !line.trim().is_empty() {
            has_body = true;
        }
    }
    flush(&path, &mut current, &mut has_body, &mut out);
    out
}

/// Blank-line separated paragraphs; a group shorter than `floor` characters
/// is merged into the following one. A short trailing group joins the
/// previous chunk.
pub fn split_paragraphs(text: &str, floor: usize) -> Vec<String> {
    let mut paragraphs: Vec<String> = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !cur.is_empty() {
                paragraphs.push(cur.join("\n"));
                cur.clear();
            }
        } else {
            cur.push(line);
        }
    }
    if !cur.is_empty() {
        paragraphs.push(cur.join("\n"));
    }

    let mut out: Vec<String> = Vec::new();
    let mut pending = String::new();
    for p in paragraphs {
        if !pending.is_empty() {
            pending.push_str("\n\n");
        }
        pending.push_str(&p);
        if pending.chars().count() >= floor {
            out.push(std::mem::take(&mut pending));
        }
    }
    if !pending.is_empty() {
        match out.last_mut() {
            Some(last) => {
                last.push_str("\n\n");
                last.push_str(&pending);
            }
            None => out.push(pending),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::fs;

    #[test]
    fn h1_with_two_h2_sections() {
        let md = "# Guide\n\n## Install\nRun make.\n\n## Usage\nCall decode().\n";
        let chunks = split_markdown(md);
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].0, ["Guide", "Install"]);
        assert_eq!(chunks[1].0, ["Guide", "Usage"]);
        assert_eq!(chunks[1].1, "## Usage\nCall decode().");
    }

    #[test]
    fn headings_inside_fences_are_body() {
        let md = "# A\n```\n# not a heading\n```\n";
        let chunks = split_markdown(md);
        assert_eq!(chunks.len(), 1);
        assert!(chunks[0].1.contains("# not a heading"));
    }

    #[test]
    fn sibling_heading_pops_path() {
        let md = "# A\n## B\nb\n### C\nc\n## D\nd\n";
        let paths: Vec<_> = split_markdown(md).into_iter().map(|(p, _)| p).collect();
        assert_eq!(paths, [vec!["A", "B"], vec!["A", "B", "C"], vec!["A", "D"]]);
    }

    #[test]
    fn preamble_before_first_heading() {
        let chunks = split_markdown("intro\n# A\nbody\n");
        assert_eq!(chunks[0], (vec![], "intro".to_string()));
    }

    #[test]
    fn three_long_paragraphs() {
        let para = |c: char| std::iter::repeat_n(c, 210).collect::<String>();
        let text = format!("{}\n\n{}\n\n{}\n", para('a'), para('b'), para('c'));
        let out = split_paragraphs(&text, 200);
        assert_eq!(out.len(), 3);
        assert!(out[1].starts_with('b'));
    }

    #[test]
    fn short_paragraphs_merge_forward() {
        let long: String = "x".repeat(250);
        let text = format!("short one\n\n{long}\n\ntail");
        let out = split_paragraphs(&text, 200);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0], format!("short one\n\n{long}\n\ntail"));
    }

    #[test]
    fn empty_file_has_no_chunks() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("e.md"), "").unwrap();
        fs::write(dir.path().join("e.txt"), "").unwrap();
        let (c, w) = chunk_documents(dir.path(), &["e.md".into(), "e.txt".into()], 200);
        assert!(c.is_empty() && w.is_empty());
    }

    #[test]
    fn undecodable_file_warns() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("bin.txt"), [0xff, 0xfe, 0x00, 0xc3]).unwrap();
        let (c, w) = chunk_documents(dir.path(), &["bin.txt".into()], 200);
        assert!(c.is_empty());
        assert_eq!(w.len(), 1);
    }

    proptest! {
        #[test]
        fn paragraph_split_keeps_all_text(paras in proptest::collection::vec("[a-z ]{1,300}", 0..8)) {
            let paras: Vec<String> = paras.into_iter().filter(|p| !p.trim().is_empty()).collect();
            let text = paras.join("\n\n");
            let out = split_paragraphs(&text, 200);
            prop_assert_eq!(out.join("\n\n"), paras.join("\n\n"));
            prop_assert!(out.iter().all(|c| !c.is_empty()));
        }
    }
}
