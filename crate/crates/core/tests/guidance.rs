use std::path::Path;

use utgen_core::guidance::{ErrorClassifier, ErrorPattern, GuidelineCatalog};

fn fixture(rel: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join(rel);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn guideline_texts_match_golden() {
    let catalog = GuidelineCatalog::builtin();
    let rendered: String = catalog
        .all()
        .iter()
        .map(|g| format!("{}\t{}\n", g.id, g.text))
        .collect();
    assert_eq!(rendered, fixture("golden/guidelines.txt"));
}

#[test]
fn pattern_descriptions_match_golden() {
    let c = ErrorClassifier::builtin();
    for line in fixture("golden/error_patterns.txt").lines() {
        let (name, desc) = line.split_once('\t').unwrap();
        let p: ErrorPattern = name.parse().unwrap();
        assert_eq!(c.description(p), desc);
    }
}

#[test]
fn real_compiler_corpus() {
    let c = ErrorClassifier::builtin();
    let corpus = fixture("fixtures/diagnostics/corpus.tsv");
    let mut rows = 0;
    let mut wrong = Vec::new();
    for row in corpus.lines() {
        let cols: Vec<&str> = row.splitn(4, '\t').collect();
        let [cc, case, expected, line] = cols[..] else {
            panic!("malformed row {row}");
        };
        rows += 1;
        let got = c.classify(line);
        if got.pattern.name() != expected {
            wrong.push(format!(
                "{cc} {case}: expected {expected}, got {} via {:?}",
                got.pattern, got.matched_rule
            ));
        }
    }
    assert!(rows >= 12, "corpus has {rows} rows");
    assert!(wrong.is_empty(), "{}", wrong.join("\n"));
}
