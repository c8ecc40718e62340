use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::GuidanceError;

const BUILTIN: &str = include_str!("data/error_rules.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorPattern {
    UndefinedSymbols,
    Access,
    Type,
    TestSetup,
    Linker,
    Syntax,
    Namespace,
    MultipleDefinition,
    Template,
    Other,
}

impl ErrorPattern {
    pub const ALL: [ErrorPattern; 10] = [
        Self::UndefinedSymbols,
        Self::Access,
        Self::Type,
        Self::TestSetup,
        Self::Linker,
        Self::Syntax,
        Self::Namespace,
        Self::MultipleDefinition,
        Self::Template,
        Self::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::UndefinedSymbols => "UndefinedSymbols",
            Self::Access => "Access",
            Self::Type => "Type",
            Self::TestSetup => "TestSetup",
            Self::Linker => "Linker",
            Self::Syntax => "Syntax",
            Self::Namespace => "Namespace",
            Self::MultipleDefinition => "MultipleDefinition",
            Self::Template => "Template",
            Self::Other => "Other",
        }
    }
}

impl fmt::Display for ErrorPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorPattern {
    type Err = GuidanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| GuidanceError::Invalid(format!("unknown error pattern {s}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorClassification {
    pub pattern: ErrorPattern,
    /// Empty only for `Other`.
    pub matched_rule: String,
    pub message: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RulesFile {
    version: u32,
    pattern: Vec<PatternEntry>,
    rule: Vec<RuleEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternEntry {
    name: String,
    description: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleEntry {
    id: String,
    pattern: String,
    #[serde(default)]
    any: Vec<String>,
    #[serde(default)]
    all: Vec<String>,
    regex: Option<String>,
}

#[derive(Debug, Clone)]
struct Rule {
    id: String,
    pattern: ErrorPattern,
    any: Vec<String>,
    all: Vec<String>,
    regex: Option<Regex>,
}

impl Rule {
    fn matches(&self, line: &str) -> bool {
        (self.any.is_empty() || self.any.iter().any(|s| line.contains(s.as_str())))
            && self.all.iter().all(|s| line.contains(s.as_str()))
            && self.regex.as_ref().is_none_or(|r| r.is_match(line))
    }
}

/// Ordered, data-driven diagnostic classifier.
#[derive(Debug, Clone)]
pub struct ErrorClassifier {
    rules: Vec<Rule>,
    descriptions: Vec<(ErrorPattern, String)>,
}

impl ErrorClassifier {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN).expect("bundled classifier rules are valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, GuidanceError> {
        let file: RulesFile =
            toml::from_str(text).map_err(|e| GuidanceError::Parse(e.to_string()))?;
        if file.version != 1 {
            return Err(GuidanceError::Invalid(format!(
                "unsupported rules version {}",
                file.version
            )));
        }
        let mut descriptions = Vec::new();
        for p in file.pattern {
            let pat: ErrorPattern = p.name.parse()?;
            if descriptions.iter().any(|(q, _)| *q == pat) {
                return Err(GuidanceError::Invalid(format!(
                    "pattern {pat} listed twice"
                )));
            }
            descriptions.push((pat, p.description));
        }
        if descriptions.len() != ErrorPattern::ALL.len() {
            return Err(GuidanceError::Invalid(
                "taxonomy must list all ten patterns".into(),
            ));
        }
        let mut ids = HashSet::new();
        let mut rules = Vec::new();
        for r in file.rule {
            if !ids.insert(r.id.clone()) {
                return Err(GuidanceError::Invalid(format!(
                    "duplicate rule id {}",
                    r.id
                )));
            }
            let pattern: ErrorPattern = r.pattern.parse()?;
            if pattern == ErrorPattern::Other {
                return Err(GuidanceError::Invalid(format!(
                    "rule {} targets the fallback",
                    r.id
                )));
            }
            if r.any.is_empty() && r.all.is_empty() && r.regex.is_none() {
                return Err(GuidanceError::Invalid(format!(
                    "rule {} has no condition",
                    r.id
                )));
            }
            let regex = r
                .regex
                .as_deref()
                .map(Regex::new)
                .transpose()
                .map_err(|e| GuidanceError::Invalid(format!("rule {}: {e}", r.id)))?;
            rules.push(Rule {
                id: r.id,
                pattern,
                any: r.any,
                all: r.all,
                regex,
            });
        }
        Ok(Self {
            rules,
            descriptions,
        })
    }

    pub fn description(&self, p: ErrorPattern) -> &str {
        self.descriptions
            .iter()
            .find(|(q, _)| *q == p)
            .map(|(_, d)| d.as_str())
            .expect("all patterns described")
    }

    /// First matching rule wins; nothing matching yields `Other`.
    pub fn classify(&self, diagnostic: &str) -> ErrorClassification {
        let message = diagnostic.trim().to_string();
        let text = match_text(&message);
        match self.rules.iter().find(|r| r.matches(text)) {
            Some(r) => ErrorClassification {
                pattern: r.pattern,
                matched_rule: r.id.clone(),
                message,
            },
            None => ErrorClassification {
                pattern: ErrorPattern::Other,
                matched_rule: String::new(),
                message,
            },
        }
    }

    /// Classifies each error line of a compiler/linker transcript.
    pub fn classify_output(&self, output: &str) -> Vec<ErrorClassification> {
        error_lines(output).map(|l| self.classify(l)).collect()
    }

    /// Pattern of the first error line, if any.
    pub fn primary(&self, output: &str) -> Option<ErrorClassification> {
        error_lines(output).next().map(|l| self.classify(l))
    }
}

/// The diagnostic proper: what follows `error: ` when present, so file
/// names never feed the rules.
fn match_text(line: &str) -> &str {
    line.find("error: ")
        .map_or(line, |i| &line[i + "error: ".len()..])
}

/// Lines that report an error (not notes, warnings or summaries).
pub fn error_lines(output: &str) -> impl Iterator<Item = &str> {
    output.lines().filter(|l| {
        let l = l.trim();
        !l.is_empty()
            && !l.ends_with("errors generated.")
            && !l.ends_with("error generated.")
            && (l.contains("error:")
                || l.contains("undefined reference")
                || l.contains("multiple definition of")
                || l.contains("Undefined symbols"))
    })
}

pub fn classify_error(diagnostic: &str) -> ErrorClassification {
    use std::sync::OnceLock;
    static C: OnceLock<ErrorClassifier> = OnceLock::new();
    C.get_or_init(ErrorClassifier::builtin).classify(diagnostic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spec_examples() {
        assert_eq!(
            classify_error("use of undeclared identifier 'foo'").pattern,
            ErrorPattern::UndefinedSymbols
        );
        assert_eq!(
            classify_error("'x' is a private member of 'C'").pattern,
            ErrorPattern::Access
        );
        assert_eq!(
            classify_error("undefined reference to `C::f()'").pattern,
            ErrorPattern::Linker
        );
        let other = classify_error("lorem ipsum");
        assert_eq!(other.pattern, ErrorPattern::Other);
        assert!(other.matched_rule.is_empty());
    }

    #[test]
    fn file_names_do_not_leak_into_rules() {
        let c = classify_error("template_namespace.cpp:3:1: error: 'x' is a private member of 'C'");
        assert_eq!(c.pattern, ErrorPattern::Access);
    }

    #[test]
    fn qualified_suggestion_means_missing_namespace() {
        let c = classify_error(
            "a.cpp:2:3: error: unknown type name 'string'; did you mean 'std::string'?",
        );
        assert_eq!(c.pattern, ErrorPattern::Namespace);
    }

    #[test]
    fn descriptions_cover_taxonomy() {
        let c = ErrorClassifier::builtin();
        assert_eq!(
            c.description(ErrorPattern::Linker),
            "Cross-file linkage failure"
        );
        assert_eq!(
            c.description(ErrorPattern::Other),
            "Miscellaneous unclassified errors"
        );
    }

    #[test]
    fn error_line_extraction() {
        let out = "a.cpp:1:2: error: use of undeclared identifier 'x'\n  note: here\n1 error generated.\nb.o: undefined reference to `f()'\ncollect2: error: ld returned 1 exit status\n";
        let c = ErrorClassifier::builtin();
        let pats: Vec<_> = c
            .classify_output(out)
            .into_iter()
            .map(|e| e.pattern)
            .collect();
        assert_eq!(
            pats,
            [
                ErrorPattern::UndefinedSymbols,
                ErrorPattern::Linker,
                ErrorPattern::Linker
            ]
        );
    }

    #[test]
    fn invalid_rule_files() {
        let taxonomy = &BUILTIN[..BUILTIN.find("[[rule]]").unwrap()];
        let with = |rule: &str| format!("{taxonomy}\n[[rule]]\n{rule}\n");
        assert!(
            ErrorClassifier::from_toml(&with("id = \"x\"\npattern = \"Type\"\nany = [\"y\"]"))
                .is_ok()
        );
        assert!(
            ErrorClassifier::from_toml(&with("id = \"x\"\npattern = \"Type\"\nregex = \"(\""))
                .is_err()
        );
        assert!(ErrorClassifier::from_toml(&with(
            "id = \"x\"\npattern = \"Bogus\"\nany = [\"y\"]"
        ))
        .is_err());
        assert!(ErrorClassifier::from_toml(&with("id = \"x\"\npattern = \"Type\"")).is_err());
        assert!(ErrorClassifier::from_toml(&with(
            "id = \"x\"\npattern = \"Other\"\nany = [\"y\"]"
        ))
        .is_err());
    }

    proptest! {
        #[test]
        fn total_and_consistent(s in "\\PC{1,120}") {
            let c = classify_error(&s);
            prop_assert_eq!(c.matched_rule.is_empty(), c.pattern == ErrorPattern::Other);
            prop_assert_eq!(classify_error(&s), c);
        }
    }
}
