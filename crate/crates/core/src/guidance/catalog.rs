use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::GuidanceError;
use crate::deps::ConfigDependencies;

const BUILTIN: &str = include_str!("data/guidelines.toml");

pub const GUIDELINE_IDS: [&str; 10] = [
    "A.1", "A.2", "A.3", "A.4", "A.5", "A.6", "B.1", "B.2", "C.1", "C.2",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GuidelineCategory {
    CompilationError,
    ExecutionFailure,
    PoorCoverage,
}

impl GuidelineCategory {
    fn prefix(self) -> char {
        match self {
            Self::CompilationError => 'A',
            Self::ExecutionFailure => 'B',
            Self::PoorCoverage => 'C',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guideline {
    pub id: String,
    pub category: GuidelineCategory,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Generation,
    Refinement,
}

/// A guideline as handed to a prompt. `active` marks guidelines whose
/// precondition holds for this project.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StagedGuideline {
    pub guideline: Guideline,
    pub active: bool,
}

impl fmt::Display for StagedGuideline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {}", self.guideline.id, self.guideline.text)?;
        if self.active {
            write!(f, " [ACTIVE]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    version: u32,
    guideline: Vec<Guideline>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuidelineCatalog {
    guidelines: Vec<Guideline>,
}

impl GuidelineCatalog {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN).expect("bundled guideline catalog is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, GuidanceError> {
        let file: CatalogFile =
            toml::from_str(text).map_err(|e| GuidanceError::Parse(e.to_string()))?;
        if file.version != 1 {
            return Err(GuidanceError::Invalid(format!(
                "unsupported guideline catalog version {}",
                file.version
            )));
        }
        let mut seen = HashSet::new();
        for g in &file.guideline {
            if !seen.insert(g.id.as_str()) {
                return Err(GuidanceError::Invalid(format!(
                    "duplicate guideline {}",
                    g.id
                )));
            }
            if !GUIDELINE_IDS.contains(&g.id.as_str()) {
                return Err(GuidanceError::Invalid(format!(
                    "unknown guideline id {}",
                    g.id
                )));
            }
            if !g.id.starts_with(g.category.prefix()) {
                return Err(GuidanceError::Invalid(format!(
                    "guideline {} filed under {:?}",
                    g.id, g.category
                )));
            }
            if g.text.trim().is_empty() {
                return Err(GuidanceError::Invalid(format!(
                    "guideline {} has no text",
                    g.id
                )));
            }
        }
        if seen.len() != GUIDELINE_IDS.len() {
            return Err(GuidanceError::Invalid(
                "guideline catalog is incomplete".into(),
            ));
        }
        let mut guidelines = file.guideline;
        guidelines.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Self { guidelines })
    }

    pub fn all(&self) -> &[Guideline] {
        &self.guidelines
    }

    pub fn get(&self, id: &str) -> Option<&Guideline> {
        self.guidelines.iter().find(|g| g.id == id)
    }

    /// Generation receives the compilation guidelines; refinement receives
    /// all of them. A.3 is active without gtest, B.2 when gmock is linked.
    pub fn guidelines_for(&self, stage: Stage, deps: &ConfigDependencies) -> Vec<StagedGuideline> {
        self.guidelines
            .iter()
            .filter(|g| {
                stage == Stage::Refinement || g.category == GuidelineCategory::CompilationError
            })
            .map(|g| StagedGuideline {
                active: match g.id.as_str() {
                    "A.3" => !deps.gtest_available,
                    "B.2" => deps.gmock_available(),
                    _ => false,
                },
                guideline: g.clone(),
            })
            .collect()
    }
}

pub fn guidelines_for(stage: Stage, deps: &ConfigDependencies) -> Vec<StagedGuideline> {
    GuidelineCatalog::builtin().guidelines_for(stage, deps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deps::cmake::{Library, Provenance};

    fn deps(libs: &[&str]) -> ConfigDependencies {
        let prov = Provenance {
            file: "CMakeLists.txt".into(),
            line: 1,
            raw: "target_link_libraries(t)".into(),
        };
        let libraries: Vec<Library> = libs
            .iter()
            .map(|n| Library {
                name: n.to_string(),
                version: None,
                provenance: vec![prov.clone()],
            })
            .collect();
        ConfigDependencies {
            gtest_available: libs.iter().any(|n| crate::deps::cmake::is_gtest_name(n)),
            libraries,
            ..ConfigDependencies::default()
        }
    }

    fn active(v: &[StagedGuideline]) -> Vec<&str> {
        v.iter()
            .filter(|g| g.active)
            .map(|g| g.guideline.id.as_str())
            .collect()
    }

    #[test]
    fn no_gtest_activates_a3() {
        let v = guidelines_for(Stage::Refinement, &deps(&[]));
        assert_eq!(v.len(), 10);
        assert_eq!(active(&v), ["A.3"]);
    }

    #[test]
    fn gmock_activates_b2() {
        let v = guidelines_for(Stage::Refinement, &deps(&["gtest", "gmock"]));
        assert_eq!(active(&v), ["B.2"]);
    }

    #[test]
    fn generation_stage_is_compilation_only() {
        let ids: Vec<_> = guidelines_for(Stage::Generation, &deps(&["gtest"]))
            .into_iter()
            .map(|g| g.guideline.id)
            .collect();
        assert_eq!(ids, ["A.1", "A.2", "A.3", "A.4", "A.5", "A.6"]);
    }

    #[test]
    fn display_marks_active() {
        let v = guidelines_for(Stage::Generation, &deps(&[]));
        assert_eq!(
            v[2].to_string(),
            "(A.3) If gtest is not allowed, directly call test methods from the main function. [ACTIVE]"
        );
    }

    #[test]
    fn validation_rejects_bad_catalogs() {
        let dup = BUILTIN.replacen("id = \"A.2\"", "id = \"A.1\"", 1);
        assert!(GuidelineCatalog::from_toml(&dup).is_err());
        let miscat = BUILTIN.replacen(
            "id = \"B.1\"\ncategory = \"ExecutionFailure\"",
            "id = \"B.1\"\ncategory = \"PoorCoverage\"",
            1,
        );
        assert!(GuidelineCatalog::from_toml(&miscat).is_err());
        assert!(GuidelineCatalog::from_toml("version = 2\nguideline = []").is_err());
    }
}
