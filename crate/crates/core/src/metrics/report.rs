//! Correctness rates, ratio-of-sums coverage and the per-project report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::coverage::CoverageRecord;
use crate::guidance::{ErrorClassification, ErrorPattern};
use crate::postprocess::ExecStatus;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const AGGREGATION: &str = "ratio_of_sums";

/// Test-case counts of one generated file. A test case is one framework test
/// macro, or one function invoked from `main`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseCounts {
    pub generated: u64,
    pub compiled: u64,
    pub passed: u64,
}

impl CaseCounts {
    pub fn add(&mut self, o: &CaseCounts) {
        self.generated += o.generated;
        self.compiled += o.compiled;
        self.passed += o.passed;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correctness {
    /// Percent of generated test cases that compile.
    pub csr: f64,
    /// Percent of generated test cases that pass.
    pub epr: f64,
    pub empty_run: bool,
}

pub fn percent(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

pub fn compute_correctness<'a>(results: impl IntoIterator<Item = &'a CaseCounts>) -> Correctness {
    let mut total = CaseCounts::default();
    for r in results {
        total.add(r);
    }
    Correctness {
        csr: percent(total.compiled, total.generated),
        epr: percent(total.passed, total.generated),
        empty_run: total.generated == 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodOutcome {
    /// Compiled; execution status in `exec_status`.
    Compiled,
    /// Still failing after all repair phases; the file was deleted.
    Removed,
    /// Kept by generation but failed to compile when evaluated.
    NotCompiled,
    /// Generation did not produce a test file.
    GenerationFailed,
}

/// Everything evaluated for one focal method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub focal_id: String,
    pub test_file: Option<String>,
    pub outcome: MethodOutcome,
    pub cases: CaseCounts,
    pub exec_status: Option<ExecStatus>,
    /// `None` when coverage was not measured or the export was unusable.
    pub coverage: Option<CoverageRecord>,
    /// Classified error lines of the method's first failed compile.
    pub errors: Vec<ErrorClassification>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportCounts {
    pub generated: u64,
    pub compiled: u64,
    pub passed: u64,
    /// Test files removed after failing every repair phase.
    pub removed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub project: String,
    /// How project-level coverage combines methods.
    pub aggregation: String,
    pub csr: f64,
    pub epr: f64,
    pub cov_l: Option<f64>,
    pub cov_b: Option<f64>,
    pub empty_run: bool,
    pub counts: ReportCounts,
    pub error_breakdown: BTreeMap<ErrorPattern, u64>,
    pub removed_files: Vec<String>,
    pub methods: Vec<MethodRecord>,
    pub warnings: Vec<String>,
}

/// Coverage is covered-sum over total-sum across methods with a record.
pub fn aggregate_report(
    project: &str,
    mut methods: Vec<MethodRecord>,
    warnings: Vec<String>,
) -> MetricsReport {
    methods.sort_by(|a, b| a.focal_id.cmp(&b.focal_id));
    let correctness = compute_correctness(methods.iter().map(|m| &m.cases));
    let mut cov = CoverageRecord::default();
    for c in methods.iter().filter_map(|m| m.coverage.as_ref()) {
        cov.add(c);
    }
    let mut counts = ReportCounts::default();
    let mut breakdown = BTreeMap::new();
    let mut removed_files = Vec::new();
    for m in &methods {
        counts.generated += m.cases.generated;
        counts.compiled += m.cases.compiled;
        counts.passed += m.cases.passed;
        if m.outcome == MethodOutcome::Removed {
            counts.removed += 1;
            removed_files.extend(m.test_file.clone());
        }
        for e in &m.errors {
            *breakdown.entry(e.pattern).or_insert(0) += 1;
        }
    }
    MetricsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        project: project.to_string(),
        aggregation: AGGREGATION.to_string(),
        csr: correctness.csr,
        epr: correctness.epr,
        cov_l: (cov.lines_total > 0).then(|| percent(cov.lines_covered, cov.lines_total)),
        cov_b: (cov.branches_total > 0).then(|| percent(cov.branches_covered, cov.branches_total)),
        empty_run: correctness.empty_run,
        counts,
        error_breakdown: breakdown,
        removed_files,
        methods,
        warnings,
    }
}

impl MetricsReport {
    /// Pretty JSON with object keys sorted at every level.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report serializes");
        let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Human-readable summary; percentages rounded to two decimals here only.
    pub fn render_table(&self) -> String {
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.2}%"));
        let mut out = String::new();
        let _ = writeln!(out, "Project: {}", self.project);
        let _ = writeln!(out, "{:<8}{:>10}", "Metric", "Value");
        let _ = writeln!(out, "{:<8}{:>10}", "CSR", pct(Some(self.csr)));
        let _ = writeln!(out, "{:<8}{:>10}", "EPR", pct(Some(self.epr)));
        let _ = writeln!(out, "{:<8}{:>10}", "Cov_L", pct(self.cov_l));
        let _ = writeln!(out, "{:<8}{:>10}", "Cov_B", pct(self.cov_b));
        let c = &self.counts;
        let _ = writeln!(
            out,
            "Test cases: {} generated, {} compiled, {} passed; {} file(s) removed",
            c.generated, c.compiled, c.passed, c.removed
        );
        if self.empty_run {
            let _ = writeln!(out, "Empty run: no test cases were generated.");
        }
        if !self.error_breakdown.is_empty() {
            let _ = writeln!(out, "Compilation errors by category:");
            for (p, n) in &self.error_breakdown {
                let _ = writeln!(out, "  {:<20}{n:>6}", p.name());
            }
        }
        let _ = writeln!(out, "Coverage aggregation: {}", self.aggregation);
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guidance::classify_error;

    fn method(id: &str, cases: CaseCounts, cov: Option<CoverageRecord>) -> MethodRecord {
        MethodRecord {
            focal_id: id.into(),
            test_file: Some(format!("test/{id}.cpp")),
            outcome: if cases.compiled > 0 {
                MethodOutcome::Compiled
            } else {
                MethodOutcome::Removed
            },
            cases,
            exec_status: None,
            coverage: cov,
            errors: vec![],
            notes: vec![],
        }
    }

    fn cases(g: u64, c: u64, p: u64) -> CaseCounts {
        CaseCounts {
            generated: g,
            compiled: c,
            passed: p,
        }
    }

    #[test]
    fn correctness_rates() {
        let r = [
            cases(1, 1, 1),
            cases(1, 1, 1),
            cases(1, 1, 0),
            cases(1, 0, 0),
        ];
        let c = compute_correctness(&r);
        assert_eq!(
            (format!("{:.2}", c.csr), format!("{:.2}", c.epr)),
            ("75.00".into(), "50.00".into())
        );
        let c = compute_correctness(&[]);
        assert!(c.empty_run && c.csr == 0.0 && c.epr == 0.0);
        let c = compute_correctness(&[cases(3, 3, 3)]);
        assert_eq!((c.csr, c.epr), (100.0, 100.0));
    }

    #[test]
    fn coverage_is_ratio_of_sums() {
        let cov = |lc, lt| CoverageRecord {
            lines_covered: lc,
            lines_total: lt,
            ..CoverageRecord::default()
        };
        let r = aggregate_report(
            "p",
            vec![
                method("a", cases(1, 1, 1), Some(cov(1, 2))),
                method("b", cases(1, 1, 1), Some(cov(3, 4))),
            ],
            vec![],
        );
        assert_eq!(format!("{:.2}", r.cov_l.unwrap()), "66.67");
        assert_eq!(r.cov_b, None);
        assert!(r.error_breakdown.is_empty());
        assert_eq!(r.aggregation, "ratio_of_sums");
    }

    #[test]
    fn breakdown_tallies_classifications() {
        let mut m = method("a", cases(2, 0, 0), None);
        m.errors = [
            "use of undeclared identifier 'x'",
            "undefined reference to `f()'",
            "use of undeclared identifier 'y'",
        ]
        .iter()
        .map(|s| classify_error(s))
        .collect();
        let r = aggregate_report("p", vec![m], vec![]);
        assert_eq!(r.error_breakdown[&ErrorPattern::UndefinedSymbols], 2);
        assert_eq!(r.error_breakdown[&ErrorPattern::Linker], 1);
        assert_eq!(r.error_breakdown.values().sum::<u64>(), 3);
        assert_eq!(r.counts.removed, 1);
        assert_eq!(r.removed_files, ["test/a.cpp"]);
    }

    #[test]
    fn json_is_deterministic_and_sorted() {
        let build = || {
            aggregate_report(
                "p",
                vec![
                    method("b", cases(1, 1, 0), None),
                    method("a", cases(1, 1, 1), None),
                ],
                vec![],
            )
        };
        let a = build().to_json();
        assert_eq!(a, build().to_json());
        let keys: Vec<&str> = a
            .lines()
            .filter(|l| l.starts_with("  \""))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(MetricsReport::from_json(&a).unwrap(), build());
    }
}
