//! Correctness and coverage metrics and the per-project report.

pub mod correctness;
pub mod coverage;
pub mod report;

pub use correctness::{case_counts, gtest_passed};
pub use coverage::{
    line_counts, parse_coverage, run_coverage_export, CoverageError, CoverageRecord, Segment,
};
pub use report::{
    aggregate_report, compute_correctness, percent, CaseCounts, Correctness, MethodOutcome,
    MethodRecord, MetricsReport, ReportCounts, AGGREGATION, REPORT_SCHEMA_VERSION,
};
