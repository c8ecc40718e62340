//! Compiles and runs the surviving test files and aggregates the report.

use rayon::prelude::*;

use super::harness::BuildHarness;
use super::manifest::{GenerationStatus, Manifest, MethodGeneration};
use super::{worker_pool, PipelineError, Workspace};
use crate::generation::GeneratedTestFile;
use crate::metrics::{
    aggregate_report, case_counts, parse_coverage, CaseCounts, MethodOutcome, MethodRecord,
    MetricsReport,
};

/// Evaluates the manifest left by `generate`. A missing manifest yields an
/// empty-run report with a warning.
pub fn evaluate(
    ws: &Workspace,
    harness: &dyn BuildHarness,
) -> Result<MetricsReport, PipelineError> {
    let path = ws.manifest_path();
    let (manifest, mut warnings) = if path.exists() {
        (Manifest::load(&path)?, Vec::new())
    } else {
        let m = Manifest {
            schema_version: super::manifest::MANIFEST_SCHEMA_VERSION,
            project: ws.project_name(),
            methods: Vec::new(),
        };
        (
            m,
            vec![format!("no generation manifest at {}", path.display())],
        )
    };
    let results: Vec<(MethodRecord, Vec<String>)> = worker_pool(ws.config.workers).install(|| {
        manifest
            .methods
            .par_iter()
            .map(|m| evaluate_method(ws, harness, m))
            .collect()
    });
    let mut records = Vec::with_capacity(results.len());
    for (r, w) in results {
        records.push(r);
        warnings.extend(w);
    }
    Ok(aggregate_report(&manifest.project, records, warnings))
}

fn evaluate_method(
    ws: &Workspace,
    h: &dyn BuildHarness,
    m: &MethodGeneration,
) -> (MethodRecord, Vec<String>) {
    let id = &m.focal.id;
    let mut warnings = Vec::new();
    let mut rec = MethodRecord {
        focal_id: id.clone(),
        test_file: m
            .test_file
            .as_ref()
            .map(|p| p.to_string_lossy().replace('\\', "/")),
        outcome: MethodOutcome::GenerationFailed,
        cases: CaseCounts::default(),
        exec_status: None,
        coverage: None,
        errors: m.errors.clone(),
        notes: m.notes.clone(),
    };
    if let Some(e) = &m.error {
        rec.notes.push(e.clone());
    }
    match m.status {
        GenerationStatus::Failed => return (rec, warnings),
        GenerationStatus::Removed => {
            rec.outcome = MethodOutcome::Removed;
            rec.cases = case_counts(m.test_cases, false, None);
            return (rec, warnings);
        }
        GenerationStatus::Generated => {}
    }
    let rel = m
        .test_file
        .as_ref()
        .expect("generated methods name their file");
    let source = match std::fs::read_to_string(ws.project.index.abs(rel)) {
        Ok(s) => s,
        Err(e) => {
            warnings.push(format!("{id}: test file {} unreadable: {e}", rel.display()));
            return (rec, warnings);
        }
    };
    let cases = crate::postprocess::count_test_cases(&source);
    let tc = GeneratedTestFile::new(id, source, None);
    let compile = match h.compile(&tc) {
        Ok(c) => c,
        Err(e) => {
            warnings.push(format!("{id}: compilation aborted: {e}"));
            rec.outcome = MethodOutcome::NotCompiled;
            rec.cases = case_counts(cases, false, None);
            return (rec, warnings);
        }
    };
    if !compile.ok() {
        rec.outcome = MethodOutcome::NotCompiled;
        rec.cases = case_counts(cases, false, None);
        if rec.errors.is_empty() {
            rec.errors = ws
                .classifier
                .classify_output(&compile.diagnostics.join("\n"));
        }
        return (rec, warnings);
    }
    rec.outcome = MethodOutcome::Compiled;
    let exec = match h.execute(id) {
        Ok(x) => x,
        Err(e) => {
            warnings.push(format!("{id}: execution failed to start: {e}"));
            rec.cases = case_counts(cases, true, None);
            return (rec, warnings);
        }
    };
    rec.exec_status = Some(exec.status);
    rec.cases = case_counts(cases, true, Some(&exec));
    match h.coverage(id) {
        None => {}
        Some(Ok(export)) => match parse_coverage(&export, &m.focal) {
            Ok(c) => rec.coverage = Some(c),
            Err(e) => warnings.push(format!("{id}: {e}")),
        },
        Some(Err(e)) => warnings.push(format!("{id}: {e}")),
    }
    (rec, warnings)
}
