//! Per-method generation: context, retrieval, three prompting steps and the
//! three repair phases, on a bounded worker pool.

use rayon::prelude::*;

use super::harness::{test_file_abs, write_test_file, BuildHarness};
use super::manifest::{
    write_json, GenerationStatus, Manifest, MethodGeneration, Transcript, TranscriptEvent,
    MANIFEST_SCHEMA_VERSION,
};
use super::{worker_pool, PipelineError, Workspace};
use crate::deps::{
    build_include_graph, extract_cross_file_dependencies, CrossFileDependencies, DependencyDump,
    MAX_LAYERS,
};
use crate::generation::{
    run_step1_understanding, run_step2_generate, run_step3_refine, DecodingSettings,
    GeneratedTestFile, GenerationError, LlmProvider, LlmSession, Operation, PromptInputs,
};
use crate::guidance::{Stage, StagedGuideline};
use crate::kb::{
    build_query_statement, load_or_build, retrieve_code_examples, retrieve_docs, EmbeddingProvider,
    KnowledgeBase,
};
use crate::postprocess::{
    apply_compile_rules, apply_syntax_rules, count_test_cases, llm_fix, CompileResult, TestLayout,
};
use crate::repo::{extract_focal_context, FocalMethod};

pub struct Providers<'a> {
    pub llm: &'a dyn LlmProvider,
    pub embedder: &'a dyn EmbeddingProvider,
}

#[derive(Debug, Clone, Default)]
pub struct GenerateOptions {
    /// Glob over focal id, name or qualified name.
    pub focal_glob: Option<String>,
}

/// Runs every selected method, writes the manifest (and transcripts when
/// enabled) and returns it. Per-method failures are recorded, not raised;
/// the run fails only when the provider failed for every method.
pub fn generate(
    ws: &Workspace,
    providers: &Providers<'_>,
    harness: Option<&dyn BuildHarness>,
    opts: &GenerateOptions,
) -> Result<Manifest, PipelineError> {
    let features = &ws.config.features;
    let methods = ws.focal_methods(opts.focal_glob.as_deref())?;
    if features.dump_focal {
        let path = ws.out_dir().join("focal.json");
        write_json(&path, &methods)?;
    }
    let mut manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        project: ws.project_name(),
        methods: Vec::new(),
    };
    if methods.is_empty() {
        log::info!("no focal methods selected");
        manifest.save(&ws.manifest_path())?;
        return Ok(manifest);
    }
    let kb = load_or_build(
        &ws.kb_path(),
        &ws.project,
        providers.embedder,
        ws.config.retrieval.paragraph_floor,
        features.rebuild_kb,
    )?;
    for w in &kb.warnings {
        log::warn!("{}: {}", w.path.display(), w.message);
    }
    let run = MethodRun {
        ws,
        providers,
        harness,
        kb: &kb,
        generation_guidelines: ws.catalog.guidelines_for(Stage::Generation, &ws.deps),
        refinement_guidelines: ws.catalog.guidelines_for(Stage::Refinement, &ws.deps),
        settings: DecodingSettings::from(&ws.config.llm),
        dump_deps: features
            .dump_deps
            .as_deref()
            .and_then(|g| glob::Pattern::new(g).ok()),
    };
    let results: Vec<(MethodGeneration, Transcript)> = worker_pool(ws.config.workers)
        .install(|| methods.par_iter().map(|m| run.method(m)).collect());

    if features.save_transcripts {
        for (_, t) in &results {
            write_json(
                &ws.transcripts_dir().join(format!("{}.json", t.focal_id)),
                t,
            )?;
        }
    }
    manifest.methods = results.into_iter().map(|(m, _)| m).collect();
    manifest.save(&ws.manifest_path())?;
    if manifest.methods.iter().all(|m| m.provider_failure) {
        let first = manifest.methods[0].error.clone().unwrap_or_default();
        return Err(PipelineError::ProviderUnavailable(first));
    }
    Ok(manifest)
}

struct MethodRun<'a> {
    ws: &'a Workspace,
    providers: &'a Providers<'a>,
    harness: Option<&'a dyn BuildHarness>,
    kb: &'a KnowledgeBase,
    generation_guidelines: Vec<StagedGuideline>,
    refinement_guidelines: Vec<StagedGuideline>,
    settings: DecodingSettings,
    dump_deps: Option<glob::Pattern>,
}

/// Interleaves model exchanges, lineage entries and compiles in the order
/// they happened.
struct Recorder<'p> {
    session: LlmSession<'p>,
    events: Vec<TranscriptEvent>,
    exchanges_seen: usize,
    lineage_seen: usize,
}

impl Recorder<'_> {
    fn sync(&mut self, tc: Option<&GeneratedTestFile>) {
        for x in &self.session.exchanges[self.exchanges_seen..] {
            self.events.push(TranscriptEvent::Llm(x.clone()));
        }
        self.exchanges_seen = self.session.exchanges.len();
        if let Some(tc) = tc {
            for l in &tc.lineage[self.lineage_seen..] {
                self.events.push(TranscriptEvent::Operation(l.clone()));
            }
            self.lineage_seen = tc.lineage.len();
        }
    }

    fn compiled(&mut self, after: Operation, r: &CompileResult) {
        self.events.push(TranscriptEvent::Compile {
            after,
            status: r.status,
            diagnostics: r.diagnostics.clone(),
        });
    }

    fn transcript(self) -> Transcript {
        Transcript {
            focal_id: self.session.focal_id().to_string(),
            events: self.events,
        }
    }
}

impl MethodRun<'_> {
    fn method(&self, focal: &FocalMethod) -> (MethodGeneration, Transcript) {
        let mut rec = Recorder {
            session: LlmSession::new(self.providers.llm, self.settings.clone(), &focal.id),
            events: Vec::new(),
            exchanges_seen: 0,
            lineage_seen: 0,
        };
        let mut out = MethodGeneration {
            focal: focal.clone(),
            status: GenerationStatus::Failed,
            test_file: None,
            stage: None,
            lineage: Vec::new(),
            compiled: None,
            test_cases: 0,
            errors: Vec::new(),
            notes: Vec::new(),
            error: None,
            provider_failure: false,
        };
        if let Err(e) = self.generate_into(focal, &mut rec, &mut out) {
            log::warn!("{}: {e}", focal.id);
            out.provider_failure = matches!(e, GenerationError::Provider(_));
            out.error = Some(e.to_string());
        }
        rec.sync(None);
        (out, rec.transcript())
    }

    fn generate_into(
        &self,
        focal: &FocalMethod,
        rec: &mut Recorder<'_>,
        out: &mut MethodGeneration,
    ) -> Result<(), GenerationError> {
        let ws = self.ws;
        let budget = ws.config.token_budget;
        let ctx = match extract_focal_context(focal, &ws.project) {
            Ok(c) => c,
            Err(e) => {
                out.error = Some(e.to_string());
                return Ok(());
            }
        };
        let graph = build_include_graph(&focal.file, &ws.project, MAX_LAYERS);
        let cross =
            extract_cross_file_dependencies(focal, &graph, &ws.project).unwrap_or_else(|e| {
                out.notes
                    .push(format!("cross-file dependencies unavailable: {e}"));
                CrossFileDependencies::default()
            });
        if self
            .dump_deps
            .as_ref()
            .is_some_and(|p| p.matches(&focal.id))
        {
            let dump = DependencyDump {
                focal_id: &focal.id,
                config: &ws.deps,
                include_graph: &graph,
                cross_file: &cross,
            };
            let path = ws.out_dir().join("deps").join(format!("{}.json", focal.id));
            if let Err(e) = write_json(&path, &dump) {
                out.notes.push(format!("dependency dump failed: {e}"));
            }
        }
        let docs = retrieve_docs(
            &build_query_statement(focal),
            &self.kb.docs,
            self.providers.embedder,
            ws.config.retrieval.doc_top_k,
        )
        .unwrap_or_else(|e| {
            out.notes
                .push(format!("documentation retrieval failed: {e}"));
            Vec::new()
        });
        let examples =
            retrieve_code_examples(focal, &self.kb.code, ws.config.retrieval.max_code_examples);

        let intent = run_step1_understanding(&ctx, &mut rec.session, budget);
        rec.sync(None);
        let intent = intent?;
        let inputs = PromptInputs {
            focal: Some(&ctx),
            config_deps: Some(&ws.deps),
            cross_file: Some(&cross),
            docs: &docs,
            code_examples: &examples,
            intent: Some(&intent),
            guidelines: &self.generation_guidelines,
            ..PromptInputs::default()
        };
        let tc = run_step2_generate(&inputs, &mut rec.session, budget);
        rec.sync(tc.as_ref().ok());
        let tc = run_step3_refine(tc?, &self.refinement_guidelines, &mut rec.session, budget)?;
        rec.sync(Some(&tc));

        let file_name = tc.file_name();
        let layout = TestLayout::new(
            &ws.project.index,
            &file_name,
            ws.config.toolchain.framework_provides_main,
        );
        let mut tc = apply_syntax_rules(tc, &ctx, &ws.deps, &layout)
            .expect("refined file accepts phase one");
        rec.sync(Some(&tc));
        let rel = ws.project.index.test_dir.join(&file_name);
        let abs = test_file_abs(ws, &tc);
        out.test_file = Some(rel);
        out.status = GenerationStatus::Generated;

        match self.harness {
            None => {
                if let Err(e) = write_test_file(&abs, &tc.source) {
                    out.notes.push(e.to_string());
                }
            }
            Some(h) => match self.repair(h, tc.clone(), &ctx, &layout, rec, out) {
                Ok(fixed) => tc = fixed,
                Err(e) => out.notes.push(format!("compilation aborted: {e}")),
            },
        }
        out.test_cases = count_test_cases(&tc.source);
        if out.compiled == Some(false) {
            let _ = std::fs::remove_file(&abs);
            out.status = GenerationStatus::Removed;
        }
        out.stage = Some(tc.stage);
        out.lineage = tc.lineage;
        Ok(())
    }

    /// Compile; on failure phase two and compile; on failure phase three and
    /// compile. `out.compiled` holds the last status.
    fn repair(
        &self,
        h: &dyn BuildHarness,
        mut tc: GeneratedTestFile,
        ctx: &crate::repo::StructuredFocalContext,
        layout: &TestLayout<'_>,
        rec: &mut Recorder<'_>,
        out: &mut MethodGeneration,
    ) -> Result<GeneratedTestFile, crate::postprocess::PostprocessError> {
        let ws = self.ws;
        let first = h.compile(&tc)?;
        rec.compiled(Operation::SyntaxRules, &first);
        out.compiled = Some(first.ok());
        if first.ok() {
            return Ok(tc);
        }
        out.errors = ws.classifier.classify_output(&first.diagnostics.join("\n"));
        tc = apply_compile_rules(tc, &first, ctx, layout, &ws.classifier)?;
        rec.sync(Some(&tc));
        let second = h.compile(&tc)?;
        rec.compiled(Operation::CompileRules, &second);
        out.compiled = Some(second.ok());
        if second.ok() {
            return Ok(tc);
        }
        tc = llm_fix(tc, &second, &mut rec.session, ws.config.token_budget)?;
        rec.sync(Some(&tc));
        let third = h.compile(&tc)?;
        rec.compiled(Operation::LlmFix, &third);
        out.compiled = Some(third.ok());
        Ok(tc)
    }
}
