//! `utgen`: scan a C++ project, generate unit tests with an LLM, evaluate them.
//!
//! Exit codes: 0 success, 1 environment fault, 2 configuration fault.
//! Per-method failures are reported as data and never change the exit code.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use utgen_core::generation::{HttpChatClient, LlmProvider, ScriptedProvider};
use utgen_core::kb::provider_from_config;
use utgen_core::metrics::MetricsReport;
use utgen_core::pipeline::{
    evaluate, generate, scan_summary, BuildHarness, GenerateOptions, PipelineError, Providers,
    ToolchainHarness, Workspace,
};
use utgen_core::RunConfig;

const DEFAULT_CONFIG: &str = "utgen.toml";

#[derive(Debug, Parser)]
#[command(
    name = "utgen",
    version,
    about = "LLM-driven unit test generation for C++ projects"
)]
struct Cli {
    /// Configuration file; defaults to ./utgen.toml when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Index the project and print file and focal-method counts.
    Scan(ScanArgs),
    /// Generate, repair and prune a test file per focal method.
    Generate(GenerateArgs),
    /// Compile, run and measure the generated tests; write the report.
    Evaluate(OutArgs),
    /// Print a previously written report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Write the enumerated focal methods as JSON to the output directory.
    #[arg(long)]
    dump_focal: bool,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Only methods whose id, name or qualified name match this glob.
    #[arg(long)]
    focal: Option<String>,
    /// Answer LLM requests from a JSON script instead of the configured endpoint.
    #[arg(long, value_name = "SCRIPT")]
    mock_provider: Option<PathBuf>,
    /// Persist per-method request/response transcripts.
    #[arg(long)]
    save_transcripts: bool,
    /// Rebuild the knowledge base even when the persisted index is current.
    #[arg(long)]
    rebuild_kb: bool,
    /// Write the enumerated focal methods as JSON to the output directory.
    #[arg(long)]
    dump_focal: bool,
    /// Write dependency analysis for methods matching GLOB (all when omitted).
    #[arg(long, value_name = "GLOB", num_args = 0..=1, default_missing_value = "*")]
    dump_deps: Option<String>,
    /// Skip compilation and the compile-driven repair phases.
    #[arg(long)]
    no_compile: bool,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Report path; defaults to report.json in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    out: OutArgs,
    /// Print JSON instead of the table.
    #[arg(long)]
    json: bool,
}

/// A fatal error with its exit code.
struct Fault {
    code: u8,
    error: anyhow::Error,
}

impl Fault {
    fn config(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: 2,
            error: error.into(),
        }
    }

    fn environment(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: 1,
            error: error.into(),
        }
    }
}

impl From<PipelineError> for Fault {
    fn from(e: PipelineError) -> Self {
        Self {
            code: e.exit_code(),
            error: e.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Fault> {
    match path {
        Some(p) => RunConfig::load(p).map_err(Fault::config),
        None if Path::new(DEFAULT_CONFIG).is_file() => {
            RunConfig::load(Path::new(DEFAULT_CONFIG)).map_err(Fault::config)
        }
        None => {
            let mut cfg = RunConfig::for_root(".");
            cfg.apply_env_overrides();
            Ok(cfg)
        }
    }
}

fn run(cli: Cli) -> Result<(), Fault> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Scan(a) => {
            cfg.features.dump_focal |= a.dump_focal;
            let ws = Workspace::open(cfg)?;
            let methods = ws.focal_methods(None)?;
            if ws.config.features.dump_focal {
                let path = ws.out_dir().join("focal.json");
                write_file(&path, &utgen_core::repo::focal::dump_focal_json(&methods))?;
                log::info!("focal methods written to {}", path.display());
            }
            let summary = scan_summary(&ws, &methods);
            if a.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&summary).expect("summary serializes")
                );
            } else {
                print!("{summary}");
            }
        }
        Command::Generate(a) => {
            let f = &mut cfg.features;
            f.save_transcripts |= a.save_transcripts;
            f.rebuild_kb |= a.rebuild_kb;
            f.dump_focal |= a.dump_focal;
            if a.dump_deps.is_some() {
                f.dump_deps = a.dump_deps.clone();
            }
            if a.no_compile {
                f.compile_during_generation = false;
            }
            let ws = Workspace::open(cfg)?;
            let llm = llm_provider(&ws.config, a.mock_provider.as_deref())?;
            let timeout = Duration::from_secs(ws.config.llm.request_timeout_secs);
            let embedder =
                provider_from_config(&ws.config.embedding, timeout).map_err(Fault::config)?;
            let harness = if ws.config.features.compile_during_generation {
                Some(ToolchainHarness::new(&ws, false).map_err(Fault::environment)?)
            } else {
                None
            };
            let providers = Providers {
                llm: llm.as_ref(),
                embedder: embedder.as_ref(),
            };
            let opts = GenerateOptions {
                focal_glob: a.focal,
            };
            let manifest = generate(
                &ws,
                &providers,
                harness.as_ref().map(|h| h as &dyn BuildHarness),
                &opts,
            )?;
            let count = |s| manifest.methods.iter().filter(|m| m.status == s).count();
            use utgen_core::pipeline::GenerationStatus as S;
            println!(
                "{} focal method(s): {} test file(s) kept, {} removed, {} failed",
                manifest.methods.len(),
                count(S::Generated),
                count(S::Removed),
                count(S::Failed)
            );
            println!("manifest: {}", ws.manifest_path().display());
        }
        Command::Evaluate(a) => {
            let ws = Workspace::open(cfg)?;
            let harness = ToolchainHarness::new(&ws, true).map_err(Fault::environment)?;
            let report = evaluate(&ws, &harness)?;
            let path = a.out.unwrap_or_else(|| ws.report_path());
            write_file(&path, &report.to_json())?;
            print!("{}", report.render_table());
            println!("report: {}", path.display());
        }
        Command::Report(a) => {
            let path = match a.out.out {
                Some(p) => p,
                None => cfg.out_dir_abs().join("report.json"),
            };
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("cannot read report {}", path.display()))
                .map_err(Fault::config)?;
            let report = MetricsReport::from_json(&text)
                .with_context(|| format!("malformed report {}", path.display()))
                .map_err(Fault::config)?;
            if a.json {
                print!("{}", report.to_json());
            } else {
                print!("{}", report.render_table());
            }
        }
    }
    Ok(())
}

fn llm_provider(cfg: &RunConfig, mock: Option<&Path>) -> Result<Box<dyn LlmProvider>, Fault> {
    match mock {
        Some(p) => Ok(Box::new(
            ScriptedProvider::from_file(p).map_err(Fault::config)?,
        )),
        None => Ok(Box::new(
            HttpChatClient::from_config(&cfg.llm, cfg.llm_api_key()).map_err(Fault::config)?,
        )),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Fault> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(Fault::environment)?;
    }
    std::fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Fault::environment)
}
