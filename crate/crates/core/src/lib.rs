//! Core library: repository analysis, retrieval, prompting, repair and metrics
//! for LLM-driven C++ unit test generation.

pub mod config;
pub mod deps;
pub mod generation;
pub mod guidance;
pub mod kb;
pub mod lex;
pub mod metrics;
pub mod net;
pub mod pipeline;
pub mod postprocess;
pub mod repo;

pub use config::{ConfigError, RunConfig};
pub use repo::{
    enumerate_focal_methods, extract_focal_context, scan_repository, FocalMethod, Project,
    RepoIndex, StructuredFocalContext,
};
