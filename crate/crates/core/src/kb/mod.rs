//! Knowledge bases over project docs (embedded) and code (plain text), and
//! the hybrid retrieval served from them.

pub mod code;
pub mod docs;
pub mod embed;
pub mod retrieve;
pub mod store;

pub use code::{chunk_source, ChunkKind, CodeChunk};
pub use docs::{chunk_documents, DocChunk};
pub use embed::{
    embed_chunks, provider_from_config, EmbedError, EmbeddingProvider, HashingEmbedder,
    HttpEmbedder,
};
pub use retrieve::{build_query_statement, retrieve_code_examples, retrieve_docs, RetrievalResult};
pub use store::{build_knowledge_base, load_or_build, KbError, KnowledgeBase};
