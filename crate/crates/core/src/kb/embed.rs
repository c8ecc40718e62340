use std::time::Duration;

use serde_json::json;
use thiserror::Error;

use super::docs::DocChunk;
use crate::config::{EmbeddingConfig, EmbeddingKind};
use crate::net::{HttpError, JsonClient};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("provider returned {got} vectors for {want} texts")]
    Count { want: usize, got: usize },
    #[error("provider returned dimension {got}, declared {want}")]
    Dimension { want: usize, got: usize },
    #[error("missing API key: set {0}")]
    MissingKey(String),
}

pub trait EmbeddingProvider: Send + Sync {
    /// Identifies the provider in persisted indexes.
    fn name(&self) -> String;
    fn dimension(&self) -> usize;
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// Deterministic offline embedder: signed feature hashing of lowercased
/// word tokens and adjacent word pairs.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension }
    }

    fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        let words = words(text);
        let mut add = |feature: &str| {
            let h = fnv1a(feature.as_bytes());
            let idx = (h % self.dimension as u64) as usize;
            let sign = if (h >> 63) & 1 == 0 { 1.0 } else { -1.0 };
            v[idx] += sign;
        };
        for w in &words {
            add(w);
        }
        for pair in words.windows(2) {
            add(&format!("{} {}", pair[0], pair[1]));
        }
        v
    }
}

fn words(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl EmbeddingProvider for HashingEmbedder {
    fn name(&self) -> String {
        format!("hashing-{}", self.dimension)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// OpenAI-compatible `/embeddings` endpoint.
pub struct HttpEmbedder {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    dimension: usize,
    client: JsonClient,
}

impl HttpEmbedder {
    pub fn new(
        endpoint: &str,
        model: &str,
        api_key: Option<String>,
        dimension: usize,
        timeout: Duration,
    ) -> Result<Self, EmbedError> {
        Ok(Self {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            api_key,
            dimension,
            client: JsonClient::new(timeout)?,
        })
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn name(&self) -> String {
        format!("http:{}", self.model)
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let body = json!({ "model": self.model, "input": texts });
        let resp = self
            .client
            .post(&self.endpoint, self.api_key.as_deref(), &body)?;
        let data = resp["data"]
            .as_array()
            .ok_or_else(|| HttpError::Decode("missing data array".into()))?;
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(data.len());
        for (i, item) in data.iter().enumerate() {
            let index = item["index"].as_u64().map_or(i, |x| x as usize);
            let vec: Vec<f64> = item["embedding"]
                .as_array()
                .ok_or_else(|| HttpError::Decode("missing embedding".into()))?
                .iter()
                .map(|x| x.as_f64().unwrap_or(0.0))
                .collect();
            rows.push((index, vec));
        }
        rows.sort_by_key(|(i, _)| *i);
        Ok(rows.into_iter().map(|(_, v)| v).collect())
    }
}

pub fn provider_from_config(
    cfg: &EmbeddingConfig,
    timeout: Duration,
) -> Result<Box<dyn EmbeddingProvider>, EmbedError> {
    match cfg.kind {
        EmbeddingKind::Hashing => Ok(Box::new(HashingEmbedder::new(cfg.dimension))),
        EmbeddingKind::Http => {
            let key = std::env::var(&cfg.api_key_env).ok();
            Ok(Box::new(HttpEmbedder::new(
                &cfg.endpoint,
                &cfg.model,
                key,
                cfg.dimension,
                timeout,
            )?))
        }
    }
}

/// Scales to unit length; the zero vector stays zero.
pub fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Embeds and normalizes one query with the provider's contract checks.
pub fn embed_query(provider: &dyn EmbeddingProvider, query: &str) -> Result<Vec<f64>, EmbedError> {
    let mut v = checked_embed(provider, &[query.to_string()])?;
    Ok(v.pop().expect("one vector per text"))
}

fn checked_embed(
    provider: &dyn EmbeddingProvider,
    texts: &[String],
) -> Result<Vec<Vec<f64>>, EmbedError> {
    let mut vs = provider.embed(texts)?;
    if vs.len() != texts.len() {
        return Err(EmbedError::Count {
            want: texts.len(),
            got: vs.len(),
        });
    }
    for v in &mut vs {
        if v.len() != provider.dimension() {
            return Err(EmbedError::Dimension {
                want: provider.dimension(),
                got: v.len(),
            });
        }
        l2_normalize(v);
    }
    Ok(vs)
}

const BATCH: usize = 64;

pub fn embed_chunks(
    mut chunks: Vec<DocChunk>,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<DocChunk>, EmbedError> {
    for batch in chunks.chunks_mut(BATCH) {
        let texts: Vec<String> = batch.iter().map(|c| c.text.clone()).collect();
        for (c, v) in batch.iter_mut().zip(checked_embed(provider, &texts)?) {
            c.vector = v;
        }
    }
    Ok(chunks)
}
