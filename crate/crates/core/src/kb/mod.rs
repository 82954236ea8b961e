//! Document store for retrieval: paragraph chunking, a deterministic
//! hashing embedder and exact cosine top-k search with citations.

mod chunk;
mod embed;
mod seed;
mod store;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chunk::{chunk_spans, paragraphs, span_text, Span};
pub use embed::{cosine, Embedder, HashingEmbedder};
pub use seed::seed_documents;
pub use store::{KbMeta, KnowledgeBase};

#[derive(Debug, Error)]
pub enum KbError {
    #[error("document `{0}` is already in the store")]
    DuplicateDocument(String),
    #[error("embedder failure: {0}")]
    EmbedderFailure(String),
    #[error("dimension mismatch: store has {store}, embedder produces {embedder}")]
    DimensionMismatch { store: usize, embedder: usize },
    #[error("invalid chunking: {0}")]
    InvalidChunking(String),
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbDocument {
    pub doc_id: String,
    pub title: String,
    pub source_path: String,
    pub body: String,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbChunk {
    pub chunk_id: String,
    pub text: String,
    pub char_span: Span,
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunking {
    pub max_chars: usize,
    pub overlap_chars: usize,
}

impl Default for Chunking {
    fn default() -> Self {
        Self {
            max_chars: 800,
            overlap_chars: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Citation {
    pub doc_id: String,
    pub title: String,
    pub char_span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub chunk_id: String,
    pub score: f64,
    pub citation: Citation,
    pub text: String,
}

pub fn chunk_id(doc_id: &str, ordinal: usize) -> String {
    format!("{doc_id}:{ordinal:05}")
}
