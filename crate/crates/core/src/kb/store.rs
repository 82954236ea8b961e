use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    chunk_id, chunk_spans, cosine, span_text, Chunking, Citation, Embedder, KbChunk, KbDocument,
    KbError, RetrievalHit,
};

const SELF_SIMILARITY_TOL: f64 = 1e-12;

/// Contents of `kb/meta`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbMeta {
    pub format: u32,
    pub dim: usize,
    pub embedder: String,
    pub chunking: Chunking,
    pub similarity: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum LogRecord {
    Ingest {
        doc: KbDocument,
        chunks: Vec<KbChunk>,
    },
    Delete {
        doc_id: String,
    },
}

#[derive(Debug, Clone)]
struct Entry {
    doc: KbDocument,
    chunks: Vec<KbChunk>,
}

/// Chunk store with exact search. Writes take `&mut self` and reads `&self`,
/// so wrapping the store in a `RwLock` gives exclusive writes and concurrent
/// reads. With a directory, every write is appended to `kb/log` before it
/// becomes visible.
#[derive(Debug)]
pub struct KnowledgeBase {
    meta: KbMeta,
    docs: BTreeMap<String, Entry>,
    log_path: Option<PathBuf>,
}

impl KnowledgeBase {
    pub fn in_memory(embedder: &dyn Embedder, chunking: Chunking) -> Result<Self, KbError> {
        check_chunking(chunking)?;
        Ok(Self {
            meta: KbMeta {
                format: 1,
                dim: embedder.dim(),
                embedder: embedder.id(),
                chunking,
                similarity: "cosine".into(),
            },
            docs: BTreeMap::new(),
            log_path: None,
        })
    }

    /// Opens the store under `root/kb`, creating it when absent, and replays
    /// the log.
    pub fn open(root: &Path, embedder: &dyn Embedder, chunking: Chunking) -> Result<Self, KbError> {
        let dir = root.join("kb");
        fs::create_dir_all(&dir)?;
        let meta_path = dir.join("meta");
        let mut kb = Self::in_memory(embedder, chunking)?;
        if meta_path.exists() {
            let text = fs::read_to_string(&meta_path)?;
            let meta: KbMeta = serde_json::from_str(&text)
                .map_err(|e| KbError::Corrupt(format!("kb/meta: {e}")))?;
            if meta.dim != embedder.dim() {
                return Err(KbError::DimensionMismatch {
                    store: meta.dim,
                    embedder: embedder.dim(),
                });
            }
            if meta.embedder != embedder.id() {
                return Err(KbError::EmbedderFailure(format!(
                    "store was built with `{}`, not `{}`",
                    meta.embedder,
                    embedder.id()
                )));
            }
            kb.meta = meta;
        } else {
            let mut text = serde_json::to_string_pretty(&kb.meta).expect("meta serializes");
            text.push('\n');
            fs::write(&meta_path, text)?;
        }
        let log_path = dir.join("log");
        if log_path.exists() {
            let reader = BufReader::new(File::open(&log_path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: LogRecord = serde_json::from_str(&line)
                    .map_err(|e| KbError::Corrupt(format!("kb/log line {}: {e}", i + 1)))?;
                kb.apply(record);
            }
        }
        kb.log_path = Some(log_path);
        Ok(kb)
    }

    pub fn meta(&self) -> &KbMeta {
        &self.meta
    }

    pub fn document_ids(&self) -> Vec<String> {
        self.docs.keys().cloned().collect()
    }

    pub fn document(&self, doc_id: &str) -> Option<&KbDocument> {
        self.docs.get(doc_id).map(|e| &e.doc)
    }

    pub fn chunks(&self, doc_id: &str) -> &[KbChunk] {
        self.docs.get(doc_id).map_or(&[], |e| &e.chunks)
    }

    pub fn chunk_count(&self) -> usize {
        self.docs.values().map(|e| e.chunks.len()).sum()
    }

    fn apply(&mut self, record: LogRecord) {
        match record {
            LogRecord::Ingest { doc, chunks } => {
                self.docs.insert(doc.doc_id.clone(), Entry { doc, chunks });
            }
            LogRecord::Delete { doc_id } => {
                self.docs.remove(&doc_id);
            }
        }
    }

    fn append(&self, record: &LogRecord) -> Result<(), KbError> {
        if let Some(path) = &self.log_path {
            let mut line = serde_json::to_string(record).expect("record serializes");
            line.push('\n');
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            f.write_all(line.as_bytes())?;
            f.sync_data()?;
        }
        Ok(())
    }

    fn check_dim(&self, embedder: &dyn Embedder) -> Result<(), KbError> {
        if embedder.dim() != self.meta.dim {
            return Err(KbError::DimensionMismatch {
                store: self.meta.dim,
                embedder: embedder.dim(),
            });
        }
        Ok(())
    }

    fn embed_checked(&self, embedder: &dyn Embedder, text: &str) -> Result<Vec<f64>, KbError> {
        let v = embedder.embed(text)?;
        if v.len() != self.meta.dim {
            return Err(KbError::EmbedderFailure(format!(
                "vector of length {} for dimension {}",
                v.len(),
                self.meta.dim
            )));
        }
        if v.iter().any(|x| !x.is_finite()) || v.iter().all(|x| *x == 0.0) {
            return Err(KbError::EmbedderFailure("zero or non-finite vector".into()));
        }
        Ok(v)
    }

    /// Chunks, embeds and stores a document. Nothing is stored unless every
    /// chunk embeds.
    pub fn ingest(&mut self, doc: KbDocument, embedder: &dyn Embedder) -> Result<usize, KbError> {
        self.check_dim(embedder)?;
        if self.docs.contains_key(&doc.doc_id) {
            return Err(KbError::DuplicateDocument(doc.doc_id));
        }
        let c = self.meta.chunking;
        let mut chunks = Vec::new();
        for (ordinal, span) in chunk_spans(&doc.body, c.max_chars, c.overlap_chars)
            .into_iter()
            .enumerate()
        {
            let text = span_text(&doc.body, span);
            let embedding = self.embed_checked(embedder, &text)?;
            let self_sim = cosine(&embedding, &embedding);
            if (self_sim - 1.0).abs() > SELF_SIMILARITY_TOL {
                return Err(KbError::EmbedderFailure(format!(
                    "self-similarity {self_sim} for chunk {ordinal}"
                )));
            }
            chunks.push(KbChunk {
                chunk_id: chunk_id(&doc.doc_id, ordinal),
                text,
                char_span: span,
                embedding,
            });
        }
        let n = chunks.len();
        let record = LogRecord::Ingest { doc, chunks };
        self.append(&record)?;
        self.apply(record);
        Ok(n)
    }

    /// Removes a document, returning how many chunks went with it.
    pub fn delete(&mut self, doc_id: &str) -> Result<usize, KbError> {
        let n = self.chunks(doc_id).len();
        if self.docs.contains_key(doc_id) {
            let record = LogRecord::Delete {
                doc_id: doc_id.to_string(),
            };
            self.append(&record)?;
            self.apply(record);
        }
        Ok(n)
    }

    /// Exact top-k by cosine similarity, ties by ascending chunk id.
    pub fn search(
        &self,
        query: &str,
        k: usize,
        embedder: &dyn Embedder,
    ) -> Result<Vec<RetrievalHit>, KbError> {
        self.check_dim(embedder)?;
        if k == 0 || self.docs.is_empty() {
            return Ok(Vec::new());
        }
        let q = match self.embed_checked(embedder, query) {
            Ok(q) => q,
            Err(KbError::EmbedderFailure(_)) if query.trim().is_empty() => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        let q = &q;
        let mut scored: Vec<(f64, &KbChunk, &KbDocument)> = self
            .docs
            .values()
            .flat_map(|e| {
                e.chunks
                    .iter()
                    .map(move |c| (cosine(q, &c.embedding), c, &e.doc))
            })
            .collect();
        scored.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| a.1.chunk_id.cmp(&b.1.chunk_id))
        });
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(score, c, d)| RetrievalHit {
                chunk_id: c.chunk_id.clone(),
                score,
                citation: Citation {
                    doc_id: d.doc_id.clone(),
                    title: d.title.clone(),
                    char_span: c.char_span,
                },
                text: c.text.clone(),
            })
            .collect())
    }
}

fn check_chunking(c: Chunking) -> Result<(), KbError> {
    if c.max_chars > c.overlap_chars {
        Ok(())
    } else {
        Err(KbError::InvalidChunking(format!(
            "max_chars {} must exceed overlap_chars {}",
            c.max_chars, c.overlap_chars
        )))
    }
}
