use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use anyhow::Context;
use slopesim_core::agent::{AgentError, ChatSession, Clock, Orchestrator, SystemClock};
use slopesim_core::extract::{LlmBackend, RuleBackend};
use slopesim_core::kb::{seed_documents, Chunking, Embedder, HashingEmbedder, KnowledgeBase};

use crate::config::{BackendKind, ServiceConfig};
use crate::remote::RemoteBackend;

pub type SessionHandle = Arc<Mutex<ChatSession>>;

/// Everything a request handler needs. Turns on one session are serialized
/// by the session's mutex; different sessions run concurrently.
pub struct AppState {
    pub config: ServiceConfig,
    pub orchestrator: Orchestrator,
    pub embedder: Arc<dyn Embedder>,
    sessions: Mutex<HashMap<String, SessionHandle>>,
}

/// Opens the knowledge base under `data_dir`, seeding it with the built-in
/// documents the first time.
pub fn open_kb(config: &ServiceConfig, embedder: &dyn Embedder) -> anyhow::Result<KnowledgeBase> {
    let fresh = !config.data_dir.join("kb").join("log").exists();
    let mut kb = KnowledgeBase::open(&config.data_dir, embedder, Chunking::default())
        .context("opening the knowledge base")?;
    if fresh {
        for doc in seed_documents() {
            kb.ingest(doc, embedder)?;
        }
    }
    Ok(kb)
}

pub fn backend_for(config: &ServiceConfig) -> anyhow::Result<Arc<dyn LlmBackend>> {
    Ok(match config.backend {
        BackendKind::Mock => Arc::new(RuleBackend),
        BackendKind::Remote => {
            let remote = config
                .remote
                .clone()
                .context("backend REMOTE needs a `remote` section")?;
            Arc::new(RemoteBackend::from_env(remote)?)
        }
    })
}

impl AppState {
    pub fn new(config: ServiceConfig) -> anyhow::Result<Self> {
        let backend = backend_for(&config)?;
        Self::with_backend(config, backend, Arc::new(SystemClock))
    }

    pub fn with_backend(
        config: ServiceConfig,
        backend: Arc<dyn LlmBackend>,
        clock: Arc<dyn Clock>,
    ) -> anyhow::Result<Self> {
        config.check()?;
        let embedder: Arc<dyn Embedder> = Arc::new(HashingEmbedder::default());
        let kb = Arc::new(RwLock::new(open_kb(&config, embedder.as_ref())?));
        let orchestrator = Orchestrator::new(kb, embedder.clone(), backend, clock)
            .with_data_dir(&config.data_dir)?
            .with_tool_budget(
                embedder.clone(),
                Duration::from_secs(config.tool_budget_secs.max(1)),
            );
        Ok(Self {
            config,
            orchestrator,
            embedder,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn insert(&self, session: ChatSession) -> SessionHandle {
        let handle = Arc::new(Mutex::new(session));
        let id = handle.lock().expect("fresh mutex").session_id.clone();
        self.sessions
            .lock()
            .expect("session map poisoned")
            .insert(id, handle.clone());
        handle
    }

    /// The live session, loading it from its log on first use.
    pub fn session(&self, session_id: &str) -> Result<SessionHandle, AgentError> {
        if let Some(h) = self
            .sessions
            .lock()
            .expect("session map poisoned")
            .get(session_id)
        {
            return Ok(h.clone());
        }
        let loaded = self.orchestrator.load_session(session_id)?;
        let mut map = self.sessions.lock().expect("session map poisoned");
        Ok(map
            .entry(session_id.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(loaded)))
            .clone())
    }
}
