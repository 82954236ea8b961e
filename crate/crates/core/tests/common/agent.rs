use std::sync::{Arc, RwLock};

use slopesim_core::agent::{Orchestrator, StepClock};
use slopesim_core::extract::{LlmBackend, RuleBackend};
use slopesim_core::kb::{seed_documents, Chunking, HashingEmbedder, KnowledgeBase};

pub const GREETING: &str = "Hello! What can you help me with?";
pub const PARTIAL: &str = "I have a 10 m high slope at 45 degrees.";
pub const COMPLETION: &str =
    "The soil has cohesion 25 kPa, friction angle 20 and unit weight 19 kN/m3.";
pub const RUN: &str = "Please compute the factor of safety.";

pub fn seeded_kb() -> Arc<RwLock<KnowledgeBase>> {
    let e = HashingEmbedder::default();
    let mut kb = KnowledgeBase::in_memory(&e, Chunking::default()).unwrap();
    for doc in seed_documents() {
        kb.ingest(doc, &e).unwrap();
    }
    Arc::new(RwLock::new(kb))
}

pub fn orchestrator_with(backend: Arc<dyn LlmBackend>) -> Orchestrator {
    Orchestrator::new(
        seeded_kb(),
        Arc::new(HashingEmbedder::default()),
        backend,
        Arc::new(StepClock::new(1_700_000_000_000, 1)),
    )
}

pub fn offline() -> Orchestrator {
    orchestrator_with(Arc::new(RuleBackend))
}
