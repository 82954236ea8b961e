use rand::prelude::*;
use slopesim_core::kb::{Chunking, HashingEmbedder, KbDocument, KnowledgeBase};

const VOCAB: [&str; 40] = [
    "slope",
    "bishop",
    "fellenius",
    "cohesion",
    "friction",
    "angle",
    "water",
    "table",
    "clay",
    "sand",
    "circle",
    "radius",
    "slice",
    "weight",
    "pore",
    "pressure",
    "factor",
    "safety",
    "grid",
    "search",
    "layer",
    "boundary",
    "script",
    "profile",
    "material",
    "toe",
    "crest",
    "height",
    "drained",
    "undrained",
    "seepage",
    "failure",
    "surface",
    "method",
    "iteration",
    "tolerance",
    "moment",
    "equilibrium",
    "shear",
    "strength",
];

pub fn sentence(rng: &mut StdRng) -> String {
    let n = rng.random_range(3..12);
    (0..n)
        .map(|_| VOCAB[rng.random_range(0..VOCAB.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

/// Store of `docs` documents with `per_doc` single-paragraph chunks each.
/// Every seventh paragraph repeats an earlier one so that exact score ties
/// occur.
pub fn random_store(seed: u64, docs: usize, per_doc: usize) -> (KnowledgeBase, HashingEmbedder) {
    let e = HashingEmbedder::default();
    let chunking = Chunking {
        max_chars: 120,
        overlap_chars: 10,
    };
    let mut kb = KnowledgeBase::in_memory(&e, chunking).unwrap();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut history: Vec<String> = Vec::new();
    for d in 0..docs {
        let paragraphs: Vec<String> = (0..per_doc)
            .map(|i| {
                let p = if i % 7 == 6 && !history.is_empty() {
                    history[rng.random_range(0..history.len())].clone()
                } else {
                    sentence(&mut rng)
                };
                history.push(p.clone());
                // long enough that two paragraphs never share a chunk
                format!("{p} {}", "x".repeat(70 - p.len().min(69)))
            })
            .collect();
        kb.ingest(
            KbDocument {
                doc_id: format!("doc{d:03}"),
                title: format!("Document {d}"),
                source_path: format!("doc{d:03}.md"),
                body: paragraphs.join("\n\n"),
                tags: vec![],
            },
            &e,
        )
        .unwrap();
    }
    (kb, e)
}
