use super::KbDocument;

const SEED: [(&str, &str, &str, &[&str]); 7] = [
    (
        "bishop-simplified",
        "Bishop's simplified method",
        include_str!("../../kb_seed/bishop-simplified.md"),
        &["method", "theory"],
    ),
    (
        "fellenius",
        "Ordinary method of slices (Fellenius)",
        include_str!("../../kb_seed/fellenius.md"),
        &["method", "theory"],
    ),
    (
        "critical-circle-search",
        "Searching for the critical slip circle",
        include_str!("../../kb_seed/critical-circle-search.md"),
        &["search"],
    ),
    (
        "water-table",
        "Water table and pore pressure",
        include_str!("../../kb_seed/water-table.md"),
        &["water"],
    ),
    (
        "soil-parameters",
        "Typical soil strength parameters",
        include_str!("../../kb_seed/soil-parameters.md"),
        &["materials"],
    ),
    (
        "adonis-profile-scripting",
        "ADONIS-profile scripting",
        include_str!("../../kb_seed/adonis-profile-scripting.md"),
        &["ADONIS_PROFILE", "syntax"],
    ),
    (
        "hyrcan-profile-scripting",
        "HYRCAN-profile scripting",
        include_str!("../../kb_seed/hyrcan-profile-scripting.md"),
        &["HYRCAN_PROFILE", "syntax"],
    ),
];

/// Documents shipped with the crate for a fresh store.
pub fn seed_documents() -> Vec<KbDocument> {
    SEED.iter()
        .map(|(id, title, body, tags)| KbDocument {
            doc_id: (*id).into(),
            title: (*title).into(),
            source_path: format!("kb_seed/{id}.md"),
            body: (*body).into(),
            tags: tags.iter().map(|t| (*t).into()).collect(),
        })
        .collect()
}
