mod common;

use common::extraction::corpus_mismatch;

use proptest::prelude::*;
use serde_json::json;
use slopesim_core::extract::{
    extract_llm, extract_rule_based, merge_turns, ExtractionResult, ImageAnnotation,
    LabeledDimension, ScriptedBackend,
};
use slopesim_core::model::{normalize_units, PartialProblem, ProvenanceSource};

#[test]
fn golden_corpus() {
    let corpus = common::fixture("extraction_corpus.json");
    let cases = corpus.as_array().unwrap();
    assert!(cases.len() >= 30);
    let failures: Vec<String> = cases.iter().filter_map(corpus_mismatch).collect();
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn nothing_is_both_present_and_missing() {
    for case in common::fixture("extraction_corpus.json")
        .as_array()
        .unwrap()
    {
        let r = extract_rule_based(case["text"].as_str().unwrap());
        for path in &r.missing_required {
            assert!(!r.partial.has(path), "{path}");
        }
    }
}

#[test]
fn annotated_height_in_feet_matches_unit_normalization() {
    let annotation = ImageAnnotation {
        labeled_dimensions: vec![LabeledDimension {
            label: "H".into(),
            value: 32.8084,
            unit: Some("ft".into()),
        }],
        ..Default::default()
    };
    let r = extract_llm("", Some(&annotation), &ScriptedBackend::new()).unwrap();
    let mut tagged = PartialProblem::default();
    tagged
        .set("geometry.height", json!({"value": 32.8084, "unit": "ft"}))
        .unwrap();
    let expected = normalize_units(&tagged)
        .unwrap()
        .get("geometry.height")
        .unwrap();
    assert_eq!(r.partial.get("geometry.height"), Some(expected.clone()));
    assert!((expected.as_f64().unwrap() - 10.0).abs() < 1e-4);
    assert_eq!(
        r.partial.provenance_of("geometry.height").unwrap().source,
        ProvenanceSource::ImageAnnotation
    );
}

const FIELDS: &[(&str, bool)] = &[
    ("geometry.height", false),
    ("geometry.slope_angle", false),
    ("geometry.crest_extent", false),
    ("layers[0].cohesion", false),
    ("layers[0].friction_angle", false),
    ("layers[0].unit_weight", false),
    ("layers[1].cohesion", false),
    ("layers[1].name", true),
    ("analysis.slice_count", false),
];

fn partial_from(assign: &[(usize, f64)]) -> ExtractionResult {
    let mut r = ExtractionResult::default();
    for &(i, x) in assign {
        let (path, text) = FIELDS[i];
        let value = if text {
            json!(format!("layer {x}"))
        } else if path == "analysis.slice_count" {
            json!(x as i64 + 5)
        } else {
            json!(x)
        };
        r.partial.set(path, value).unwrap();
    }
    r
}

proptest! {
    #[test]
    fn disjoint_merges_commute(
        base in prop::collection::vec((0usize..FIELDS.len(), 1.0f64..40.0), 0..4),
        split in prop::collection::vec((0usize..FIELDS.len(), 1.0f64..40.0, any::<bool>()), 0..8),
    ) {
        let acc = partial_from(&base).partial;
        let free = |i: &usize| !base.iter().any(|(j, _)| j == i);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (i, x, left) in split {
            if !free(&i) || a.iter().chain(&b).any(|(j, _)| *j == i) {
                continue;
            }
            if left { a.push((i, x)) } else { b.push((i, x)) }
        }
        let (ra, rb) = (partial_from(&a), partial_from(&b));
        let ab = merge_turns(&merge_turns(&acc, &ra).merged, &rb);
        let ba = merge_turns(&merge_turns(&acc, &rb).merged, &ra);
        prop_assert_eq!(&ab.merged, &ba.merged);
        prop_assert!(ab.conflicts.is_empty() && ba.conflicts.is_empty());
    }

    #[test]
    fn merging_never_overwrites(
        base in prop::collection::vec((0usize..FIELDS.len(), 1.0f64..40.0), 1..5),
        update in prop::collection::vec((0usize..FIELDS.len(), 1.0f64..40.0), 0..6),
    ) {
        let acc = partial_from(&base).partial;
        let m = merge_turns(&acc, &partial_from(&update));
        for (path, value) in acc.entries() {
            prop_assert_eq!(m.merged.get(&path), Some(value));
        }
    }
}
