use std::collections::BTreeMap;

use serde_json::Value;
use slopesim_core::extract::extract_rule_based;

/// Numbers agree to 1e-12 relative; everything else must be identical.
pub fn same(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            x == y || (x - y).abs() <= 1e-12 * x.abs().max(y.abs())
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| same(v, w)))
        }
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(v, w)| same(v, w))
        }
        _ => a == b,
    }
}

/// Returns a description of the first difference from the golden record.
pub fn corpus_mismatch(case: &Value) -> Option<String> {
    let text = case["text"].as_str().unwrap();
    let r = extract_rule_based(text);
    let got: BTreeMap<String, Value> = r.partial.entries().into_iter().collect();
    let want: BTreeMap<String, Value> = case["fields"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if got.keys().ne(want.keys()) || !got.iter().all(|(k, v)| same(v, &want[k])) {
        return Some(format!("{text:?}: fields {got:?} != {want:?}"));
    }
    let missing: Vec<String> = serde_json::from_value(case["missing_required"].clone()).unwrap();
    if r.missing_required != missing {
        return Some(format!(
            "{text:?}: missing {:?} != {missing:?}",
            r.missing_required
        ));
    }
    let conflicts = serde_json::to_value(&r.conflicts).unwrap();
    if !same(&conflicts, &case["conflicts"]) {
        return Some(format!(
            "{text:?}: conflicts {conflicts} != {}",
            case["conflicts"]
        ));
    }
    None
}
