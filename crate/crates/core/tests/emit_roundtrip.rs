mod common;

use common::gen::{random_problem, seeded};
use proptest::prelude::*;
use slopesim_core::emit::{emit, lint, parse_script, TargetProfile};
use slopesim_core::model::{canonical_hash, Target};

fn profiles() -> [(TargetProfile, Target); 2] {
    [
        (TargetProfile::adonis(), Target::AdonisProfile),
        (TargetProfile::hyrcan(), Target::HyrcanProfile),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_of_emit_is_hash_equal(seed in any::<u64>()) {
        for (profile, target) in profiles() {
            let p = random_problem(&mut seeded(seed), target);
            let script = emit(&p, &profile).unwrap();
            let back = parse_script(&script.text, &profile).unwrap();
            prop_assert_eq!(canonical_hash(&back).unwrap(), canonical_hash(&p).unwrap());
            prop_assert_eq!(&back.layers, &p.layers);
            prop_assert_eq!(&back.geometry, &p.geometry);
            prop_assert_eq!(back.analysis.target, target);
        }
    }

    #[test]
    fn whitespace_and_comments_are_insignificant(seed in any::<u64>()) {
        for (profile, target) in profiles() {
            let p = random_problem(&mut seeded(seed), target);
            let script = emit(&p, &profile).unwrap();
            let noisy: String = script
                .text
                .lines()
                .enumerate()
                .map(|(i, l)| {
                    let spaced = match l.split_once('(') {
                        Some((head, args)) => format!("{head} ( \t{args}"),
                        None => l.replacen(' ', "  \t ", 1),
                    };
                    format!("\n   {spaced}   # note {i}\n\n# a comment line\n")
                })
                .collect();
            let back = parse_script(&noisy, &profile).unwrap();
            prop_assert_eq!(canonical_hash(&back).unwrap(), script.problem_hash);
        }
    }

    /// Changing any single token of an emitted script either breaks the
    /// parse or changes the problem.
    #[test]
    fn grammar_is_closed_under_token_mutation(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        for (profile, target) in profiles() {
            let p = random_problem(&mut seeded(seed), target);
            let text = emit(&p, &profile).unwrap().text;
            let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
            let i = pick.index(lines.len());
            let words: Vec<&str> = lines[i].split(' ').collect();
            let j = pick.index(words.len());
            let mut mutated_words: Vec<String> = words.iter().map(|w| w.to_string()).collect();
            mutated_words[j] = format!("{}x", words[j]);
            let mut mutated: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
            mutated[i] = mutated_words.join(" ");
            match parse_script(&mutated.join("\n"), &profile) {
                Err(e) => prop_assert!(e.line >= 1),
                Ok(q) => prop_assert_ne!(canonical_hash(&q).ok(), canonical_hash(&p).ok()),
            }
        }
    }
}

#[test]
fn emission_is_deterministic_and_injective() {
    let mut seen = std::collections::HashMap::new();
    let mut rng = seeded(7);
    for _ in 0..100 {
        let p = random_problem(&mut rng, Target::HyrcanProfile);
        let a = emit(&p, &TargetProfile::hyrcan()).unwrap();
        let b = emit(&p, &TargetProfile::hyrcan()).unwrap();
        assert_eq!(a.text, b.text);
        if let Some(prev) = seen.insert(a.text.clone(), a.problem_hash.clone()) {
            assert_eq!(prev, a.problem_hash);
        }
    }
    let hashes: std::collections::HashSet<_> = seen.values().collect();
    assert_eq!(hashes.len(), seen.len());
}

#[test]
fn generated_scripts_lint_cleanly_at_default_resolution() {
    let mut rng = seeded(11);
    let mut p = random_problem(&mut rng, Target::AdonisProfile);
    p.analysis.slice_count = 50;
    p.analysis.search.center_grid.nx = 10;
    p.analysis.search.center_grid.ny = 10;
    for l in &mut p.layers {
        l.saturated_unit_weight = None;
    }
    let text = emit(&p, &TargetProfile::adonis()).unwrap().text;
    assert_eq!(lint(&text, &TargetProfile::adonis()).unwrap(), vec![]);
}
