use std::path::PathBuf;

use flatbrowse::flat::{emit_text, from_structured, parse_module, to_interface, to_structured};
use flatbrowse::ir::{
    collect_calls, free_vars_of, subexpressions, well_formed, Expr, Prog, Rule, Visibility,
};
use flatbrowse::testkit::{prelude_index, random_program};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus_files() -> Vec<(String, String)> {
    let dir = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus"));
    let mut out: Vec<(String, String)> = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "fl").then(|| {
                (
                    p.display().to_string(),
                    std::fs::read_to_string(&p).unwrap(),
                )
            })
        })
        .collect();
    out.sort();
    assert!(out.len() >= 2);
    out
}

fn generated(seed: u64) -> Prog {
    random_program(&mut ChaCha8Rng::seed_from_u64(seed), "Gen")
}

#[test]
fn corpus_text_is_stable_after_one_normalization() {
    for (path, text) in corpus_files() {
        let p = parse_module(&text).unwrap_or_else(|e| panic!("{path}: {e}"));
        let once = emit_text(&p);
        let again = parse_module(&once).unwrap();
        assert_eq!(again, p, "{path}");
        assert_eq!(emit_text(&again), once, "{path}");
        assert_eq!(from_structured(&to_structured(&p)).unwrap(), p, "{path}");
        let i = to_interface(&p);
        assert_eq!(to_interface(&i), i, "{path}");
    }
}

#[test]
fn generator_output_is_well_formed() {
    for seed in 0..200 {
        let p = generated(seed);
        let diags = well_formed(&p, &prelude_index());
        assert!(
            diags.is_empty(),
            "seed {seed}: {diags:?}\n{}",
            emit_text(&p)
        );
    }
}

#[test]
fn example_document_has_functions_in_source_order() {
    let (_, text) = corpus_files()
        .into_iter()
        .find(|(p, _)| p.ends_with("Example.fl"))
        .unwrap();
    let p = parse_module(&text).unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&to_structured(&p)).unwrap();
    let names: Vec<&str> = doc["functions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["name"]["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["conc", "last", "unknown", "coin"]);
}

fn check_free_vars(e: &Expr) -> Result<(), TestCaseError> {
    if let Expr::Free(vs, body) = e {
        let mut expected = free_vars_of(body);
        for v in vs {
            expected.remove(v);
        }
        prop_assert_eq!(free_vars_of(e), expected);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn text_round_trip(seed in any::<u64>()) {
        let p = generated(seed);
        let text = emit_text(&p);
        let back = parse_module(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &p, "{}", text);
        prop_assert_eq!(emit_text(&back), text);
    }

    #[test]
    fn structured_round_trip(seed in any::<u64>()) {
        let p = generated(seed);
        let bytes = to_structured(&p);
        prop_assert_eq!(from_structured(&bytes).unwrap(), p.clone());
        prop_assert_eq!(to_structured(&from_structured(&bytes).unwrap()), bytes);
    }

    #[test]
    fn interface_idempotent_and_shrinking(seed in any::<u64>()) {
        let p = generated(seed);
        let i = to_interface(&p);
        prop_assert_eq!(to_interface(&i), i.clone());
        prop_assert_eq!(&i.name, &p.name);
        prop_assert_eq!(&i.imports, &p.imports);
        for t in &i.types {
            let orig = p.types.iter().find(|o| o.name == t.name).unwrap();
            prop_assert_eq!(orig.visibility, Visibility::Public);
        }
        for f in &i.functions {
            let orig = p.functions.iter().find(|o| o.name == f.name).unwrap();
            prop_assert_eq!(orig.visibility, Visibility::Public);
            prop_assert!(matches!(&f.rule, Rule::External(e) if e == "interface"));
        }
    }

    #[test]
    fn interface_text_parses_back(seed in any::<u64>()) {
        let p = generated(seed);
        let i = to_interface(&p);
        let text = flatbrowse::views::interface_view(&p);
        prop_assert_eq!(parse_module(&text).unwrap(), i);
    }

    #[test]
    fn free_vars_and_calls(seed in any::<u64>()) {
        let p = generated(seed);
        for f in &p.functions {
            let Some(body) = f.body() else { continue };
            let all = collect_calls(body);
            for sub in subexpressions(body) {
                check_free_vars(sub)?;
                prop_assert!(collect_calls(sub).is_subset(&all));
            }
        }
    }

    #[test]
    fn well_formed_is_deterministic(seed in any::<u64>()) {
        let mut p = generated(seed);
        // Introduce some violations so the list is not trivially empty.
        if let Some(f) = p.functions.first_mut() {
            f.arity += 1;
        }
        if let Some(t) = p.types.first().cloned() {
            p.types.push(t);
        }
        let ix = prelude_index();
        prop_assert_eq!(well_formed(&p, &ix), well_formed(&p.clone(), &ix));
    }

    #[test]
    fn case_constructors_resolve_to_one_type(seed in any::<u64>()) {
        let p = generated(seed);
        let text = emit_text(&p);
        let parsed = parse_module(&text).unwrap();
        let mut ix = prelude_index();
        prop_assume!(well_formed(&parsed, &ix).is_empty());
        for t in &parsed.types {
            ix.insert(t.clone());
        }
        for f in &parsed.functions {
            let Some(body) = f.body() else { continue };
            for e in subexpressions(body) {
                if let Expr::Case(_, _, bs) = e {
                    let owners: std::collections::BTreeSet<_> = bs
                        .iter()
                        .map(|b| ix.type_of(&b.pattern.constructor).map(|t| t.name.clone()))
                        .collect();
                    prop_assert_eq!(owners.len(), 1);
                    prop_assert!(owners.iter().all(Option::is_some));
                }
            }
        }
    }

    #[test]
    fn parser_is_total(text in "\\PC{0,200}") {
        let _ = parse_module(&text);
    }

    #[test]
    fn parser_is_total_on_mutated_programs(seed in any::<u64>(), cut in 0usize..2000, junk in "[(){};=|:a-zA-Z \n]{0,6}") {
        let text = emit_text(&generated(seed));
        let mut at = cut.min(text.len());
        while !text.is_char_boundary(at) {
            at -= 1;
        }
        let mutated = format!("{}{}{}", &text[..at], junk, &text[at..]);
        let _ = parse_module(&mutated);
    }
}
