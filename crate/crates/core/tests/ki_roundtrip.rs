//! parse -> print -> parse over shipped packs and generated rules.

mod support;

use kbrl::harness::{shipped_pack_dir, SHIPPED_PACKS};
use kbrl::ki::{parse_ki, parse_rules};
use proptest::prelude::*;
use support::kigen::Gen;

#[test]
fn every_shipped_rule_survives_a_round_trip() {
    let mut files = 0;
    let mut rules = 0;
    for pack in SHIPPED_PACKS {
        let dir = shipped_pack_dir(pack);
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_none_or(|x| x != "ki") {
                continue;
            }
            files += 1;
            let text = std::fs::read_to_string(&path).unwrap();
            let parsed = parse_rules(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!(!parsed.is_empty(), "{} has no rules", path.display());
            for ki in parsed {
                let printed = ki.to_source();
                let again = parse_ki(&printed).unwrap_or_else(|e| {
                    panic!(
                        "{}: reprint of {} fails: {e}\n{printed}",
                        path.display(),
                        ki.name
                    )
                });
                assert_eq!(ki, again, "{}: {}", path.display(), ki.name);
                rules += 1;
            }
        }
    }
    assert!(files >= SHIPPED_PACKS.len());
    assert!(rules >= 20);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn generated_rules_round_trip(seed in any::<u64>()) {
        let src = Gen::new(seed).rule();
        let ki = parse_ki(&src).map_err(|e| TestCaseError::fail(format!("{e}\n{src}")))?;
        let printed = ki.to_source();
        let again = parse_ki(&printed).map_err(|e| TestCaseError::fail(format!("{e}\n{printed}")))?;
        prop_assert_eq!(&ki, &again, "{}", printed);
        prop_assert_eq!(printed, again.to_source());
    }
}

#[test]
fn generator_covers_the_grammar() {
    let mut seen = std::collections::BTreeSet::new();
    for seed in 0..300 {
        let src = Gen::new(seed).rule();
        for word in [
            "related via",
            "not ",
            " and ",
            " or ",
            "exists",
            "graph.set",
            "handler",
            "issue.unset",
            " in ",
            "${",
        ] {
            if src.contains(word) {
                seen.insert(word);
            }
        }
    }
    assert_eq!(seen.len(), 10, "{seen:?}");
}
