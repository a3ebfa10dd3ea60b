//! Agreement with labels and matches computed independently by a reference
//! toolkit (see scripts/make_reference_fixtures.py).

use std::collections::BTreeSet;

mod common;

use bxaic_core::matching::find_matches;
use bxaic_core::{bundled_pains, prepare_smiles};
use common::oracles::labeling_mismatches;

const PAINS_REFERENCE: &str = include_str!("fixtures/pains_reference.tsv");

#[test]
fn pains_patterns_match_reference_atom_sets() {
    let set = bundled_pains();
    let mut checked = 0;
    let mut failures = Vec::new();
    for line in PAINS_REFERENCE.lines().filter(|l| !l.starts_with('#')) {
        let cols: Vec<&str> = line.split('\t').collect();
        let (name, smiles, expected) = (cols[0], cols[1], cols[2]);
        let pattern = &set
            .patterns
            .iter()
            .find(|p| p.name == name)
            .unwrap_or_else(|| panic!("pattern {name} missing from asset"))
            .pattern;
        let expected: BTreeSet<Vec<usize>> = serde_json::from_str(expected).unwrap();
        let m = prepare_smiles(smiles).unwrap();
        let got: BTreeSet<Vec<usize>> = find_matches(pattern, &m)
            .iter()
            .map(|x| x.atom_set())
            .collect();
        if got != expected {
            failures.push(format!(
                "{name} on {smiles}: got {got:?}, expected {expected:?}"
            ));
        }
        checked += 1;
    }
    assert!(checked > 100);
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn every_bundled_pattern_has_a_positive_fixture() {
    let positives: BTreeSet<&str> = PAINS_REFERENCE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.ends_with("\t[]"))
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    for p in &bundled_pains().patterns {
        assert!(positives.contains(p.name.as_str()), "{}", p.name);
    }
}

#[test]
fn labels_and_masks_match_reference() {
    let (n, mismatches) = labeling_mismatches();
    assert_eq!(n, 200);
    assert!(mismatches.is_empty(), "{}", mismatches.join("\n"));
}
