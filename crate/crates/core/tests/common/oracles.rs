//! Independent oracles shared by the core tests and the acceptance suite.

use std::collections::BTreeSet;

use bxaic_core::smarts::{MolContext, Pattern};
use bxaic_core::{prepare_smiles, Labeler, MoleculeGraph, TaskId};
use proptest::prelude::*;
use serde_json::Value;

use super::{smiles_column, FIXTURE_CORPUS, LABELING_CORPUS};

pub const LABELING_REFERENCE: &str = include_str!("../fixtures/labeling_reference.jsonl");

pub fn indices(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i)
        .collect()
}

const ATOMS: &[&str] = &[
    "C", "c", "N", "n", "O", "o", "S", "[#6]", "[#7]", "*", "a", "A", "[C,N]", "[!C]", "[R]",
    "[!R]", "[D2]", "[D3]", "[CH2]", "[CH3]", "[c;R]", "[N,O;!R]", "[#6&H1]", "[O-]", "[N+]",
    "[Cl,Br]",
];
const BONDS: &[&str] = &["", "", "-", "=", ":", "~", "@", "!@", "-,:", "!-"];

/// Every injective assignment of pattern atoms, deduplicated by (atom set,
/// bond set). Assignments are extended in pattern-atom order and abandoned as
/// soon as an atom predicate or a bond back to an earlier atom fails, which
/// prunes without changing the result. Predicates are the library's own; the
/// search is independent of it.
pub fn exhaustive(p: &Pattern, m: &MoleculeGraph) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    let ctx = MolContext::new(m);
    let mut out = BTreeSet::new();
    let mut map = Vec::with_capacity(p.atoms.len());
    fn rec(
        map: &mut Vec<usize>,
        p: &Pattern,
        ctx: &MolContext<'_>,
        out: &mut BTreeSet<(Vec<usize>, Vec<usize>)>,
    ) {
        let depth = map.len();
        if depth == p.atoms.len() {
            let mut bonds: Vec<usize> = p
                .bonds
                .iter()
                .map(|pb| {
                    ctx.mol
                        .bond_between(map[pb.endpoints.0], map[pb.endpoints.1])
                        .unwrap()
                        .index
                })
                .collect();
            let mut atoms = map.clone();
            atoms.sort_unstable();
            bonds.sort_unstable();
            out.insert((atoms, bonds));
            return;
        }
        for c in 0..ctx.mol.atom_count() {
            if map.contains(&c) || !p.atoms[depth].expr.matches(ctx, c) {
                continue;
            }
            map.push(c);
            let consistent = p.bonds.iter().all(|pb| {
                let (x, y) = pb.endpoints;
                if x.max(y) != depth {
                    return true;
                }
                ctx.mol
                    .bond_between(map[x], map[y])
                    .is_some_and(|b| pb.expr.matches(ctx, b.index))
            });
            if consistent {
                rec(map, p, ctx, out);
            }
            map.pop();
        }
    }
    rec(&mut map, p, &ctx, &mut out);
    out
}

pub fn small_molecules() -> &'static [MoleculeGraph] {
    static MOLS: std::sync::OnceLock<Vec<MoleculeGraph>> = std::sync::OnceLock::new();
    MOLS.get_or_init(load_small_molecules)
}

fn load_small_molecules() -> Vec<MoleculeGraph> {
    let mut out: Vec<MoleculeGraph> = smiles_column(FIXTURE_CORPUS)
        .into_iter()
        .chain(smiles_column(LABELING_CORPUS))
        .filter_map(|s| prepare_smiles(s).ok())
        .filter(|m| (2..=12).contains(&m.atom_count()))
        .collect();
    for s in [
        "c1ccc2ccccc2c1",
        "c1ccc2[nH]ccc2c1",
        "C1CC2CCC1C2",
        "OC(=O)C=CC#N",
        "C[N+](C)(C)CC([O-])=O",
    ] {
        out.push(prepare_smiles(s).unwrap());
    }
    out
}

/// Random connected pattern text: a chain with optional branches and at most
/// one ring closure.
pub fn pattern_text() -> impl Strategy<Value = String> {
    let atom = prop::sample::select(ATOMS);
    let bond = prop::sample::select(BONDS);
    (
        prop::collection::vec((atom, bond, 0u8..4), 1..=4),
        any::<bool>(),
        prop::sample::select(BONDS),
    )
        .prop_map(|(parts, ring, ring_bond)| {
            let mut s = String::new();
            let n = parts.len();
            for (i, (a, b, shape)) in parts.iter().enumerate() {
                if i > 0 {
                    s.push_str(b);
                }
                s.push_str(a);
                if i == 0 && ring && n >= 3 {
                    s.push('1');
                }
                if *shape == 0 && i + 1 < n {
                    s.push_str("(C)");
                }
            }
            if ring && n >= 3 {
                s.push_str(ring_bond);
                s.push('1');
            }
            s
        })
}

pub fn pattern_and_molecule() -> impl Strategy<Value = (String, usize)> {
    (pattern_text(), any::<prop::sample::Index>()).prop_map(|(p, i)| (p, i.index(usize::MAX)))
}

/// Returns mismatch descriptions; empty when all 7 labels and masks agree.
pub fn labeling_mismatches() -> (usize, Vec<String>) {
    let labeler = Labeler::default();
    let mut mismatches = Vec::new();
    let mut n = 0;
    for line in LABELING_REFERENCE.lines() {
        n += 1;
        let rec: Value = serde_json::from_str(line).unwrap();
        let smiles = rec["smiles"].as_str().unwrap();
        let id = rec["id"].as_str().unwrap();
        let m = prepare_smiles(smiles).unwrap();
        let lm = labeler.label_all(id, smiles, &m);
        for task in TaskId::ALL {
            let want = &rec["tasks"][task.name()];
            let got = lm.outcome(task);
            if want["label"].as_bool().unwrap() != got.label {
                mismatches.push(format!("{id} {task}: label {} ({smiles})", got.label));
            }
            let want_atoms: Vec<usize> = serde_json::from_value(want["atoms"].clone()).unwrap();
            if want_atoms != indices(&got.atom_mask) {
                mismatches.push(format!(
                    "{id} {task}: atoms {:?} vs {want_atoms:?} ({smiles})",
                    indices(&got.atom_mask)
                ));
            }
            match (&got.bond_mask, want["bonds"].is_null()) {
                (None, true) => {}
                (Some(mask), false) => {
                    let want_bonds: BTreeSet<(usize, usize)> =
                        serde_json::from_value(want["bonds"].clone()).unwrap();
                    let got_bonds: BTreeSet<(usize, usize)> = indices(mask)
                        .into_iter()
                        .map(|b| m.bonds[b].endpoints)
                        .collect();
                    if want_bonds != got_bonds {
                        mismatches.push(format!("{id} {task}: bonds differ ({smiles})"));
                    }
                }
                _ => mismatches.push(format!("{id} {task}: bond mask presence differs")),
            }
        }
    }
    (n, mismatches)
}
