#![allow(dead_code)]

use bxaic_core::{Atom, Bond, BondOrder, Element, MoleculeGraph};
use proptest::prelude::*;

pub mod oracles;

pub const FIXTURE_CORPUS: &str = include_str!("../fixtures/corpus_1000.smi");
pub const LABELING_CORPUS: &str = include_str!("../fixtures/labeling_corpus.smi");

pub fn smiles_column(text: &str) -> Vec<&str> {
    text.lines()
        .filter_map(|l| l.split_whitespace().next())
        .collect()
}

pub fn graph(atoms: &[(Element, i8, bool)], bonds: &[(usize, usize, BondOrder)]) -> MoleculeGraph {
    MoleculeGraph {
        atoms: atoms
            .iter()
            .enumerate()
            .map(|(i, &(element, formal_charge, aromatic))| Atom {
                element,
                formal_charge,
                aromatic,
                explicit_h: None,
                implicit_h: 0,
                index: i,
            })
            .collect(),
        bonds: bonds
            .iter()
            .enumerate()
            .map(|(i, &(u, v, order))| Bond {
                endpoints: (u.min(v), u.max(v)),
                order,
                index: i,
            })
            .collect(),
        rings: Vec::new(),
        source_smiles: String::new(),
    }
}

/// Atom `i` of `m` becomes atom `perm[i]`; bonds are listed in `bond_order`.
pub fn permute(m: &MoleculeGraph, perm: &[usize], bond_order: &[usize]) -> MoleculeGraph {
    let mut atoms = vec![(Element::C, 0, false); m.atom_count()];
    for (i, a) in m.atoms.iter().enumerate() {
        atoms[perm[i]] = (a.element, a.formal_charge, a.aromatic);
    }
    let bonds: Vec<_> = bond_order
        .iter()
        .map(|&b| {
            let (u, v) = m.bonds[b].endpoints;
            (perm[u], perm[v], m.bonds[b].order)
        })
        .collect();
    graph(&atoms, &bonds)
}

/// Label-preserving bijection search with no pruning beyond atom labels.
pub fn brute_isomorphic(a: &MoleculeGraph, b: &MoleculeGraph) -> bool {
    let n = a.atom_count();
    if n != b.atom_count() || a.bond_count() != b.bond_count() {
        return false;
    }
    let label = |m: &MoleculeGraph, i: usize| {
        let x = &m.atoms[i];
        (x.element, x.formal_charge, x.aromatic)
    };
    let edge = |m: &MoleculeGraph, u: usize, v: usize| m.bond_between(u, v).map(|b| b.order);
    fn rec(
        i: usize,
        n: usize,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        ok: &dyn Fn(&[usize]) -> bool,
        fits: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        if i == n {
            return ok(map);
        }
        for c in 0..n {
            if !used[c] && fits(i, c) {
                used[c] = true;
                map.push(c);
                if rec(i + 1, n, map, used, ok, fits) {
                    return true;
                }
                map.pop();
                used[c] = false;
            }
        }
        false
    }
    let fits = |i: usize, c: usize| label(a, i) == label(b, c);
    let ok = |map: &[usize]| {
        a.bonds
            .iter()
            .all(|bd| edge(b, map[bd.endpoints.0], map[bd.endpoints.1]) == Some(bd.order))
    };
    rec(0, n, &mut Vec::new(), &mut vec![false; n], &ok, &fits)
}

pub fn order_strategy() -> impl Strategy<Value = BondOrder> {
    prop_oneof![
        4 => Just(BondOrder::Single),
        2 => Just(BondOrder::Double),
        1 => Just(BondOrder::Triple),
        2 => Just(BondOrder::Aromatic),
    ]
}

/// Random simple graphs with up to `max_atoms` atoms over a small alphabet.
pub fn small_graph(
    max_atoms: usize,
    elements: &'static [Element],
) -> impl Strategy<Value = MoleculeGraph> {
    (1..=max_atoms)
        .prop_flat_map(move |n| {
            let atoms = prop::collection::vec(
                (
                    prop::sample::select(elements),
                    prop_oneof![8 => Just(0i8), 1 => Just(1i8), 1 => Just(-1i8)],
                    any::<bool>(),
                ),
                n,
            );
            let edges = prop::collection::vec((0..n, 0..n, order_strategy()), 0..=(2 * n));
            (atoms, edges)
        })
        .prop_map(|(atoms, edges)| {
            let mut seen = std::collections::BTreeSet::new();
            let bonds: Vec<_> = edges
                .into_iter()
                .filter(|&(u, v, _)| u != v && seen.insert((u.min(v), u.max(v))))
                .collect();
            graph(&atoms, &bonds)
        })
}

/// A graph together with an atom permutation and a bond reordering.
pub fn graph_and_permutation(
    max_atoms: usize,
    elements: &'static [Element],
) -> impl Strategy<Value = (MoleculeGraph, Vec<usize>, Vec<usize>)> {
    small_graph(max_atoms, elements).prop_flat_map(|g| {
        let n = g.atom_count();
        let m = g.bond_count();
        (
            Just(g),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            Just((0..m).collect::<Vec<_>>()).prop_shuffle(),
        )
    })
}
