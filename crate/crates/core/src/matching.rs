//! Subgraph matching of patterns against molecules.
//!
//! Backtracking search in the VF2 spirit: pattern atoms are visited in an
//! order that always extends the mapped region through a bond and picks the
//! most constrained atom first, and a candidate is accepted only if every
//! pattern bond back into the mapped region is present and satisfied.

use std::collections::BTreeMap;

use crate::mol::MoleculeGraph;
use crate::smarts::{MolContext, Pattern};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    /// `atom_map[pattern atom] = molecule atom`.
    pub atom_map: Vec<usize>,
    /// Sorted molecule bond indices covered by pattern bonds.
    pub bond_set: Vec<usize>,
}

impl Match {
    pub fn atom_set(&self) -> Vec<usize> {
        let mut s = self.atom_map.clone();
        s.sort_unstable();
        s
    }
}

struct Plan {
    order: Vec<usize>,
    /// For each position in `order` after the first: an already-placed
    /// pattern neighbour to expand from.
    anchor: Vec<Option<usize>>,
    /// For each pattern atom: (earlier pattern atom, pattern bond index).
    back_bonds: Vec<Vec<(usize, usize)>>,
}

fn plan(p: &Pattern, candidates: &[Vec<bool>]) -> Plan {
    let n = p.atoms.len();
    let count = |i: usize| candidates[i].iter().filter(|&&c| c).count();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut anchor = Vec::with_capacity(n);
    let start = (0..n).min_by_key(|&i| (count(i), i)).unwrap();
    placed[start] = true;
    order.push(start);
    anchor.push(None);
    while order.len() < n {
        let mut best: Option<(usize, usize, usize)> = None; // (count, atom, anchor)
        for b in &p.bonds {
            let (x, y) = b.endpoints;
            let (from, to) = match (placed[x], placed[y]) {
                (true, false) => (x, y),
                (false, true) => (y, x),
                _ => continue,
            };
            let key = (count(to), to, from);
            if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
                best = Some(key);
            }
        }
        let (_, to, from) = best.expect("pattern is connected");
        placed[to] = true;
        order.push(to);
        anchor.push(Some(from));
    }
    let mut position = vec![0; n];
    for (k, &a) in order.iter().enumerate() {
        position[a] = k;
    }
    let mut back_bonds = vec![Vec::new(); n];
    for (bi, b) in p.bonds.iter().enumerate() {
        let (x, y) = b.endpoints;
        if position[x] < position[y] {
            back_bonds[y].push((x, bi));
        } else {
            back_bonds[x].push((y, bi));
        }
    }
    Plan {
        order,
        anchor,
        back_bonds,
    }
}

/// All distinct embeddings of `p` in `m`, one per (atom set, bond set), sorted
/// by atom set then bond set.
pub fn find_matches(p: &Pattern, m: &MoleculeGraph) -> Vec<Match> {
    let ctx = MolContext::new(m);
    find_matches_in(p, &ctx)
}

/// As [`find_matches`], reusing a prepared molecule context.
pub fn find_matches_in(p: &Pattern, ctx: &MolContext<'_>) -> Vec<Match> {
    let n_pat = p.atoms.len();
    let n_mol = ctx.mol.atom_count();
    if n_pat == 0 || n_pat > n_mol {
        return Vec::new();
    }
    let candidates: Vec<Vec<bool>> = p
        .atoms
        .iter()
        .map(|pa| (0..n_mol).map(|i| pa.expr.matches(ctx, i)).collect())
        .collect();
    if candidates.iter().any(|c| !c.contains(&true)) {
        return Vec::new();
    }
    let plan = plan(p, &candidates);

    let mut found: BTreeMap<(Vec<usize>, Vec<usize>), Match> = BTreeMap::new();
    let mut map = vec![usize::MAX; n_pat];
    let mut used = vec![false; n_mol];
    let mut bond_img = vec![usize::MAX; p.bonds.len()];

    struct Search<'s, 'c> {
        p: &'s Pattern,
        ctx: &'s MolContext<'c>,
        plan: &'s Plan,
        candidates: &'s [Vec<bool>],
    }

    impl Search<'_, '_> {
        fn feasible(&self, pa: usize, ma: usize, map: &[usize], bond_img: &mut [usize]) -> bool {
            for &(prev, bi) in &self.plan.back_bonds[pa] {
                let target = map[prev];
                let Some(&(_, mb)) = self.ctx.adjacency[ma].iter().find(|&&(w, _)| w == target)
                else {
                    return false;
                };
                if !self.p.bonds[bi].expr.matches(self.ctx, mb) {
                    return false;
                }
                bond_img[bi] = mb;
            }
            true
        }

        fn run(
            &self,
            depth: usize,
            map: &mut [usize],
            used: &mut [bool],
            bond_img: &mut [usize],
            found: &mut BTreeMap<(Vec<usize>, Vec<usize>), Match>,
        ) {
            if depth == self.plan.order.len() {
                let mut atoms = map.to_vec();
                atoms.sort_unstable();
                let mut bonds = bond_img.to_vec();
                bonds.sort_unstable();
                found
                    .entry((atoms, bonds.clone()))
                    .or_insert_with(|| Match {
                        atom_map: map.to_vec(),
                        bond_set: bonds,
                    });
                return;
            }
            let pa = self.plan.order[depth];
            let pool: Vec<usize> = match self.plan.anchor[depth] {
                None => (0..used.len()).collect(),
                Some(prev) => self.ctx.adjacency[map[prev]]
                    .iter()
                    .map(|&(w, _)| w)
                    .collect(),
            };
            for ma in pool {
                if used[ma] || !self.candidates[pa][ma] {
                    continue;
                }
                if !self.feasible(pa, ma, map, bond_img) {
                    continue;
                }
                map[pa] = ma;
                used[ma] = true;
                self.run(depth + 1, map, used, bond_img, found);
                used[ma] = false;
                map[pa] = usize::MAX;
            }
        }
    }

    let search = Search {
        p,
        ctx,
        plan: &plan,
        candidates: &candidates,
    };
    search.run(0, &mut map, &mut used, &mut bond_img, &mut found);
    found.into_values().collect()
}

/// True when `p` has at least one embedding in the molecule.
pub fn has_match(p: &Pattern, ctx: &MolContext<'_>) -> bool {
    !find_matches_in(p, ctx).is_empty()
}

/// Union of matched atoms and bonds as 0/1 masks sized to the molecule.
pub fn match_mask(matches: &[Match], m: &MoleculeGraph) -> (Vec<bool>, Vec<bool>) {
    let mut atoms = vec![false; m.atom_count()];
    let mut bonds = vec![false; m.bond_count()];
    for mt in matches {
        for &a in &mt.atom_map {
            atoms[a] = true;
        }
        for &b in &mt.bond_set {
            bonds[b] = true;
        }
    }
    (atoms, bonds)
}
