//! Structural identity: an iterative label-refinement hash and an exact
//! isomorphism check used to confirm equal hashes.

use std::collections::VecDeque;

use crate::mol::{BondOrder, MoleculeGraph};

/// Above this size equal hashes are trusted without an isomorphism check.
pub const ISOMORPHISM_CHECK_LIMIT: usize = 64;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub(crate) fn mix(h: u64, x: u64) -> u64 {
    splitmix(h.rotate_left(5) ^ x)
}

fn bond_code(order: BondOrder) -> u64 {
    match order {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

/// Length of the shortest cycle through each atom, 0 when acyclic.
pub fn smallest_cycle_through(m: &MoleculeGraph) -> Vec<usize> {
    let n = m.atom_count();
    let adj = m.adjacency();
    let mut out = vec![0; n];
    for (v, slot) in out.iter_mut().enumerate() {
        // BFS tagging every vertex with the neighbour of v it descends from
        let mut dist = vec![usize::MAX; n];
        let mut branch = vec![usize::MAX; n];
        dist[v] = 0;
        let mut queue = VecDeque::new();
        for &(w, _) in &adj[v] {
            dist[w] = 1;
            branch[w] = w;
            queue.push_back(w);
        }
        let mut best = usize::MAX;
        while let Some(u) = queue.pop_front() {
            if 2 * dist[u] + 1 >= best {
                break;
            }
            for &(w, _) in &adj[u] {
                if w == v {
                    continue;
                }
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    branch[w] = branch[u];
                    queue.push_back(w);
                } else if branch[w] != branch[u] {
                    best = best.min(dist[u] + dist[w] + 1);
                }
            }
        }
        *slot = if best == usize::MAX { 0 } else { best };
    }
    out
}

fn initial_labels(m: &MoleculeGraph) -> Vec<u64> {
    let ring = smallest_cycle_through(m);
    m.atoms
        .iter()
        .zip(ring)
        .map(|(a, r)| {
            let mut h = mix(0x5158_4149_4300_0001, a.element.atomic_number() as u64);
            h = mix(h, a.formal_charge as i64 as u64);
            h = mix(h, u64::from(a.aromatic));
            mix(h, r as u64)
        })
        .collect()
}

/// Runs `rounds` refinement rounds and returns the per-atom labels.
fn refine(m: &MoleculeGraph, rounds: usize) -> Vec<u64> {
    let adj = m.adjacency();
    let mut labels = initial_labels(m);
    let mut scratch = Vec::new();
    for _ in 0..rounds {
        let next: Vec<u64> = (0..m.atom_count())
            .map(|i| {
                scratch.clear();
                scratch.extend(
                    adj[i]
                        .iter()
                        .map(|&(j, b)| mix(bond_code(m.bonds[b].order), labels[j])),
                );
                scratch.sort_unstable();
                scratch.iter().fold(mix(labels[i], 0xA7), |h, &x| mix(h, x))
            })
            .collect();
        labels = next;
    }
    labels
}

/// Structural digest under (element, charge, aromatic, bond order) labels.
/// Isomorphic graphs always hash equal; the converse is checked separately
/// with [`is_isomorphic`].
pub fn canonical_hash(m: &MoleculeGraph) -> u64 {
    let rounds = m.atom_count().max(1);
    let mut labels = refine(m, rounds);
    labels.sort_unstable();
    let h = mix(m.atom_count() as u64, m.bond_count() as u64);
    labels.into_iter().fold(h, mix)
}

/// Exact labelled graph isomorphism by backtracking over refined colour classes.
pub fn is_isomorphic(a: &MoleculeGraph, b: &MoleculeGraph) -> bool {
    let n = a.atom_count();
    if n != b.atom_count() || a.bond_count() != b.bond_count() {
        return false;
    }
    if n == 0 {
        return true;
    }
    let la = refine(a, n);
    let lb = refine(b, n);
    let mut sa = la.clone();
    let mut sb = lb.clone();
    sa.sort_unstable();
    sb.sort_unstable();
    if sa != sb {
        return false;
    }
    let adj_a = a.adjacency();
    let adj_b = b.adjacency();

    // visit order: BFS per component, so each atom after a root has a mapped neighbour
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, _) in &adj_a[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }

    let bond_order = |m: &MoleculeGraph, adj: &[Vec<(usize, usize)>], x: usize, y: usize| {
        adj[x]
            .iter()
            .find(|&&(w, _)| w == y)
            .map(|&(_, bi)| m.bonds[bi].order)
    };

    fn search(
        depth: usize,
        order: &[usize],
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        ctx: &dyn Fn(usize, usize, &[usize]) -> bool,
        n_b: usize,
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let u = order[depth];
        for cand in 0..n_b {
            if used[cand] || !ctx(u, cand, map) {
                continue;
            }
            map[u] = cand;
            used[cand] = true;
            if search(depth + 1, order, map, used, ctx, n_b) {
                return true;
            }
            map[u] = usize::MAX;
            used[cand] = false;
        }
        false
    }

    let feasible = |u: usize, cand: usize, map: &[usize]| -> bool {
        if la[u] != lb[cand] || adj_a[u].len() != adj_b[cand].len() {
            return false;
        }
        adj_a[u].iter().all(|&(v, bi)| {
            let mv = map[v];
            mv == usize::MAX || bond_order(b, &adj_b, cand, mv) == Some(a.bonds[bi].order)
        })
    };

    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    search(0, &order, &mut map, &mut used, &feasible, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    fn h(s: &str) -> u64 {
        canonical_hash(&parse_smiles(s).unwrap())
    }

    #[test]
    fn traversal_order_does_not_matter() {
        assert_eq!(h("OCC"), h("CCO"));
        assert_eq!(h("c1ccccc1O"), h("Oc1ccccc1"));
        assert_eq!(h("C1CC(N)CC1"), h("NC1CCCC1"));
    }

    #[test]
    fn different_structures_differ() {
        assert_ne!(h("CCO"), h("CCN"));
        assert_ne!(h("CC=O"), h("CCO"));
        assert_ne!(h("C[O-]"), h("CO"));
        assert_ne!(h("c1ccccc1"), h("C1CCCCC1"));
    }

    #[test]
    fn ring_sizes_break_regular_graph_ties() {
        // decalin and bicyclopentyl have identical degree sequences
        let decalin = parse_smiles("C1CCC2CCCCC2C1").unwrap();
        let bicyclopentyl = parse_smiles("C1CCC(C1)C1CCCC1").unwrap();
        assert_ne!(canonical_hash(&decalin), canonical_hash(&bicyclopentyl));
        assert!(!is_isomorphic(&decalin, &bicyclopentyl));
    }

    #[test]
    fn isomorphism_check() {
        let a = parse_smiles("CC(C)CO").unwrap();
        let b = parse_smiles("OCC(C)C").unwrap();
        let c = parse_smiles("CCCCO").unwrap();
        assert!(is_isomorphic(&a, &b));
        assert!(!is_isomorphic(&a, &c));
    }

    #[test]
    fn smallest_cycles() {
        let m = parse_smiles("C1CC1CC1CCCC1").unwrap();
        assert_eq!(smallest_cycle_through(&m), vec![3, 3, 3, 0, 5, 5, 5, 5, 5]);
        let m = parse_smiles("c1ccc2ccccc2c1").unwrap();
        assert!(smallest_cycle_through(&m).iter().all(|&s| s == 6));
    }
}
