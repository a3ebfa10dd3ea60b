//! Ring perception: a smallest set of smallest rings (minimum cycle basis).
//!
//! Candidate cycles are built from shortest-path trees rooted at every ring
//! atom (each tree plus one non-tree edge closes a cycle). Candidates are
//! sorted by length, then by their sorted atom-index list, and accepted
//! greedily while they stay linearly independent over GF(2) in edge space.
//! The accepted count always equals the circuit rank.

use std::collections::{BTreeSet, VecDeque};

use crate::mol::{cyclic_bonds, MoleculeGraph};

/// Returns a copy of `m` with `rings` filled by [`sssr`].
pub fn perceive_rings(m: &MoleculeGraph) -> MoleculeGraph {
    let mut out = m.clone();
    out.rings = sssr(m);
    out
}

#[derive(Clone)]
struct Candidate {
    atoms_sorted: Vec<usize>,
    cycle: Vec<usize>,
    edges: Vec<u64>,
}

pub fn sssr(m: &MoleculeGraph) -> Vec<Vec<usize>> {
    let rank = m.circuit_rank();
    if rank == 0 {
        return Vec::new();
    }
    let n = m.atom_count();
    let cyclic = cyclic_bonds(m);
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for b in &m.bonds {
        if cyclic[b.index] {
            let (u, v) = b.endpoints;
            adj[u].push((v, b.index));
            adj[v].push((u, b.index));
        }
    }
    let words = m.bond_count().div_ceil(64);

    let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
    let mut candidates: Vec<Candidate> = Vec::new();
    for root in 0..n {
        if adj[root].is_empty() {
            continue;
        }
        // BFS shortest-path tree in the cyclic subgraph
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut dist = vec![usize::MAX; n];
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(v, b) in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = Some((u, b));
                    queue.push_back(v);
                }
            }
        }
        let path_to_root = |mut x: usize| {
            let mut atoms = vec![x];
            let mut bonds = Vec::new();
            while let Some((p, b)) = parent[x] {
                atoms.push(p);
                bonds.push(b);
                x = p;
            }
            (atoms, bonds)
        };
        for b in &m.bonds {
            if !cyclic[b.index] {
                continue;
            }
            let (x, y) = b.endpoints;
            if dist[x] == usize::MAX || dist[y] == usize::MAX {
                continue;
            }
            if parent[x].is_some_and(|(_, pb)| pb == b.index)
                || parent[y].is_some_and(|(_, pb)| pb == b.index)
            {
                continue;
            }
            let (px, bx) = path_to_root(x);
            let (py, by) = path_to_root(y);
            // the two paths must meet only at the root
            let set_x: BTreeSet<usize> = px.iter().copied().collect();
            if py.iter().filter(|a| set_x.contains(a)).count() != 1 {
                continue;
            }
            let mut edges = vec![0u64; words];
            for &e in bx.iter().chain(by.iter()).chain(std::iter::once(&b.index)) {
                edges[e / 64] |= 1 << (e % 64);
            }
            if !seen.insert(edges.clone()) {
                continue;
            }
            // px = x .. root, py = y .. root
            let mut cycle: Vec<usize> = px.iter().rev().copied().collect();
            cycle.extend_from_slice(&py[..py.len() - 1]);
            let mut atoms_sorted = cycle.clone();
            atoms_sorted.sort_unstable();
            candidates.push(Candidate {
                atoms_sorted,
                cycle,
                edges,
            });
        }
    }

    candidates.sort_by(|a, b| {
        a.cycle
            .len()
            .cmp(&b.cycle.len())
            .then_with(|| a.atoms_sorted.cmp(&b.atoms_sorted))
            .then_with(|| a.edges.cmp(&b.edges))
    });

    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new(); // (pivot bit, row)
    let mut rings = Vec::with_capacity(rank);
    for c in candidates {
        let mut row = c.edges.clone();
        for (pivot, brow) in &basis {
            if row[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (w, bw) in row.iter_mut().zip(brow) {
                    *w ^= bw;
                }
            }
        }
        let Some(pivot) = first_set_bit(&row) else {
            continue;
        };
        // keep rows reduced at every pivot so elimination order does not matter
        for (_, brow) in basis.iter_mut() {
            if brow[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (w, rw) in brow.iter_mut().zip(&row) {
                    *w ^= rw;
                }
            }
        }
        basis.push((pivot, row));
        rings.push(normalize_cycle(c.cycle));
        if rings.len() == rank {
            break;
        }
    }
    rings
}

fn first_set_bit(row: &[u64]) -> Option<usize> {
    row.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// Rotates a cycle to start at its smallest atom, walking towards the
/// smaller of that atom's two ring neighbours.
fn normalize_cycle(mut cycle: Vec<usize>) -> Vec<usize> {
    let n = cycle.len();
    let (start, _) = cycle.iter().enumerate().min_by_key(|(_, a)| **a).unwrap();
    cycle.rotate_left(start);
    if n > 2 && cycle[n - 1] < cycle[1] {
        cycle[1..].reverse();
    }
    cycle
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    fn ring_sizes(s: &str) -> Vec<usize> {
        let m = parse_smiles(s).unwrap();
        let mut sizes: Vec<_> = sssr(&m).iter().map(Vec::len).collect();
        sizes.sort_unstable();
        sizes
    }

    fn assert_valid_cycles(s: &str) {
        let m = parse_smiles(s).unwrap();
        for ring in sssr(&m) {
            for i in 0..ring.len() {
                let a = ring[i];
                let b = ring[(i + 1) % ring.len()];
                assert!(m.bond_between(a, b).is_some(), "{s}: {ring:?}");
            }
            let distinct: BTreeSet<_> = ring.iter().collect();
            assert_eq!(distinct.len(), ring.len());
        }
    }

    #[test]
    fn simple_rings() {
        assert_eq!(ring_sizes("c1ccccc1"), vec![6]);
        assert_eq!(ring_sizes("CCCC"), Vec::<usize>::new());
        assert_eq!(ring_sizes("c1ccc2ccccc2c1"), vec![6, 6]);
        assert_eq!(ring_sizes("C1CCCCCC1"), vec![7]);
        assert_eq!(ring_sizes("c1ccc2[nH]ccc2c1"), vec![5, 6]);
    }

    #[test]
    fn bridged_and_cage_systems() {
        // norbornane
        assert_eq!(ring_sizes("C1CC2CCC1C2"), vec![5, 5]);
        // cubane: 5 independent four-rings
        assert_eq!(ring_sizes("C12C3C4C1C5C2C3C45"), vec![4, 4, 4, 4, 4]);
        // adamantane
        assert_eq!(ring_sizes("C1C2CC3CC1CC(C2)C3"), vec![6, 6, 6]);
        // spiro
        assert_eq!(ring_sizes("C1CCC2(C1)CCCC2"), vec![5, 5]);
        assert_valid_cycles("C12C3C4C1C5C2C3C45");
        assert_valid_cycles("C1C2CC3CC1CC(C2)C3");
    }

    #[test]
    fn normalized_order() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(sssr(&m), vec![vec![0, 1, 2, 3, 4, 5]]);
    }

    #[test]
    fn count_matches_circuit_rank() {
        for s in [
            "C1CC2CC1CC2",
            "c1ccc2c(c1)ccc1ccccc12",
            "C1CC1C1CC1.C1CCC1",
            "C1=CC2=C(C=C1)C(=CN2)CC(C(=O)O)N",
            "C1CC2CCC3CCCC4CCC(C1)C2C34",
        ] {
            let m = parse_smiles(s).unwrap();
            assert_eq!(sssr(&m).len(), m.circuit_rank(), "{s}");
            assert_valid_cycles(s);
        }
    }
}
