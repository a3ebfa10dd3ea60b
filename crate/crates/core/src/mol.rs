//! Molecular graph types.

use serde::{Deserialize, Serialize};

use crate::element::Element;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the valence sum used for implicit hydrogen counting.
    pub(crate) fn valence_contribution(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    pub aromatic: bool,
    /// Hydrogen count written inside a bracket atom. `None` for organic-subset atoms.
    pub explicit_h: Option<u8>,
    /// Hydrogens implied by the default valence model, fixed at parse time.
    pub implicit_h: u8,
    pub index: usize,
}

impl Atom {
    pub fn hydrogen_count(&self) -> u8 {
        self.explicit_h.unwrap_or(self.implicit_h)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    /// Stored with the lower index first.
    pub endpoints: (usize, usize),
    pub order: BondOrder,
    pub index: usize,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.endpoints.0 == atom {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }

    pub fn contains(&self, atom: usize) -> bool {
        self.endpoints.0 == atom || self.endpoints.1 == atom
    }
}

/// An undirected simple molecular graph with hydrogens held implicitly on atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoleculeGraph {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    /// Smallest set of smallest rings, each an ordered atom cycle. Empty until
    /// [`crate::rings::perceive_rings`] has run.
    pub rings: Vec<Vec<usize>>,
    pub source_smiles: String,
}

impl MoleculeGraph {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// Per-atom list of `(neighbor, bond index)` in bond order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for b in &self.bonds {
            let (u, v) = b.endpoints;
            adj[u].push((v, b.index));
            adj[v].push((u, b.index));
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.atoms.len()];
        for b in &self.bonds {
            deg[b.endpoints.0] += 1;
            deg[b.endpoints.1] += 1;
        }
        deg
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        let key = (a.min(b), a.max(b));
        self.bonds.iter().find(|bond| bond.endpoints == key)
    }

    /// Connected component id per atom, numbered in order of first appearance.
    pub fn component_labels(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut label = vec![usize::MAX; self.atoms.len()];
        let mut next = 0;
        for start in 0..self.atoms.len() {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &(v, _) in &adj[u] {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_count(&self) -> usize {
        self.component_labels()
            .into_iter()
            .max()
            .map_or(0, |m| m + 1)
    }

    /// `|bonds| - |atoms| + components`, the dimension of the cycle space.
    pub fn circuit_rank(&self) -> usize {
        (self.bonds.len() + self.component_count()).saturating_sub(self.atoms.len())
    }

    /// Keeps only the atoms selected by `keep`, renumbering atoms and bonds in
    /// their original relative order. Rings are remapped when fully retained.
    pub fn induced_subgraph(&self, keep: &[bool]) -> MoleculeGraph {
        let mut remap = vec![usize::MAX; self.atoms.len()];
        let mut atoms = Vec::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            if keep[i] {
                remap[i] = atoms.len();
                atoms.push(Atom {
                    index: atoms.len(),
                    ..atom.clone()
                });
            }
        }
        let mut bonds = Vec::new();
        for b in &self.bonds {
            let (u, v) = b.endpoints;
            if keep[u] && keep[v] {
                bonds.push(Bond {
                    endpoints: (remap[u], remap[v]),
                    order: b.order,
                    index: bonds.len(),
                });
            }
        }
        let rings = self
            .rings
            .iter()
            .filter(|r| r.iter().all(|&a| keep[a]))
            .map(|r| r.iter().map(|&a| remap[a]).collect())
            .collect();
        MoleculeGraph {
            atoms,
            bonds,
            rings,
            source_smiles: self.source_smiles.clone(),
        }
    }
}

/// Returns the connected component with the most atoms. Ties go to the
/// fragment whose first atom appears earliest.
pub fn strip_to_largest_fragment(m: &MoleculeGraph) -> MoleculeGraph {
    let labels = m.component_labels();
    let n_comp = labels.iter().copied().max().map_or(0, |x| x + 1);
    if n_comp <= 1 {
        return m.clone();
    }
    let mut sizes = vec![0usize; n_comp];
    for &l in &labels {
        sizes[l] += 1;
    }
    // components are numbered by first appearance, so the first maximum wins ties
    let mut best = 0;
    for (c, &s) in sizes.iter().enumerate() {
        if s > sizes[best] {
            best = c;
        }
    }
    let keep: Vec<bool> = labels.iter().map(|&l| l == best).collect();
    m.induced_subgraph(&keep)
}

/// Marks bonds that lie on at least one cycle (i.e. are not bridges).
pub fn cyclic_bonds(m: &MoleculeGraph) -> Vec<bool> {
    let n = m.atoms.len();
    let adj = m.adjacency();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut cyclic = vec![true; m.bonds.len()];
    let mut time = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // iterative DFS: (atom, parent bond, next adjacency position)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = time;
        low[root] = time;
        time += 1;
        while let Some(top) = stack.last_mut() {
            let (u, parent_bond) = (top.0, top.1);
            if top.2 < adj[u].len() {
                let (v, b) = adj[u][top.2];
                top.2 += 1;
                if b == parent_bond {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = time;
                    low[v] = time;
                    time += 1;
                    stack.push((v, b, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        cyclic[parent_bond] = false;
                    }
                }
            }
        }
    }
    cyclic
}

/// Atoms incident to at least one cyclic bond.
pub fn cyclic_atoms(m: &MoleculeGraph) -> Vec<bool> {
    let mut ring_atom = vec![false; m.atoms.len()];
    for (b, is_ring) in m.bonds.iter().zip(cyclic_bonds(m)) {
        if is_ring {
            ring_atom[b.endpoints.0] = true;
            ring_atom[b.endpoints.1] = true;
        }
    }
    ring_atom
}
