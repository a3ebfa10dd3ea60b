//! Aromaticity flags for Kekulé-written rings.
//!
//! Lowercase atoms and `:` bonds from the input are kept as written. On top
//! of that, two ring shapes written with explicit double bonds are flagged:
//!
//! * six-membered rings of C/N atoms where every atom carries exactly one
//!   double bond lying inside the flagged ring system (benzene, pyridine);
//! * five-membered rings with one lone-pair donor (N with three connections,
//!   O or S with two, all single-bonded and uncharged) and four C/N atoms
//!   each carrying one such double bond (pyrrole, furan, thiophene).
//!
//! The "inside the ring system" condition is resolved as a fixpoint so fused
//! Kekulé systems such as naphthalene or indole are flagged as a whole.

use crate::element::Element;
use crate::mol::{BondOrder, MoleculeGraph};

/// Returns a copy of `m` with Kekulé aromatic rings converted. `m.rings` must
/// already hold the ring set.
pub fn perceive_aromaticity(m: &MoleculeGraph) -> MoleculeGraph {
    let mut out = m.clone();
    let adj = m.adjacency();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let ring_bonds = |ring: &[usize]| -> Vec<usize> {
        (0..ring.len())
            .filter_map(|i| {
                m.bond_between(ring[i], ring[(i + 1) % ring.len()])
                    .map(|b| b.index)
            })
            .collect()
    };

    let already_aromatic = |ring: &[usize]| {
        ring.iter().all(|&a| m.atoms[a].aromatic)
            && ring_bonds(ring)
                .iter()
                .all(|&b| m.bonds[b].order == BondOrder::Aromatic)
    };

    // double bonds per atom, and whether any triple bond is attached
    let mut doubles: Vec<Vec<usize>> = vec![Vec::new(); m.atom_count()];
    let mut has_triple = vec![false; m.atom_count()];
    for b in &m.bonds {
        match b.order {
            BondOrder::Double => {
                doubles[b.endpoints.0].push(b.index);
                doubles[b.endpoints.1].push(b.index);
            }
            BondOrder::Triple => {
                has_triple[b.endpoints.0] = true;
                has_triple[b.endpoints.1] = true;
            }
            _ => {}
        }
    }

    let is_donor = |a: usize| {
        let atom = &m.atoms[a];
        if atom.formal_charge != 0 || !doubles[a].is_empty() || has_triple[a] {
            return false;
        }
        match atom.element {
            Element::N => degree[a] + atom.hydrogen_count() as usize == 3,
            Element::O | Element::S => degree[a] == 2,
            _ => false,
        }
    };

    #[derive(Clone, Copy, PartialEq)]
    enum Role {
        Pi,
        Donor,
        Aromatic,
    }

    // local shape test: roles per atom, or None
    let local_roles = |ring: &[usize]| -> Option<Vec<Role>> {
        if !(ring.len() == 5 || ring.len() == 6) || already_aromatic(ring) {
            return None;
        }
        if ring_bonds(ring)
            .iter()
            .any(|&b| m.bonds[b].order == BondOrder::Triple)
        {
            return None;
        }
        let mut roles = Vec::with_capacity(ring.len());
        for &a in ring {
            let atom = &m.atoms[a];
            let cn = matches!(atom.element, Element::C | Element::N);
            let role = if atom.aromatic && doubles[a].is_empty() {
                Role::Aromatic
            } else if cn && doubles[a].len() == 1 && !has_triple[a] {
                Role::Pi
            } else if ring.len() == 5 && is_donor(a) {
                Role::Donor
            } else {
                return None;
            };
            roles.push(role);
        }
        let donors = roles.iter().filter(|r| **r == Role::Donor).count();
        let ok = match ring.len() {
            6 => donors == 0,
            _ => donors == 1,
        };
        ok.then_some(roles)
    };

    let mut candidates: Vec<(usize, Vec<Role>)> = m
        .rings
        .iter()
        .enumerate()
        .filter_map(|(i, r)| local_roles(r).map(|roles| (i, roles)))
        .collect();

    loop {
        let mut in_system = vec![false; m.bond_count()];
        for (i, _) in &candidates {
            for b in ring_bonds(&m.rings[*i]) {
                in_system[b] = true;
            }
        }
        let before = candidates.len();
        candidates.retain(|(i, roles)| {
            m.rings[*i].iter().zip(roles).all(|(&a, role)| match role {
                Role::Pi => in_system[doubles[a][0]],
                _ => true,
            })
        });
        if candidates.len() == before {
            break;
        }
    }

    for (i, _) in &candidates {
        let ring = &m.rings[*i];
        for &a in ring {
            out.atoms[a].aromatic = true;
        }
        for b in ring_bonds(ring) {
            out.bonds[b].order = BondOrder::Aromatic;
        }
    }
    out
}
