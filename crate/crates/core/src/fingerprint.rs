//! Morgan-style circular fingerprints and Tanimoto similarity.

use thiserror::Error;

use crate::canon::mix;
use crate::mol::{cyclic_atoms, BondOrder, MoleculeGraph};

pub const DEFAULT_WIDTH: usize = 2048;
pub const DEFAULT_RADIUS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("fingerprint widths differ ({0} vs {1})")]
pub struct WidthMismatch(pub usize, pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    width: usize,
    pub radius: usize,
}

impl Fingerprint {
    pub fn empty(width: usize, radius: usize) -> Self {
        Fingerprint {
            words: vec![0; width.div_ceil(64)],
            width,
            radius,
        }
    }

    pub fn from_bits(width: usize, bits: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = Fingerprint::empty(width, 0);
        for b in bits {
            fp.set(b);
        }
        fp
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn set(&mut self, bit: usize) {
        assert!(
            bit < self.width,
            "bit {bit} out of range for width {}",
            self.width
        );
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn contains(&self, bit: usize) -> bool {
        bit < self.width && self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(|&b| self.contains(b))
    }
}

fn bond_code(order: BondOrder) -> u64 {
    match order {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

/// Iterative neighbourhood hashing: every atom starts from an invariant of
/// (element, heavy degree, hydrogens, charge, aromatic, ring membership);
/// each round folds in the sorted (bond order, neighbour id) pairs. Every
/// identifier from rounds `0..=radius` sets one bit (`id mod width`).
pub fn morgan_fingerprint(m: &MoleculeGraph, radius: usize, width: usize) -> Fingerprint {
    assert!(width > 0, "fingerprint width must be positive");
    let adj = m.adjacency();
    let in_ring = cyclic_atoms(m);
    let mut fp = Fingerprint::empty(width, radius);
    let mut ids: Vec<u64> = m
        .atoms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let mut h = mix(0x4D4F_5247_414E, a.element.atomic_number() as u64);
            h = mix(h, adj[i].len() as u64);
            h = mix(h, a.hydrogen_count() as u64);
            h = mix(h, a.formal_charge as i64 as u64);
            h = mix(h, u64::from(a.aromatic));
            mix(h, u64::from(in_ring[i]))
        })
        .collect();
    for &id in &ids {
        fp.set((id % width as u64) as usize);
    }
    for round in 1..=radius {
        let next: Vec<u64> = (0..m.atom_count())
            .map(|i| {
                let mut env: Vec<(u64, u64)> = adj[i]
                    .iter()
                    .map(|&(j, b)| (bond_code(m.bonds[b].order), ids[j]))
                    .collect();
                env.sort_unstable();
                env.into_iter()
                    .fold(mix(round as u64, ids[i]), |h, (bo, id)| mix(mix(h, bo), id))
            })
            .collect();
        for &id in &next {
            fp.set((id % width as u64) as usize);
        }
        ids = next;
    }
    fp
}

/// `|a ∧ b| / |a ∨ b|`, defined as 1.0 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, WidthMismatch> {
    if a.width != b.width {
        return Err(WidthMismatch(a.width, b.width));
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    fn fp(s: &str, r: usize) -> Fingerprint {
        morgan_fingerprint(&parse_smiles(s).unwrap(), r, DEFAULT_WIDTH)
    }

    #[test]
    fn tanimoto_small_sets() {
        let a = Fingerprint::from_bits(16, [1, 2, 3]);
        let b = Fingerprint::from_bits(16, [2, 3, 4]);
        assert_eq!(tanimoto(&a, &b).unwrap(), 0.5);
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        let c = Fingerprint::from_bits(16, [7, 8]);
        assert_eq!(tanimoto(&a, &c).unwrap(), 0.0);
        let e = Fingerprint::empty(16, 0);
        assert_eq!(tanimoto(&e, &e).unwrap(), 1.0);
        let wide = Fingerprint::from_bits(32, [1]);
        assert_eq!(tanimoto(&a, &wide), Err(WidthMismatch(16, 32)));
    }

    #[test]
    fn deterministic_and_self_similar() {
        let indole = "c1ccc2[nH]ccc2c1";
        assert_eq!(fp(indole, 2), fp(indole, 2));
        assert_eq!(tanimoto(&fp(indole, 2), &fp(indole, 2)).unwrap(), 1.0);
        // traversal order does not change the bit set
        assert_eq!(fp("OCC", 2), fp("CCO", 2));
    }

    #[test]
    fn distinct_atoms_radius_zero() {
        let c = fp("C", 0);
        let n = fp("N", 0);
        assert_eq!(c.count_ones(), 1);
        assert_eq!(tanimoto(&c, &n).unwrap(), 0.0);
    }

    #[test]
    fn similar_molecules_score_between() {
        let t = tanimoto(&fp("CCCCCCO", 2), &fp("CCCCCCN", 2)).unwrap();
        assert!(t > 0.2 && t < 1.0, "{t}");
    }
}
