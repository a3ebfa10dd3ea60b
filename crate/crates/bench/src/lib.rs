//! Inputs shared by the benchmarks.

use bxaic_core::{prepare_smiles, MoleculeGraph};

/// The first 1000 lines of the NCI sample used across the test suites.
pub const CORPUS: &str = include_str!("../../core/tests/fixtures/corpus_1000.smi");

pub fn smiles() -> Vec<&'static str> {
    CORPUS
        .lines()
        .filter_map(|l| l.split_whitespace().next())
        .collect()
}

pub fn molecules() -> Vec<MoleculeGraph> {
    smiles()
        .into_iter()
        .filter_map(|s| prepare_smiles(s).ok())
        .collect()
}

/// Deterministic pseudo-random values in `[0, 1)` from a 64-bit LCG.
pub fn uniform(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed;
    (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}
