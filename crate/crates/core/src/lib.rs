//! Benchmark toolkit for substructure-based explanation ground truth.
//!
//! The crate turns a SMILES corpus into a labelled dataset with atom and bond
//! level ground-truth masks for seven substructure tasks, and scores
//! externally produced attributions against those masks.

pub mod aromaticity;
pub mod baselines;
pub mod canon;
pub mod dataset;
pub mod element;
pub mod eval;
pub mod fingerprint;
pub mod formats;
pub mod matching;
pub mod metrics;
pub mod mol;
pub mod pains;
pub mod rings;
pub mod rng;
pub mod smarts;
pub mod smiles;
pub mod tasks;

pub use element::Element;
pub use fingerprint::{morgan_fingerprint, tanimoto, Fingerprint};
pub use matching::{find_matches, match_mask, Match};
pub use mol::{strip_to_largest_fragment, Atom, Bond, BondOrder, MoleculeGraph};
pub use pains::{bundled_pains, load_pains, PatternSet};
pub use rings::perceive_rings;
pub use smarts::{parse_pattern, Pattern, PatternError};
pub use smiles::{parse_smiles, write_smiles, SmilesError};
pub use tasks::{ExplanationKind, LabeledMolecule, Labeler, TaskConfig, TaskId, TaskOutcome};

/// Largest fragment, ring perception and Kekulé aromaticity, in that order.
pub fn sanitize(m: &MoleculeGraph) -> MoleculeGraph {
    let stripped = strip_to_largest_fragment(m);
    aromaticity::perceive_aromaticity(&perceive_rings(&stripped))
}

/// Parses and sanitizes one SMILES string.
pub fn prepare_smiles(text: &str) -> Result<MoleculeGraph, SmilesError> {
    parse_smiles(text).map(|m| sanitize(&m))
}
