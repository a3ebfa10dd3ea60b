//! The seven substructure tasks: labels and ground-truth explanation masks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::element::Element;
use crate::matching::{find_matches_in, match_mask};
use crate::mol::MoleculeGraph;
use crate::pains::PatternSet;
use crate::smarts::{parse_pattern, MolContext, Pattern};

/// Benzene fused to pyrrole; the ring nitrogen may carry H or a substituent.
pub const INDOLE_SMARTS: &str = "c1ccc2c(c1)ccn2";
pub const HALOGENS: [Element; 4] = [Element::F, Element::CL, Element::BR, Element::I];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskId {
    #[serde(rename = "B")]
    B,
    #[serde(rename = "P")]
    P,
    #[serde(rename = "X")]
    X,
    #[serde(rename = "indole")]
    Indole,
    #[serde(rename = "PAINS")]
    Pains,
    #[serde(rename = "rings-count")]
    RingsCount,
    #[serde(rename = "rings-max")]
    RingsMax,
}

impl TaskId {
    pub const ALL: [TaskId; 7] = [
        TaskId::B,
        TaskId::P,
        TaskId::X,
        TaskId::Indole,
        TaskId::Pains,
        TaskId::RingsCount,
        TaskId::RingsMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskId::B => "B",
            TaskId::P => "P",
            TaskId::X => "X",
            TaskId::Indole => "indole",
            TaskId::Pains => "PAINS",
            TaskId::RingsCount => "rings-count",
            TaskId::RingsMax => "rings-max",
        }
    }

    /// Single-atom tasks carry no bond-level ground truth.
    pub fn has_bond_mask(self) -> bool {
        !matches!(self, TaskId::B | TaskId::P | TaskId::X)
    }

    pub fn position(self) -> usize {
        TaskId::ALL.iter().position(|&t| t == self).unwrap()
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskId::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplanationKind {
    Null,
    Subgraph,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskOutcome {
    pub task: TaskId,
    pub label: bool,
    pub atom_mask: Vec<bool>,
    pub bond_mask: Option<Vec<bool>>,
}

impl TaskOutcome {
    fn new(task: TaskId, label: bool, atom_mask: Vec<bool>, bond_mask: Option<Vec<bool>>) -> Self {
        debug_assert_eq!(task.has_bond_mask(), bond_mask.is_some());
        TaskOutcome {
            task,
            label,
            atom_mask,
            bond_mask,
        }
    }

    /// Null exactly when no atom and no bond is marked.
    pub fn kind(&self) -> ExplanationKind {
        let any_bond = self.bond_mask.as_ref().is_some_and(|b| b.contains(&true));
        if self.atom_mask.contains(&true) || any_bond {
            ExplanationKind::Subgraph
        } else {
            ExplanationKind::Null
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledMolecule {
    pub id: String,
    pub smiles: String,
    pub atom_count: usize,
    /// Bond endpoints in bond-index order.
    pub bonds: Vec<(usize, usize)>,
    /// One outcome per task, in [`TaskId::ALL`] order.
    pub outcomes: Vec<TaskOutcome>,
}

impl LabeledMolecule {
    pub fn outcome(&self, task: TaskId) -> &TaskOutcome {
        &self.outcomes[task.position()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskConfig {
    /// rings-count is positive above this many SSSR rings.
    pub ring_count_threshold: usize,
    /// rings-max is positive when some SSSR ring has more atoms than this.
    pub ring_size_threshold: usize,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            ring_count_threshold: 4,
            ring_size_threshold: 6,
        }
    }
}

pub fn label_element_task(m: &MoleculeGraph, task: TaskId, elements: &[Element]) -> TaskOutcome {
    let mask: Vec<bool> = m
        .atoms
        .iter()
        .map(|a| elements.contains(&a.element))
        .collect();
    let label = mask.contains(&true);
    TaskOutcome::new(task, label, mask, None)
}

fn pattern_outcome<'p>(
    task: TaskId,
    ctx: &MolContext<'_>,
    patterns: impl IntoIterator<Item = &'p Pattern>,
) -> TaskOutcome {
    let mut atoms = vec![false; ctx.mol.atom_count()];
    let mut bonds = vec![false; ctx.mol.bond_count()];
    for p in patterns {
        let (a, b) = match_mask(&find_matches_in(p, ctx), ctx.mol);
        atoms.iter_mut().zip(a).for_each(|(x, y)| *x |= y);
        bonds.iter_mut().zip(b).for_each(|(x, y)| *x |= y);
    }
    let label = atoms.contains(&true);
    TaskOutcome::new(task, label, atoms, Some(bonds))
}

pub fn label_indole(m: &MoleculeGraph, indole: &Pattern) -> TaskOutcome {
    pattern_outcome(TaskId::Indole, &MolContext::new(m), [indole])
}

pub fn label_pains(m: &MoleculeGraph, set: &PatternSet) -> TaskOutcome {
    pattern_outcome(
        TaskId::Pains,
        &MolContext::new(m),
        set.patterns.iter().map(|p| &p.pattern),
    )
}

fn ring_masks<'r>(
    m: &MoleculeGraph,
    rings: impl IntoIterator<Item = &'r Vec<usize>>,
) -> (Vec<bool>, Vec<bool>) {
    let mut atoms = vec![false; m.atom_count()];
    let mut bonds = vec![false; m.bond_count()];
    for ring in rings {
        for (k, &a) in ring.iter().enumerate() {
            atoms[a] = true;
            let next = ring[(k + 1) % ring.len()];
            let b = m.bond_between(a, next).expect("ring edges are bonds");
            bonds[b.index] = true;
        }
    }
    (atoms, bonds)
}

/// Positive above `threshold` rings; every ring atom and bond is explained,
/// so only acyclic molecules get a null explanation.
pub fn label_rings_count(m: &MoleculeGraph, threshold: usize) -> TaskOutcome {
    let (atoms, bonds) = ring_masks(m, &m.rings);
    TaskOutcome::new(
        TaskId::RingsCount,
        m.rings.len() > threshold,
        atoms,
        Some(bonds),
    )
}

/// Positive when a ring exceeds `size_threshold` atoms; positives mark only
/// those rings, negatives with rings mark every ring.
pub fn label_rings_max(m: &MoleculeGraph, size_threshold: usize) -> TaskOutcome {
    let large: Vec<&Vec<usize>> = m
        .rings
        .iter()
        .filter(|r| r.len() > size_threshold)
        .collect();
    let label = !large.is_empty();
    let (atoms, bonds) = if label {
        ring_masks(m, large)
    } else {
        ring_masks(m, &m.rings)
    };
    TaskOutcome::new(TaskId::RingsMax, label, atoms, Some(bonds))
}

/// Computes all seven outcomes for sanitized, ring-perceived molecules.
#[derive(Debug, Clone)]
pub struct Labeler {
    pub config: TaskConfig,
    pub indole: Pattern,
    pub pains: PatternSet,
}

impl Labeler {
    pub fn new(pains: PatternSet, config: TaskConfig) -> Self {
        Labeler {
            config,
            indole: parse_pattern(INDOLE_SMARTS).expect("indole pattern parses"),
            pains,
        }
    }

    pub fn outcomes(&self, m: &MoleculeGraph) -> Vec<TaskOutcome> {
        let ctx = MolContext::new(m);
        vec![
            label_element_task(m, TaskId::B, &[Element::B]),
            label_element_task(m, TaskId::P, &[Element::P]),
            label_element_task(m, TaskId::X, &HALOGENS),
            pattern_outcome(TaskId::Indole, &ctx, [&self.indole]),
            pattern_outcome(
                TaskId::Pains,
                &ctx,
                self.pains.patterns.iter().map(|p| &p.pattern),
            ),
            label_rings_count(m, self.config.ring_count_threshold),
            label_rings_max(m, self.config.ring_size_threshold),
        ]
    }

    pub fn label_all(&self, id: &str, smiles: &str, m: &MoleculeGraph) -> LabeledMolecule {
        LabeledMolecule {
            id: id.to_string(),
            smiles: smiles.to_string(),
            atom_count: m.atom_count(),
            bonds: m.bonds.iter().map(|b| b.endpoints).collect(),
            outcomes: self.outcomes(m),
        }
    }
}

impl Default for Labeler {
    fn default() -> Self {
        Labeler::new(crate::pains::bundled_pains(), TaskConfig::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prepare_smiles;

    fn outcome(smiles: &str, task: TaskId) -> TaskOutcome {
        let m = prepare_smiles(smiles).unwrap();
        Labeler::default()
            .label_all("t", smiles, &m)
            .outcome(task)
            .clone()
    }

    fn on(mask: &[bool]) -> Vec<usize> {
        mask.iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
            .collect()
    }

    #[test]
    fn element_tasks() {
        let x = outcome("CCF", TaskId::X);
        assert!(x.label);
        assert_eq!(on(&x.atom_mask), vec![2]);
        assert!(x.bond_mask.is_none());
        let b = outcome("CCO", TaskId::B);
        assert!(!b.label);
        assert_eq!(b.kind(), ExplanationKind::Null);
    }

    #[test]
    fn indole_and_tryptophan() {
        let o = outcome("c1ccc2[nH]ccc2c1", TaskId::Indole);
        assert!(o.label);
        assert_eq!(on(&o.atom_mask).len(), 9);
        assert_eq!(on(o.bond_mask.as_ref().unwrap()).len(), 10);
        assert!(!outcome("c1ccccc1", TaskId::Indole).label);

        let trp = "C1=CC2=C(C=C1)C(=CN2)CC(C(=O)O)N";
        let o = outcome(trp, TaskId::Indole);
        assert!(o.label);
        assert_eq!(on(&o.atom_mask), (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn ring_tasks() {
        let o = outcome("CCCC", TaskId::RingsCount);
        assert!(!o.label);
        assert_eq!(o.kind(), ExplanationKind::Null);

        let o = outcome("c1ccc2ccccc2c1", TaskId::RingsCount);
        assert!(!o.label);
        assert_eq!(o.kind(), ExplanationKind::Subgraph);
        assert_eq!(on(&o.atom_mask).len(), 10);

        let o = outcome("C1CCCCCC1", TaskId::RingsMax);
        assert!(o.label);
        assert_eq!(on(&o.atom_mask).len(), 7);

        let o = outcome("c1ccccc1", TaskId::RingsMax);
        assert!(!o.label);
        assert_eq!(on(&o.atom_mask).len(), 6);
        assert_eq!(o.kind(), ExplanationKind::Subgraph);

        assert_eq!(
            outcome("CC(C)C", TaskId::RingsMax).kind(),
            ExplanationKind::Null
        );
    }

    #[test]
    fn rings_max_positive_masks_only_large_rings() {
        // cyclooctane joined to benzene
        let o = outcome("C1CCCC(CCC1)c1ccccc1", TaskId::RingsMax);
        assert!(o.label);
        assert_eq!(on(&o.atom_mask), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn five_rings_count_positive() {
        // picene-like pentacyclic aromatic
        let o = outcome("c1ccc2c(c1)ccc1c2ccc2c3ccccc3ccc21", TaskId::RingsCount);
        assert!(o.label);
    }

    #[test]
    fn boron_atom() {
        let m = prepare_smiles("B").unwrap();
        let lm = Labeler::default().label_all("b", "B", &m);
        for o in &lm.outcomes {
            assert_eq!(o.label, o.task == TaskId::B, "{}", o.task);
        }
    }

    #[test]
    fn task_names_round_trip() {
        for t in TaskId::ALL {
            assert_eq!(t.name().parse::<TaskId>().unwrap(), t);
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(json, format!("\"{}\"", t.name()));
        }
        assert!("Q".parse::<TaskId>().is_err());
    }
}
