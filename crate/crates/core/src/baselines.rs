//! Reference attributions that need no model.

use crate::formats::{AttributionRecord, FORMAT_VERSION};
use crate::rng::{Stream, PURPOSE_BASELINE};
use crate::tasks::{LabeledMolecule, TaskId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    /// Independent uniform scores in `[0, 1)`.
    Random,
    /// The ground-truth mask itself.
    Oracle,
    /// Atom degree; a bond scores the sum of its endpoint degrees.
    Degree,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 3] = [
        BaselineMethod::Random,
        BaselineMethod::Oracle,
        BaselineMethod::Degree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::Random => "random",
            BaselineMethod::Oracle => "oracle",
            BaselineMethod::Degree => "degree",
        }
    }
}

impl std::str::FromStr for BaselineMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BaselineMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                format!("unknown baseline method '{s}' (expected random, oracle or degree)")
            })
    }
}

fn to_scores(mask: &[bool]) -> Vec<f64> {
    mask.iter().map(|&b| f64::from(u8::from(b))).collect()
}

/// One record per (molecule, task), molecules in dataset order and tasks in
/// their fixed order. Edge scores accompany tasks that have bond masks.
pub fn baseline_attributions(
    dataset: &[LabeledMolecule],
    method: BaselineMethod,
    seed: u64,
) -> Vec<AttributionRecord> {
    let mut rng = Stream::new(seed, PURPOSE_BASELINE);
    let mut out = Vec::with_capacity(dataset.len() * TaskId::ALL.len());
    for m in dataset {
        let mut degree = vec![0usize; m.atom_count];
        for &(a, b) in &m.bonds {
            degree[a] += 1;
            degree[b] += 1;
        }
        for task in TaskId::ALL {
            let o = m.outcome(task);
            let with_edges = task.has_bond_mask();
            let (node_scores, edge_scores) = match method {
                BaselineMethod::Random => {
                    let nodes = (0..m.atom_count).map(|_| rng.unit()).collect();
                    let edges = with_edges.then(|| m.bonds.iter().map(|_| rng.unit()).collect());
                    (nodes, edges)
                }
                BaselineMethod::Oracle => (
                    to_scores(&o.atom_mask),
                    o.bond_mask.as_deref().map(to_scores),
                ),
                BaselineMethod::Degree => (
                    degree.iter().map(|&d| d as f64).collect(),
                    with_edges.then(|| {
                        m.bonds
                            .iter()
                            .map(|&(a, b)| (degree[a] + degree[b]) as f64)
                            .collect()
                    }),
                ),
            };
            out.push(AttributionRecord {
                format_version: FORMAT_VERSION,
                id: m.id.clone(),
                task,
                node_scores,
                edge_scores,
            });
        }
    }
    out
}
