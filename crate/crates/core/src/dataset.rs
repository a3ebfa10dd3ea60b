//! Corpus filtering, class-balancing sampling, splitting and summary statistics.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::{canonical_hash, is_isomorphic, ISOMORPHISM_CHECK_LIMIT};
use crate::fingerprint::{morgan_fingerprint, tanimoto, DEFAULT_RADIUS, DEFAULT_WIDTH};
use crate::mol::MoleculeGraph;
use crate::rng::{Stream, PURPOSE_SAMPLE, PURPOSE_SPLIT, PURPOSE_STATS};
use crate::smiles::parse_smiles;
use crate::tasks::{ExplanationKind, LabeledMolecule, Labeler, TaskId};
use crate::{prepare_smiles, sanitize};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("population is empty")]
    EmptyPopulation,
    #[error("requested {requested} molecules but only {available} are available")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("need at least {needed} ids to split, got {got}")]
    TooFewIds { needed: usize, got: usize },
    #[error("invalid split ratio '{0}'")]
    BadRatio(String),
    #[error("weights must be finite and positive")]
    BadWeights,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusLine {
    /// 1-based line number in the input.
    pub line: usize,
    pub id: String,
    pub smiles: String,
}

/// Reads `SMILES [id]` lines. Blank lines are skipped; a missing id becomes
/// `line<N>`.
pub fn read_corpus(text: &str) -> Vec<CorpusLine> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let mut parts = raw.split_whitespace();
            let smiles = parts.next()?;
            let rest: Vec<&str> = parts.collect();
            let id = if rest.is_empty() {
                format!("line{}", i + 1)
            } else {
                rest.join(" ")
            };
            Some(CorpusLine {
                line: i + 1,
                id,
                smiles: smiles.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    Parse { category: String, message: String },
    Duplicate { of: String },
    DuplicateId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub id: String,
    #[serde(flatten)]
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub molecules: Vec<LabeledMolecule>,
    pub diagnostics: Vec<Diagnostic>,
}

fn same_graph(a: &MoleculeGraph, b: &MoleculeGraph) -> bool {
    a.atoms.len() == b.atoms.len()
        && a.bonds.len() == b.bonds.len()
        && a.atoms.iter().zip(&b.atoms).all(|(x, y)| {
            x.element == y.element
                && x.formal_charge == y.formal_charge
                && x.aromatic == y.aromatic
                && x.hydrogen_count() == y.hydrogen_count()
        })
        && a.bonds
            .iter()
            .zip(&b.bonds)
            .all(|(x, y)| x.endpoints == y.endpoints && x.order == y.order)
}

/// A SMILES for the kept fragment that reparses to the same atom and bond
/// numbering: the input itself when nothing was stripped, else the matching
/// dot-separated piece, else a generated string.
fn fragment_smiles(text: &str, raw: &MoleculeGraph, kept: &MoleculeGraph) -> String {
    if raw.component_count() <= 1 {
        return text.to_string();
    }
    for piece in text.split('.') {
        if let Ok(m) = prepare_smiles(piece) {
            if same_graph(&m, kept) {
                return piece.to_string();
            }
        }
    }
    crate::smiles::write_smiles(kept)
}

struct Prepared {
    smiles: String,
    mol: MoleculeGraph,
    hash: u64,
}

/// Parses, strips, ring-perceives and labels every line, dropping parse
/// failures and structural duplicates (first occurrence wins). Duplicate ids
/// are rejected too, since ids key attribution files.
pub fn filter_corpus(lines: &[CorpusLine], labeler: &Labeler) -> FilterOutcome {
    let prepared: Vec<Result<Prepared, Diagnostic>> = lines
        .par_iter()
        .map(|l| {
            let raw = parse_smiles(&l.smiles).map_err(|e| Diagnostic {
                line: l.line,
                id: l.id.clone(),
                reason: RejectReason::Parse {
                    category: e.category().to_string(),
                    message: e.to_string(),
                },
            })?;
            let mol = sanitize(&raw);
            Ok(Prepared {
                smiles: fragment_smiles(&l.smiles, &raw, &mol),
                hash: canonical_hash(&mol),
                mol,
            })
        })
        .collect();

    let mut diagnostics = Vec::new();
    let mut kept: Vec<(usize, Prepared)> = Vec::new();
    let mut by_hash: HashMap<u64, Vec<usize>> = HashMap::new();
    let mut ids: HashMap<&str, ()> = HashMap::new();
    for (i, p) in prepared.into_iter().enumerate() {
        let line = &lines[i];
        let p = match p {
            Ok(p) => p,
            Err(d) => {
                log::warn!("line {}: {:?}", d.line, d.reason);
                diagnostics.push(d);
                continue;
            }
        };
        let slot = by_hash.entry(p.hash).or_default();
        let dup = slot.iter().copied().find(|&k| {
            let other = &kept[k].1.mol;
            p.mol.atom_count() > ISOMORPHISM_CHECK_LIMIT || is_isomorphic(&p.mol, other)
        });
        if let Some(k) = dup {
            let of = lines[kept[k].0].id.clone();
            log::debug!("line {}: duplicate of {}", line.line, of);
            diagnostics.push(Diagnostic {
                line: line.line,
                id: line.id.clone(),
                reason: RejectReason::Duplicate { of },
            });
            continue;
        }
        if ids.insert(line.id.as_str(), ()).is_some() {
            diagnostics.push(Diagnostic {
                line: line.line,
                id: line.id.clone(),
                reason: RejectReason::DuplicateId,
            });
            continue;
        }
        slot.push(kept.len());
        kept.push((i, p));
    }

    let molecules = kept
        .par_iter()
        .map(|(i, p)| labeler.label_all(&lines[*i].id, &p.smiles, &p.mol))
        .collect();
    FilterOutcome {
        molecules,
        diagnostics,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskRatio {
    pub task: TaskId,
    pub positives: usize,
    pub negatives: usize,
    /// Majority count over minority count; 1 when a class is absent or the
    /// classes are balanced.
    pub ratio: f64,
    /// The label held by fewer molecules, if the classes differ in size.
    pub minority_label: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingWeights {
    pub ratios: Vec<TaskRatio>,
    pub weights: Vec<f64>,
}

/// Ratio for one task from its label column.
pub fn task_ratio(task: TaskId, labels: impl IntoIterator<Item = bool>) -> TaskRatio {
    let (mut positives, mut negatives) = (0usize, 0usize);
    for l in labels {
        if l {
            positives += 1;
        } else {
            negatives += 1;
        }
    }
    let (ratio, minority_label) = if positives == 0 || negatives == 0 || positives == negatives {
        (1.0, None)
    } else if positives < negatives {
        (negatives as f64 / positives as f64, Some(true))
    } else {
        (positives as f64 / negatives as f64, Some(false))
    };
    TaskRatio {
        task,
        positives,
        negatives,
        ratio,
        minority_label,
    }
}

/// Per-molecule weight: the product of `ratio` over the tasks in which the
/// molecule carries the minority label.
pub fn compute_weights(pop: &[LabeledMolecule]) -> Result<SamplingWeights, DatasetError> {
    if pop.is_empty() {
        return Err(DatasetError::EmptyPopulation);
    }
    let ratios: Vec<TaskRatio> = TaskId::ALL
        .iter()
        .map(|&t| task_ratio(t, pop.iter().map(|m| m.outcome(t).label)))
        .collect();
    let weights = pop
        .iter()
        .map(|m| {
            ratios
                .iter()
                .filter(|r| r.minority_label == Some(m.outcome(r.task).label))
                .map(|r| r.ratio)
                .product()
        })
        .collect();
    Ok(SamplingWeights { ratios, weights })
}

/// Fenwick tree over non-negative weights.
struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn new(values: &[f64]) -> Self {
        let n = values.len();
        let mut tree = vec![0.0; n + 1];
        for (i, &v) in values.iter().enumerate() {
            tree[i + 1] += v;
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i + 1];
            }
        }
        Fenwick { tree }
    }

    fn add(&mut self, i: usize, delta: f64) {
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, mut target: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

/// Draws `n` distinct indices without replacement. Each draw picks an index
/// with probability proportional to its weight among those not yet drawn.
/// Returns indices in draw order.
pub fn weighted_sample(weights: &[f64], n: usize, seed: u64) -> Result<Vec<usize>, DatasetError> {
    if n > weights.len() {
        return Err(DatasetError::SampleTooLarge {
            requested: n,
            available: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(DatasetError::BadWeights);
    }
    let mut rng = Stream::new(seed, PURPOSE_SAMPLE);
    let mut tree = Fenwick::new(weights);
    let mut alive = vec![true; weights.len()];
    let mut remaining: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut i = tree.find(rng.unit() * remaining);
        if !alive[i] {
            // accumulated rounding can land on a removed slot; take the nearest live one
            i = (i..alive.len())
                .chain((0..i).rev())
                .find(|&k| alive[k])
                .expect("a live index remains");
        }
        alive[i] = false;
        tree.add(i, -weights[i]);
        remaining -= weights[i];
        if remaining <= 0.0 {
            remaining = alive
                .iter()
                .zip(weights)
                .filter(|(a, _)| **a)
                .map(|(_, w)| w)
                .sum();
        }
        out.push(i);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRatio {
    pub train: u32,
    pub valid: u32,
    pub test: u32,
}

impl Default for SplitRatio {
    fn default() -> Self {
        SplitRatio {
            train: 8,
            valid: 1,
            test: 1,
        }
    }
}

impl std::str::FromStr for SplitRatio {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<u32> = s
            .split(':')
            .map(|p| p.trim().parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| DatasetError::BadRatio(s.to_string()))?;
        match parts[..] {
            [train, valid, test] if train + valid + test > 0 && train > 0 => {
                Ok(SplitRatio { train, valid, test })
            }
            _ => Err(DatasetError::BadRatio(s.to_string())),
        }
    }
}

impl std::fmt::Display for SplitRatio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.train, self.valid, self.test)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

pub const MIN_SPLIT_IDS: usize = 10;

/// Shuffles `ids` and cuts them into train / valid / test. Sizes are
/// `floor(n * train / total)` and `floor(n * valid / total)`, the test set
/// takes the rest.
pub fn split_dataset(
    ids: &[String],
    ratio: SplitRatio,
    seed: u64,
) -> Result<DatasetSplit, DatasetError> {
    if ids.len() < MIN_SPLIT_IDS {
        return Err(DatasetError::TooFewIds {
            needed: MIN_SPLIT_IDS,
            got: ids.len(),
        });
    }
    let mut order: Vec<String> = ids.to_vec();
    Stream::new(seed, PURPOSE_SPLIT).shuffle(&mut order);
    let n = ids.len() as u64;
    let total = u64::from(ratio.train + ratio.valid + ratio.test);
    let n_train = (n * u64::from(ratio.train) / total) as usize;
    let n_valid = (n * u64::from(ratio.valid) / total) as usize;
    let test = order.split_off(n_train + n_valid);
    let valid = order.split_off(n_train);
    Ok(DatasetSplit {
        seed,
        train: order,
        valid,
        test,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsConfig {
    pub similarity_pairs: usize,
    pub histogram_bins: usize,
    pub fingerprint_radius: usize,
    pub fingerprint_width: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            similarity_pairs: 10_000,
            histogram_bins: 20,
            fingerprint_radius: DEFAULT_RADIUS,
            fingerprint_width: DEFAULT_WIDTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and population standard deviation; `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<MeanStd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(MeanStd {
            mean,
            std: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStats {
    pub task: TaskId,
    pub graphs: usize,
    pub positives: usize,
    pub null_explanations: usize,
    pub subgraph_explanations: usize,
    pub pct_positive: f64,
    pub pct_null: f64,
    pub pct_subgraph: f64,
    /// Percentage of atoms marked, over graphs with a subgraph explanation.
    pub pct_atoms_in_subgraph: Option<MeanStd>,
    pub pct_bonds_in_subgraph: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityHistogram {
    pub pairs: usize,
    /// Bin `i` covers `[i/bins, (i+1)/bins)`; the last bin includes 1.0.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub molecules: usize,
    pub mean_atoms: f64,
    pub mean_bonds: f64,
    pub tasks: Vec<TaskStats>,
    pub similarity: SimilarityHistogram,
    pub config: StatsConfig,
}

fn pct(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

pub fn task_stats(dataset: &[LabeledMolecule], task: TaskId) -> TaskStats {
    let n = dataset.len();
    let mut positives = 0;
    let mut nulls = 0;
    let mut atom_pcts = Vec::new();
    let mut bond_pcts = Vec::new();
    for m in dataset {
        let o = m.outcome(task);
        positives += usize::from(o.label);
        match o.kind() {
            ExplanationKind::Null => nulls += 1,
            ExplanationKind::Subgraph => {
                let on = o.atom_mask.iter().filter(|&&b| b).count();
                atom_pcts.push(pct(on, o.atom_mask.len()));
                if let Some(bm) = &o.bond_mask {
                    if !bm.is_empty() {
                        bond_pcts.push(pct(bm.iter().filter(|&&b| b).count(), bm.len()));
                    }
                }
            }
        }
    }
    let subgraphs = n - nulls;
    let pct_subgraph = pct(subgraphs, n);
    TaskStats {
        task,
        graphs: n,
        positives,
        null_explanations: nulls,
        subgraph_explanations: subgraphs,
        pct_positive: pct(positives, n),
        // complement, so the two shares sum to exactly 100 in floating point
        pct_null: if n == 0 { 0.0 } else { 100.0 - pct_subgraph },
        pct_subgraph,
        pct_atoms_in_subgraph: MeanStd::of(&atom_pcts),
        pct_bonds_in_subgraph: if task.has_bond_mask() {
            MeanStd::of(&bond_pcts)
        } else {
            None
        },
    }
}

/// Histogram of Tanimoto similarity over `pairs` random pairs of distinct
/// molecules (or every pair when there are fewer).
pub fn similarity_histogram(
    mols: &[MoleculeGraph],
    cfg: &StatsConfig,
    seed: u64,
) -> SimilarityHistogram {
    let bins = cfg.histogram_bins.max(1);
    let edges = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    let mut counts = vec![0usize; bins];
    let n = mols.len();
    if n < 2 {
        return SimilarityHistogram {
            pairs: 0,
            edges,
            counts,
        };
    }
    let fps: Vec<_> = mols
        .par_iter()
        .map(|m| morgan_fingerprint(m, cfg.fingerprint_radius, cfg.fingerprint_width))
        .collect();
    let all_pairs = n * (n - 1) / 2;
    let pairs: Vec<(usize, usize)> = if all_pairs <= cfg.similarity_pairs {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect()
    } else {
        let mut rng = Stream::new(seed, PURPOSE_STATS);
        (0..cfg.similarity_pairs)
            .map(|_| {
                let i = rng.below(n as u64) as usize;
                let mut j = rng.below(n as u64 - 1) as usize;
                if j >= i {
                    j += 1;
                }
                (i, j)
            })
            .collect()
    };
    for &(i, j) in &pairs {
        let t = tanimoto(&fps[i], &fps[j]).expect("equal widths");
        let bin = ((t * bins as f64) as usize).min(bins - 1);
        counts[bin] += 1;
    }
    SimilarityHistogram {
        pairs: pairs.len(),
        edges,
        counts,
    }
}

/// Per-task summary plus graph size and the similarity histogram. Molecules
/// are re-read from their SMILES for fingerprinting.
pub fn compute_stats(dataset: &[LabeledMolecule], cfg: &StatsConfig, seed: u64) -> DatasetStats {
    let n = dataset.len();
    let mols: Vec<MoleculeGraph> = dataset
        .par_iter()
        .filter_map(|m| prepare_smiles(&m.smiles).ok())
        .collect();
    let mean = |f: &dyn Fn(&LabeledMolecule) -> usize| {
        if n == 0 {
            0.0
        } else {
            dataset.iter().map(f).sum::<usize>() as f64 / n as f64
        }
    };
    DatasetStats {
        molecules: n,
        mean_atoms: mean(&|m| m.atom_count),
        mean_bonds: mean(&|m| m.bonds.len()),
        tasks: TaskId::ALL
            .iter()
            .map(|&t| task_stats(dataset, t))
            .collect(),
        similarity: similarity_histogram(&mols, cfg, seed),
        config: *cfg,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    /// Number of molecules to sample; the whole population when `None`.
    pub size: Option<usize>,
    pub seed: u64,
    pub split: SplitRatio,
    pub stats: StatsConfig,
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub molecules: Vec<LabeledMolecule>,
    pub weights: SamplingWeights,
    pub split: DatasetSplit,
    pub stats: DatasetStats,
    pub diagnostics: Vec<Diagnostic>,
    pub population: usize,
}

/// Filter, weight, sample, split and summarise. Sampled molecules keep their
/// corpus order.
pub fn build_dataset(
    lines: &[CorpusLine],
    labeler: &Labeler,
    cfg: &BuildConfig,
) -> Result<BuildOutput, DatasetError> {
    let FilterOutcome {
        molecules: population,
        diagnostics,
    } = filter_corpus(lines, labeler);
    let weights = compute_weights(&population)?;
    let size = cfg.size.unwrap_or(population.len());
    let mut picked = weighted_sample(&weights.weights, size, cfg.seed)?;
    picked.sort_unstable();
    let n_pop = population.len();
    let mut slots: Vec<Option<LabeledMolecule>> = population.into_iter().map(Some).collect();
    let molecules: Vec<LabeledMolecule> =
        picked.iter().map(|&i| slots[i].take().unwrap()).collect();
    let ids: Vec<String> = molecules.iter().map(|m| m.id.clone()).collect();
    let split = split_dataset(&ids, cfg.split, cfg.seed)?;
    let stats = compute_stats(&molecules, &cfg.stats, cfg.seed);
    Ok(BuildOutput {
        molecules,
        weights,
        split,
        stats,
        diagnostics,
        population: n_pop,
    })
}
