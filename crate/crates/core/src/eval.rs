//! Scoring attribution files against dataset ground truth and comparing
//! explainers.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::MeanStd;
use crate::formats::{Attribution, PredictionRecord};
use crate::metrics::{
    auroc, average_precision, f1_score, ne_score, wilcoxon_one_sided, MetricError, NeConfig,
};
use crate::tasks::{ExplanationKind, LabeledMolecule, TaskId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Node,
    Edge,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::Node => "node",
            Level::Edge => "edge",
        }
    }

    /// Tasks scored at this level; single-atom tasks have no edge ground truth.
    pub fn tasks(self) -> impl Iterator<Item = TaskId> {
        TaskId::ALL
            .into_iter()
            .filter(move |t| self == Level::Node || t.has_bond_mask())
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("task {task}: no attribution for {count} molecule(s): {}", preview(.ids))]
    MissingAttributions {
        task: TaskId,
        count: usize,
        ids: Vec<String>,
    },
    #[error("task {task}: no prediction for {count} molecule(s): {}", preview(.ids))]
    MissingPredictions {
        task: TaskId,
        count: usize,
        ids: Vec<String>,
    },
    #[error("line {line}: id '{id}' is not in the dataset")]
    UnknownId { line: usize, id: String },
    #[error("id filter names {count} id(s) absent from the dataset: {}", preview(.ids))]
    UnknownFilterIds { count: usize, ids: Vec<String> },
    #[error("line {line}: duplicate record for ({id}, {task})")]
    Duplicate {
        line: usize,
        id: String,
        task: TaskId,
    },
    #[error("line {line}: {what} has {got} values, molecule '{id}' has {expected}")]
    LengthMismatch {
        line: usize,
        id: String,
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("line {line}: task {task} has edge scores elsewhere but not for '{id}'")]
    MissingEdgeScores {
        line: usize,
        id: String,
        task: TaskId,
    },
    #[error("no attributions cover the evaluated molecules")]
    NothingToScore,
    #[error("need at least two explainers to compare")]
    TooFewExplainers,
    #[error("explainer '{name}' is not aligned with '{reference}': {detail}")]
    Misaligned {
        name: String,
        reference: String,
        detail: String,
    },
    #[error("{0}")]
    Metric(#[from] MetricError),
}

fn preview(ids: &[String]) -> String {
    let mut s = ids.iter().take(10).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > 10 {
        s.push_str(", ...");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub ne: NeConfig,
    /// Score magnitudes instead of signed values.
    pub absolute: bool,
    pub levels: Vec<Level>,
    pub threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ne: NeConfig::default(),
            absolute: false,
            levels: vec![Level::Node, Level::Edge],
            threshold: 0.5,
        }
    }
}

/// One graph's score within a (task, level): the NE indicator for null
/// ground truth, AUROC for subgraph ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphScore {
    pub level: Level,
    pub task: TaskId,
    pub id: String,
    pub kind: ExplanationKind,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub task: TaskId,
    pub level: Level,
    pub ne: Option<MeanStd>,
    pub se: Option<MeanStd>,
    pub ap: Option<MeanStd>,
    /// Mean of the defined NE and SE means.
    pub avg: Option<f64>,
    /// False when only one of NE and SE was defined.
    pub avg_complete: bool,
    pub n_ne: usize,
    pub n_se: usize,
    /// Subgraph graphs whose mask covers every element (AUROC undefined).
    pub n_degenerate: usize,
    /// Null graphs with nothing to score (no bonds at edge level).
    pub n_empty: usize,
}

/// Means over tasks of the per-task means, with the spread across tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: Level,
    pub tasks: Vec<TaskId>,
    pub ne: Option<MeanStd>,
    pub se: Option<MeanStd>,
    pub avg: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Score {
    pub task: TaskId,
    pub f1: f64,
    pub n: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedTask {
    pub level: Level,
    pub task: TaskId,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub explainer: String,
    pub config: EvalConfig,
    pub molecules: usize,
    pub scores: Vec<TaskScore>,
    pub summaries: Vec<LevelSummary>,
    pub skipped: Vec<SkippedTask>,
    pub f1: Vec<F1Score>,
    pub table: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_graph: Option<Vec<GraphScore>>,
}

fn select<'d>(
    dataset: &'d [LabeledMolecule],
    ids: Option<&[String]>,
) -> Result<Vec<&'d LabeledMolecule>, EvalError> {
    let Some(ids) = ids else {
        return Ok(dataset.iter().collect());
    };
    let wanted: HashSet<&str> = ids.iter().map(String::as_str).collect();
    let present: HashSet<&str> = dataset.iter().map(|m| m.id.as_str()).collect();
    let unknown: Vec<String> = ids
        .iter()
        .filter(|i| !present.contains(i.as_str()))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(EvalError::UnknownFilterIds {
            count: unknown.len(),
            ids: unknown,
        });
    }
    Ok(dataset
        .iter()
        .filter(|m| wanted.contains(m.id.as_str()))
        .collect())
}

fn index_attributions<'a>(
    dataset: &[LabeledMolecule],
    attributions: &'a [Attribution],
) -> Result<HashMap<(TaskId, &'a str), &'a Attribution>, EvalError> {
    let by_id: HashMap<&str, &LabeledMolecule> =
        dataset.iter().map(|m| (m.id.as_str(), m)).collect();
    let mut index = HashMap::new();
    for a in attributions {
        let r = &a.record;
        let Some(m) = by_id.get(r.id.as_str()) else {
            return Err(EvalError::UnknownId {
                line: a.line,
                id: r.id.clone(),
            });
        };
        if r.node_scores.len() != m.atom_count {
            return Err(EvalError::LengthMismatch {
                line: a.line,
                id: r.id.clone(),
                what: "node_scores",
                got: r.node_scores.len(),
                expected: m.atom_count,
            });
        }
        if let Some(e) = &r.edge_scores {
            if e.len() != m.bonds.len() {
                return Err(EvalError::LengthMismatch {
                    line: a.line,
                    id: r.id.clone(),
                    what: "edge_scores",
                    got: e.len(),
                    expected: m.bonds.len(),
                });
            }
        }
        if index.insert((r.task, r.id.as_str()), a).is_some() {
            return Err(EvalError::Duplicate {
                line: a.line,
                id: r.id.clone(),
                task: r.task,
            });
        }
    }
    Ok(index)
}

enum Scored {
    Ne(f64),
    Se { auroc: f64, ap: f64 },
    Degenerate,
    Empty,
}

fn score_graph(
    m: &LabeledMolecule,
    a: &Attribution,
    task: TaskId,
    level: Level,
    cfg: &EvalConfig,
) -> Result<Scored, MetricError> {
    let o = m.outcome(task);
    let (raw, mask): (&[f64], &[bool]) = match level {
        Level::Node => (&a.record.node_scores, &o.atom_mask),
        Level::Edge => (
            a.record.edge_scores.as_deref().unwrap_or(&[]),
            o.bond_mask.as_deref().unwrap_or(&[]),
        ),
    };
    let scores: Vec<f64> = if cfg.absolute {
        raw.iter().map(|v| v.abs()).collect()
    } else {
        raw.to_vec()
    };
    match o.kind() {
        ExplanationKind::Null if scores.is_empty() => Ok(Scored::Empty),
        ExplanationKind::Null => Ok(Scored::Ne(f64::from(ne_score(&scores, &cfg.ne)?))),
        ExplanationKind::Subgraph => match auroc(&scores, mask) {
            Ok(v) => Ok(Scored::Se {
                auroc: v,
                ap: average_precision(&scores, mask)?,
            }),
            Err(MetricError::DegenerateMask) => Ok(Scored::Degenerate),
            Err(e) => Err(e),
        },
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<MeanStd> {
    MeanStd::of(&values.collect::<Vec<_>>())
}

fn fmt_ms(m: &Option<MeanStd>) -> String {
    m.as_ref().map_or_else(
        || "--".to_string(),
        |m| format!("{:.2} ± {:.2}", m.mean, m.std),
    )
}

/// Scores every (task, level) that the attributions cover. A task with no
/// records at all is skipped; a task with records must cover every selected
/// molecule. `ids` restricts evaluation to a subset such as a test split.
pub fn evaluate_explainer(
    explainer: &str,
    dataset: &[LabeledMolecule],
    attributions: &[Attribution],
    predictions: Option<&[PredictionRecord]>,
    ids: Option<&[String]>,
    cfg: &EvalConfig,
    emit_per_graph: bool,
) -> Result<EvalReport, EvalError> {
    let selected = select(dataset, ids)?;
    let index = index_attributions(dataset, attributions)?;
    let tasks_present: BTreeSet<TaskId> = attributions.iter().map(|a| a.record.task).collect();

    let mut scores = Vec::new();
    let mut skipped = Vec::new();
    let mut per_graph = Vec::new();
    let mut levels = cfg.levels.clone();
    levels.sort();
    levels.dedup();
    for &level in &levels {
        for task in level.tasks() {
            if !tasks_present.contains(&task) {
                skipped.push(SkippedTask {
                    level,
                    task,
                    reason: "no attributions for this task".into(),
                });
                continue;
            }
            let missing: Vec<String> = selected
                .iter()
                .filter(|m| !index.contains_key(&(task, m.id.as_str())))
                .map(|m| m.id.clone())
                .collect();
            if !missing.is_empty() {
                return Err(EvalError::MissingAttributions {
                    task,
                    count: missing.len(),
                    ids: missing,
                });
            }
            let records: Vec<(&LabeledMolecule, &Attribution)> = selected
                .iter()
                .map(|m| (*m, index[&(task, m.id.as_str())]))
                .collect();
            if level == Level::Edge {
                let with_edges = records
                    .iter()
                    .filter(|(_, a)| a.record.edge_scores.is_some())
                    .count();
                if with_edges == 0 {
                    skipped.push(SkippedTask {
                        level,
                        task,
                        reason: "no edge scores".into(),
                    });
                    continue;
                }
                if let Some((m, a)) = records.iter().find(|(_, a)| a.record.edge_scores.is_none()) {
                    return Err(EvalError::MissingEdgeScores {
                        line: a.line,
                        id: m.id.clone(),
                        task,
                    });
                }
            }
            let results: Vec<Scored> = records
                .par_iter()
                .map(|(m, a)| score_graph(m, a, task, level, cfg))
                .collect::<Result<_, _>>()?;
            let (mut ne, mut se, mut ap) = (Vec::new(), Vec::new(), Vec::new());
            let (mut n_degenerate, mut n_empty) = (0, 0);
            for ((m, _), r) in records.iter().zip(&results) {
                let (kind, score) = match *r {
                    Scored::Ne(v) => {
                        ne.push(v);
                        (ExplanationKind::Null, v)
                    }
                    Scored::Se { auroc, ap: p } => {
                        se.push(auroc);
                        ap.push(p);
                        (ExplanationKind::Subgraph, auroc)
                    }
                    Scored::Degenerate => {
                        n_degenerate += 1;
                        continue;
                    }
                    Scored::Empty => {
                        n_empty += 1;
                        continue;
                    }
                };
                if emit_per_graph {
                    per_graph.push(GraphScore {
                        level,
                        task,
                        id: m.id.clone(),
                        kind,
                        score,
                    });
                }
            }
            let ne_ms = MeanStd::of(&ne);
            let se_ms = MeanStd::of(&se);
            let defined: Vec<f64> = [&ne_ms, &se_ms]
                .iter()
                .filter_map(|m| m.as_ref().map(|m| m.mean))
                .collect();
            scores.push(TaskScore {
                task,
                level,
                avg: (!defined.is_empty())
                    .then(|| defined.iter().sum::<f64>() / defined.len() as f64),
                avg_complete: defined.len() == 2,
                ne: ne_ms,
                se: se_ms,
                ap: MeanStd::of(&ap),
                n_ne: ne.len(),
                n_se: se.len(),
                n_degenerate,
                n_empty,
            });
        }
    }
    if scores.is_empty() && predictions.is_none() {
        return Err(EvalError::NothingToScore);
    }

    let summaries = levels
        .iter()
        .map(|&level| {
            let rows: Vec<&TaskScore> = scores.iter().filter(|s| s.level == level).collect();
            LevelSummary {
                level,
                tasks: rows.iter().map(|s| s.task).collect(),
                ne: mean_of(rows.iter().filter_map(|s| s.ne.as_ref().map(|m| m.mean))),
                se: mean_of(rows.iter().filter_map(|s| s.se.as_ref().map(|m| m.mean))),
                avg: mean_of(rows.iter().filter_map(|s| s.avg)),
            }
        })
        .collect::<Vec<_>>();

    let f1 = match predictions {
        Some(p) => f1_scores(&selected, p, cfg.threshold)?,
        None => Vec::new(),
    };

    let mut table = vec!["level\ttask\tNE\tSE\tavg\tn_ne\tn_se\tn_degenerate".to_string()];
    for s in &scores {
        table.push(format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.level,
            s.task,
            fmt_ms(&s.ne),
            fmt_ms(&s.se),
            s.avg.map_or("--".into(), |v| format!("{v:.2}")),
            s.n_ne,
            s.n_se,
            s.n_degenerate
        ));
    }
    for s in &summaries {
        table.push(format!(
            "{}\toverall\t{}\t{}\t{}\t\t\t",
            s.level,
            fmt_ms(&s.ne),
            fmt_ms(&s.se),
            fmt_ms(&s.avg)
        ));
    }

    Ok(EvalReport {
        explainer: explainer.to_string(),
        config: cfg.clone(),
        molecules: selected.len(),
        scores,
        summaries,
        skipped,
        f1,
        table,
        per_graph: emit_per_graph.then_some(per_graph),
    })
}

fn f1_scores(
    selected: &[&LabeledMolecule],
    predictions: &[PredictionRecord],
    threshold: f64,
) -> Result<Vec<F1Score>, EvalError> {
    let mut by_task: BTreeMap<TaskId, HashMap<&str, f64>> = BTreeMap::new();
    let known: HashSet<&str> = selected.iter().map(|m| m.id.as_str()).collect();
    for p in predictions {
        if known.contains(p.id.as_str()) {
            by_task
                .entry(p.task)
                .or_default()
                .insert(p.id.as_str(), p.prob);
        }
    }
    let mut out = Vec::new();
    for (task, probs) in by_task {
        let missing: Vec<String> = selected
            .iter()
            .filter(|m| !probs.contains_key(m.id.as_str()))
            .map(|m| m.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(EvalError::MissingPredictions {
                task,
                count: missing.len(),
                ids: missing,
            });
        }
        let labels: Vec<bool> = selected.iter().map(|m| m.outcome(task).label).collect();
        let preds: Vec<bool> = selected
            .iter()
            .map(|m| probs[m.id.as_str()] >= threshold)
            .collect();
        out.push(F1Score {
            task,
            f1: f1_score(&labels, &preds)?,
            n: labels.len(),
            threshold,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainerRow {
    pub explainer: String,
    pub mean: f64,
    pub n: usize,
    /// p-value of "best > this explainer"; absent for the best itself.
    pub p_vs_best: Option<f64>,
    pub not_significantly_lower: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceMatrix {
    pub alpha: f64,
    pub pooling: String,
    pub explainers: Vec<String>,
    pub best: String,
    /// `p_values[i][j]`: one-sided p for "explainer i scores higher than j".
    pub p_values: Vec<Vec<f64>>,
    /// Rows sorted by mean, best first.
    pub ranking: Vec<ExplainerRow>,
    pub table: Vec<String>,
}

pub const POOLING_RULE: &str =
    "per-graph scores pooled over every task and level, paired by (level, task, id)";

/// Ranks explainers by mean per-graph score and tests the best against each
/// other with the one-sided signed-rank test. When the test cannot be run
/// (all differences zero or too few), p is reported as 1.
pub fn compare_explainers(
    tables: &[(String, Vec<GraphScore>)],
    alpha: f64,
) -> Result<SignificanceMatrix, EvalError> {
    compare_with(tables, alpha, POOLING_RULE)
}

pub const TASK_PAIRING_RULE: &str = "per-graph scores within one (level, task), paired by id";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskComparison {
    pub level: Level,
    pub task: TaskId,
    pub matrix: SignificanceMatrix,
}

/// The same comparison run separately inside every (level, task) that the
/// tables cover.
pub fn compare_by_task(
    tables: &[(String, Vec<GraphScore>)],
    alpha: f64,
) -> Result<Vec<TaskComparison>, EvalError> {
    let groups: BTreeSet<(Level, TaskId)> = tables
        .iter()
        .flat_map(|(_, rows)| rows.iter().map(|g| (g.level, g.task)))
        .collect();
    groups
        .into_iter()
        .map(|(level, task)| {
            let sub: Vec<(String, Vec<GraphScore>)> = tables
                .iter()
                .map(|(name, rows)| {
                    let rows = rows
                        .iter()
                        .filter(|g| g.level == level && g.task == task)
                        .cloned()
                        .collect();
                    (name.clone(), rows)
                })
                .collect();
            let matrix = compare_with(&sub, alpha, TASK_PAIRING_RULE)?;
            Ok(TaskComparison {
                level,
                task,
                matrix,
            })
        })
        .collect()
}

fn compare_with(
    tables: &[(String, Vec<GraphScore>)],
    alpha: f64,
    pooling: &str,
) -> Result<SignificanceMatrix, EvalError> {
    if tables.len() < 2 {
        return Err(EvalError::TooFewExplainers);
    }
    let keyed: Vec<BTreeMap<(Level, TaskId, &str), f64>> = tables
        .iter()
        .map(|(_, rows)| {
            rows.iter()
                .map(|g| ((g.level, g.task, g.id.as_str()), g.score))
                .collect()
        })
        .collect();
    for (k, (name, rows)) in tables.iter().enumerate() {
        if keyed[k].len() != rows.len() {
            return Err(EvalError::Misaligned {
                name: name.clone(),
                reference: name.clone(),
                detail: "repeated (level, task, id)".into(),
            });
        }
        if keyed[k].keys().ne(keyed[0].keys()) {
            let only_here = keyed[k]
                .keys()
                .filter(|x| !keyed[0].contains_key(*x))
                .count();
            let only_there = keyed[0]
                .keys()
                .filter(|x| !keyed[k].contains_key(*x))
                .count();
            return Err(EvalError::Misaligned {
                name: name.clone(),
                reference: tables[0].0.clone(),
                detail: format!(
                    "{only_here} graph score(s) only here, {only_there} only in the reference"
                ),
            });
        }
    }
    let samples: Vec<Vec<f64>> = keyed
        .iter()
        .map(|m| m.values().copied().collect())
        .collect();
    let n = samples[0].len();
    if n == 0 {
        return Err(EvalError::NothingToScore);
    }
    let means: Vec<f64> = samples
        .iter()
        .map(|s| s.iter().sum::<f64>() / n as f64)
        .collect();
    let k = tables.len();
    let mut p_values = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                p_values[i][j] = match wilcoxon_one_sided(&samples[i], &samples[j]) {
                    Ok(r) => r.p_value,
                    Err(
                        MetricError::NoNonzeroDifferences | MetricError::TooFewDifferences { .. },
                    ) => 1.0,
                    Err(e) => return Err(e.into()),
                };
            }
        }
    }
    let best = (0..k).fold(0, |b, i| if means[i] > means[b] { i } else { b });
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    let ranking: Vec<ExplainerRow> = order
        .iter()
        .map(|&i| ExplainerRow {
            explainer: tables[i].0.clone(),
            mean: means[i],
            n,
            p_vs_best: (i != best).then(|| p_values[best][i]),
            not_significantly_lower: i == best || p_values[best][i] >= alpha,
        })
        .collect();
    let mut table = vec!["rank\texplainer\tmean\tp_vs_best\tnot_significantly_lower".to_string()];
    for (r, row) in ranking.iter().enumerate() {
        table.push(format!(
            "{}\t{}\t{:.4}\t{}\t{}",
            r + 1,
            row.explainer,
            row.mean,
            row.p_vs_best.map_or("--".into(), |p| format!("{p:.3e}")),
            if row.not_significantly_lower { "*" } else { "" }
        ));
    }
    Ok(SignificanceMatrix {
        alpha,
        pooling: pooling.to_string(),
        explainers: tables.iter().map(|(n, _)| n.clone()).collect(),
        best: tables[best].0.clone(),
        p_values,
        ranking,
        table,
    })
}

/// Spread of one explainer's overall scores across repeated runs, such as
/// models trained with different seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSpread {
    pub explainer: String,
    pub level: Level,
    pub runs: usize,
    pub ne: Option<MeanStd>,
    pub se: Option<MeanStd>,
    pub avg: Option<MeanStd>,
}

/// For every explainer name that appears in two or more reports, the mean and
/// population std over those reports of each level's overall NE, SE and
/// average.
pub fn replicate_spread(reports: &[&EvalReport]) -> Vec<ReplicateSpread> {
    let mut by_name: BTreeMap<&str, Vec<&EvalReport>> = BTreeMap::new();
    for r in reports {
        by_name.entry(r.explainer.as_str()).or_default().push(r);
    }
    let mut out = Vec::new();
    for (name, runs) in by_name.into_iter().filter(|(_, v)| v.len() >= 2) {
        for level in [Level::Node, Level::Edge] {
            let summaries: Vec<&LevelSummary> = runs
                .iter()
                .filter_map(|r| r.summaries.iter().find(|s| s.level == level))
                .collect();
            if summaries.is_empty() {
                continue;
            }
            let spread = |f: &dyn Fn(&LevelSummary) -> Option<f64>| {
                MeanStd::of(&summaries.iter().filter_map(|s| f(s)).collect::<Vec<_>>())
            };
            out.push(ReplicateSpread {
                explainer: name.to_string(),
                level,
                runs: summaries.len(),
                ne: spread(&|s| s.ne.as_ref().map(|m| m.mean)),
                se: spread(&|s| s.se.as_ref().map(|m| m.mean)),
                avg: spread(&|s| s.avg.as_ref().map(|m| m.mean)),
            });
        }
    }
    out
}
