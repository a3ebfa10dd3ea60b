//! Line-delimited JSON records exchanged between commands and external tools.
//!
//! Every record and document carries `format_version`. Readers validate
//! shapes and report the offending 1-based line.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DatasetSplit;
use crate::tasks::{LabeledMolecule, TaskId, TaskOutcome};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct SchemaError {
    pub line: usize,
    pub message: String,
}

fn schema<T>(line: usize, message: impl Into<String>) -> Result<T, SchemaError> {
    Err(SchemaError {
        line,
        message: message.into(),
    })
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

fn check_version(line: usize, v: u32) -> Result<(), SchemaError> {
    if v != FORMAT_VERSION {
        return schema(line, format!("unsupported format_version {v}"));
    }
    Ok(())
}

fn bits(mask: &[bool]) -> Vec<u8> {
    mask.iter().map(|&b| u8::from(b)).collect()
}

fn unbits(line: usize, what: &str, v: &[u8], len: usize) -> Result<Vec<bool>, SchemaError> {
    if v.len() != len {
        return schema(
            line,
            format!("{what} has length {}, expected {len}", v.len()),
        );
    }
    v.iter()
        .map(|&x| match x {
            0 => Ok(false),
            1 => Ok(true),
            _ => schema(line, format!("{what} contains {x}, expected 0 or 1")),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRecord {
    pub label: bool,
    pub atom_mask: Vec<u8>,
    pub bond_mask: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRecords {
    #[serde(rename = "B")]
    pub b: TaskRecord,
    #[serde(rename = "P")]
    pub p: TaskRecord,
    #[serde(rename = "X")]
    pub x: TaskRecord,
    pub indole: TaskRecord,
    #[serde(rename = "PAINS")]
    pub pains: TaskRecord,
    #[serde(rename = "rings-count")]
    pub rings_count: TaskRecord,
    #[serde(rename = "rings-max")]
    pub rings_max: TaskRecord,
}

impl TaskRecords {
    fn in_order(&self) -> [&TaskRecord; 7] {
        [
            &self.b,
            &self.p,
            &self.x,
            &self.indole,
            &self.pains,
            &self.rings_count,
            &self.rings_max,
        ]
    }
}

/// One dataset line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub format_version: u32,
    pub id: String,
    pub smiles: String,
    pub atoms: usize,
    pub bonds: Vec<(usize, usize)>,
    pub tasks: TaskRecords,
}

impl From<&LabeledMolecule> for DatasetRecord {
    fn from(m: &LabeledMolecule) -> Self {
        let rec = |t: TaskId| {
            let o = m.outcome(t);
            TaskRecord {
                label: o.label,
                atom_mask: bits(&o.atom_mask),
                bond_mask: o.bond_mask.as_deref().map(bits),
            }
        };
        DatasetRecord {
            format_version: FORMAT_VERSION,
            id: m.id.clone(),
            smiles: m.smiles.clone(),
            atoms: m.atom_count,
            bonds: m.bonds.clone(),
            tasks: TaskRecords {
                b: rec(TaskId::B),
                p: rec(TaskId::P),
                x: rec(TaskId::X),
                indole: rec(TaskId::Indole),
                pains: rec(TaskId::Pains),
                rings_count: rec(TaskId::RingsCount),
                rings_max: rec(TaskId::RingsMax),
            },
        }
    }
}

impl DatasetRecord {
    pub fn into_labeled(self, line: usize) -> Result<LabeledMolecule, SchemaError> {
        check_version(line, self.format_version)?;
        if self.id.is_empty() {
            return schema(line, "empty id");
        }
        for &(a, b) in &self.bonds {
            if a >= self.atoms || b >= self.atoms || a == b {
                return schema(line, format!("invalid bond ({a}, {b})"));
            }
        }
        let mut outcomes = Vec::with_capacity(7);
        for (task, rec) in TaskId::ALL.into_iter().zip(self.tasks.in_order()) {
            let atom_mask = unbits(
                line,
                &format!("{task}.atom_mask"),
                &rec.atom_mask,
                self.atoms,
            )?;
            let bond_mask = match (&rec.bond_mask, task.has_bond_mask()) {
                (None, false) => None,
                (Some(v), true) => Some(unbits(
                    line,
                    &format!("{task}.bond_mask"),
                    v,
                    self.bonds.len(),
                )?),
                (Some(_), false) => {
                    return schema(line, format!("{task} must not have a bond_mask"))
                }
                (None, true) => return schema(line, format!("{task} is missing bond_mask")),
            };
            outcomes.push(TaskOutcome {
                task,
                label: rec.label,
                atom_mask,
                bond_mask,
            });
        }
        Ok(LabeledMolecule {
            id: self.id,
            smiles: self.smiles,
            atom_count: self.atoms,
            bonds: self.bonds,
            outcomes,
        })
    }
}

fn parse_line<T: for<'de> Deserialize<'de>>(line: usize, text: &str) -> Result<T, SchemaError> {
    serde_json::from_str(text).map_err(|e| SchemaError {
        line,
        message: e.to_string(),
    })
}

/// Non-blank lines with their 1-based numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn write_dataset(molecules: &[LabeledMolecule]) -> String {
    let mut out = String::new();
    for m in molecules {
        out.push_str(&serde_json::to_string(&DatasetRecord::from(m)).expect("serializable"));
        out.push('\n');
    }
    out
}

pub fn read_dataset(text: &str) -> Result<Vec<LabeledMolecule>, SchemaError> {
    let mut seen = std::collections::HashSet::new();
    records(text)
        .map(|(line, l)| {
            let m = parse_line::<DatasetRecord>(line, l)?.into_labeled(line)?;
            if !seen.insert(m.id.clone()) {
                return schema(line, format!("duplicate id '{}'", m.id));
            }
            Ok(m)
        })
        .collect()
}

/// Per-atom (and optionally per-bond) importance for one molecule and task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributionRecord {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub id: String,
    pub task: TaskId,
    pub node_scores: Vec<f64>,
    #[serde(default)]
    pub edge_scores: Option<Vec<f64>>,
}

/// A located attribution record.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub line: usize,
    pub record: AttributionRecord,
}

pub fn write_attributions(records: &[AttributionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("finite scores"));
        out.push('\n');
    }
    out
}

pub fn read_attributions(text: &str) -> Result<Vec<Attribution>, SchemaError> {
    records(text)
        .map(|(line, l)| {
            let record: AttributionRecord = parse_line(line, l)?;
            check_version(line, record.format_version)?;
            let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
            if !finite(&record.node_scores) || !record.edge_scores.as_deref().is_none_or(finite) {
                return schema(line, "scores must be finite");
            }
            Ok(Attribution { line, record })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub id: String,
    pub task: TaskId,
    pub prob: f64,
}

pub fn read_predictions(text: &str) -> Result<Vec<PredictionRecord>, SchemaError> {
    records(text)
        .map(|(line, l)| {
            let r: PredictionRecord = parse_line(line, l)?;
            check_version(line, r.format_version)?;
            if !(0.0..=1.0).contains(&r.prob) {
                return schema(line, format!("prob {} outside [0, 1]", r.prob));
            }
            Ok(r)
        })
        .collect()
}

pub fn write_predictions(records: &[PredictionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("finite"));
        out.push('\n');
    }
    out
}

/// Id list with a version header: `# format_version=1` then one id per line.
pub fn write_id_list(ids: &[String]) -> String {
    let mut out = format!("# format_version={FORMAT_VERSION}\n");
    for id in ids {
        out.push_str(id);
        out.push('\n');
    }
    out
}

pub fn read_id_list(text: &str) -> Result<Vec<String>, SchemaError> {
    let mut ids = Vec::new();
    for (line, l) in records(text) {
        if let Some(c) = l.strip_prefix('#') {
            if let Some(v) = c.trim().strip_prefix("format_version=") {
                let v: u32 = v
                    .trim()
                    .parse()
                    .or_else(|_| schema(line, "bad format_version"))?;
                check_version(line, v)?;
            }
            continue;
        }
        ids.push(l.to_string());
    }
    Ok(ids)
}

pub fn split_files(split: &DatasetSplit) -> [(&'static str, String); 3] {
    [
        ("train", write_id_list(&split.train)),
        ("valid", write_id_list(&split.valid)),
        ("test", write_id_list(&split.test)),
    ]
}

/// Wraps a JSON document with a leading `format_version` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub format_version: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Versioned<T> {
    pub fn new(body: T) -> Self {
        Versioned {
            format_version: FORMAT_VERSION,
            body,
        }
    }
}

pub fn to_json_document<T: Serialize>(body: &T) -> String {
    let mut s = serde_json::to_string_pretty(&Versioned::new(body)).expect("serializable");
    s.push('\n');
    s
}

pub fn from_json_document<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, SchemaError> {
    let v: Versioned<T> = serde_json::from_str(text).map_err(|e| SchemaError {
        line: e.line(),
        message: e.to_string(),
    })?;
    check_version(1, v.format_version)?;
    Ok(v.body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{prepare_smiles, Labeler};

    fn sample() -> Vec<LabeledMolecule> {
        let l = Labeler::default();
        ["CCF", "c1ccc2[nH]ccc2c1", "C1CCCCCC1", "B"]
            .iter()
            .enumerate()
            .map(|(i, s)| l.label_all(&format!("m{i}"), s, &prepare_smiles(s).unwrap()))
            .collect()
    }

    #[test]
    fn dataset_round_trip() {
        let data = sample();
        let text = write_dataset(&data);
        assert_eq!(read_dataset(&text).unwrap(), data);
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("{\"format_version\":1,\"id\":\"m0\""));
        assert!(first.contains("\"B\":{\"label\":false,\"atom_mask\":[0,0,0],\"bond_mask\":null}"));
    }

    #[test]
    fn dataset_schema_errors_name_lines() {
        let text = write_dataset(&sample());
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[2] = lines[2].replace("\"atoms\":7", "\"atoms\":8");
        let err = read_dataset(&lines.join("\n")).unwrap_err();
        assert_eq!(err.line, 3);
        let truncated = &text[..text.len() - 20];
        assert_eq!(read_dataset(truncated).unwrap_err().line, 4);
        let dup = format!("{text}{}", text.lines().next().unwrap());
        assert!(read_dataset(&dup)
            .unwrap_err()
            .message
            .contains("duplicate id"));
    }

    #[test]
    fn attribution_validation() {
        let ok = r#"{"id":"a","task":"B","node_scores":[0.1,0.2]}"#;
        let got = read_attributions(ok).unwrap();
        assert_eq!(got[0].record.edge_scores, None);
        assert_eq!(got[0].record.format_version, 1);
        assert!(read_attributions(r#"{"id":"a","task":"Q","node_scores":[]}"#).is_err());
        assert!(read_attributions(r#"{"id":"a","task":"B","node_scores":[1],"extra":1}"#).is_err());
        let err = read_attributions(&format!("{ok}\n{{\"id\":\"a\",\"task\":\"B\",\"node_sco"))
            .unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn predictions_in_unit_interval() {
        assert!(read_predictions(r#"{"id":"a","task":"X","prob":0.3}"#).is_ok());
        assert!(read_predictions(r#"{"id":"a","task":"X","prob":1.3}"#).is_err());
    }

    #[test]
    fn id_lists() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let text = write_id_list(&ids);
        assert!(text.starts_with("# format_version=1\n"));
        assert_eq!(read_id_list(&text).unwrap(), ids);
        assert!(read_id_list("# format_version=2\na\n").is_err());
    }
}
