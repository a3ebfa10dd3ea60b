//! Commands behind the `bxaic` binary.
//!
//! Every command reads its inputs in full, computes, then writes each output
//! file once through a temporary file and a rename.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use bxaic_core::baselines::{baseline_attributions, BaselineMethod};
use bxaic_core::dataset::{
    build_dataset, read_corpus, BuildConfig, DatasetError, SplitRatio, StatsConfig,
};
use bxaic_core::eval::{
    compare_by_task, compare_explainers, evaluate_explainer, replicate_spread, EvalConfig,
    EvalError, EvalReport, Level, ReplicateSpread, SignificanceMatrix, TaskComparison,
};
use bxaic_core::formats::{
    from_json_document, read_attributions, read_dataset, read_id_list, read_predictions,
    split_files, to_json_document, write_attributions, write_dataset, SchemaError,
};
use bxaic_core::metrics::{NeConfig, QuartileRule};
use bxaic_core::pains::PatternSetError;
use bxaic_core::{load_pains, prepare_smiles, Labeler, SmilesError, TaskConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Bad flags or flag values (also used by the argument parser).
    pub const USAGE: i32 = 2;
    /// A SMILES string could not be parsed.
    pub const PARSE: i32 = 3;
    /// An input file violates its format.
    pub const SCHEMA: i32 = 4;
    pub const IO: i32 = 5;
    /// Inputs are well-formed but inconsistent or insufficient.
    pub const DATA: i32 = 6;
    /// The pattern asset could not be loaded.
    pub const PATTERNS: i32 = 7;
}

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const STATS_FILE: &str = "stats.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.jsonl";
pub const MANIFEST_FILE: &str = "build.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Schema { path: PathBuf, source: SchemaError },
    #[error("cannot parse SMILES '{smiles}': {source}")]
    Parse { smiles: String, source: SmilesError },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("pattern asset: {0}")]
    Patterns(#[from] PatternSetError),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Parse { .. } => exit::PARSE,
            CliError::Schema { .. } => exit::SCHEMA,
            CliError::Io { .. } => exit::IO,
            CliError::Dataset(_) | CliError::Eval(_) | CliError::Data(_) => exit::DATA,
            CliError::Patterns(_) => exit::PATTERNS,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bxaic",
    version,
    about = "Substructure explanation benchmark toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter, label, sample and split a SMILES corpus.
    Build(BuildArgs),
    /// Print all task labels and masks for one molecule.
    Label(LabelArgs),
    /// Write model-free reference attributions for a dataset.
    Baseline(BaselineArgs),
    /// Score an attribution file against the dataset masks.
    Eval(EvalArgs),
    /// Rank explainers from per-graph scores with significance flags.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// SMILES corpus, one `SMILES [id]` per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Molecules to sample; defaults to every surviving molecule.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "8:1:1")]
    pub split: SplitRatio,
    /// Molecule pairs drawn for the similarity histogram.
    #[arg(long, default_value_t = 10_000)]
    pub similarity_pairs: usize,
    #[arg(long, default_value_t = 20)]
    pub histogram_bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub smiles: String,
    #[arg(long, value_enum, default_value_t = LabelFormat::Text)]
    pub format: LabelFormat,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// random, oracle or degree.
    #[arg(long)]
    pub method: BaselineMethod,
    /// Required by the random method.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Node,
    Edge,
    Both,
}

impl LevelArg {
    fn levels(self) -> Vec<Level> {
        match self {
            LevelArg::Node => vec![Level::Node],
            LevelArg::Edge => vec![Level::Edge],
            LevelArg::Both => vec![Level::Node, Level::Edge],
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub attributions: PathBuf,
    #[arg(long, value_enum, default_value_t = LevelArg::Both)]
    pub level: LevelArg,
    /// linear (type 7), lower, higher, midpoint or nearest.
    #[arg(long, default_value = "linear")]
    pub quartile_rule: QuartileRule,
    /// Fence multiplier for the null-explanation outlier rule.
    #[arg(long, default_value_t = 1.5)]
    pub fence_k: f64,
    /// Significance level recorded in the report for later comparison.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Include one score per graph, needed by `compare`.
    #[arg(long)]
    pub emit_per_graph: bool,
    /// Prediction file for F1 scoring.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Score absolute attribution values.
    #[arg(long = "abs")]
    pub absolute: bool,
    /// Restrict evaluation to the ids in this list (e.g. test.txt).
    #[arg(long)]
    pub ids: Option<PathBuf>,
    /// Explainer name; defaults to the attribution file stem.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Reports written by `eval --emit-per-graph`.
    #[arg(long, num_args = 2.., required = true)]
    pub reports: Vec<PathBuf>,
    /// Defaults to the level recorded in the reports.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// The file written by `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub alpha: f64,
    #[serde(flatten)]
    pub report: EvalReport,
}

/// The file written by `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonDocument {
    #[serde(flatten)]
    pub matrix: SignificanceMatrix,
    /// The same test inside each (level, task).
    pub by_task: Vec<TaskComparison>,
    /// Explainers given more than once (e.g. one report per training seed).
    pub replicates: Vec<ReplicateSpread>,
}

#[derive(Debug, Serialize)]
struct BuildManifest<'a> {
    input: String,
    corpus_lines: usize,
    population: usize,
    sampled: usize,
    rejected: usize,
    config: &'a BuildConfig,
    sampling: &'a bxaic_core::dataset::SamplingWeights,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Build(a) => cmd_build(&a),
        Command::Label(a) => cmd_label(&a),
        Command::Baseline(a) => cmd_baseline(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Compare(a) => cmd_compare(&a),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn schema_err(path: &Path) -> impl FnOnce(SchemaError) -> CliError + '_ {
    move |source| CliError::Schema {
        path: path.to_path_buf(),
        source,
    }
}

/// Fails unless the output's directory exists and the output is not one of
/// the inputs.
fn check_output(out: &Path, inputs: &[&Path]) -> Result<(), CliError> {
    let dir = parent_dir(out);
    if !dir.is_dir() {
        return Err(CliError::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "output directory does not exist",
            ),
        });
    }
    let canon = |p: &Path| fs::canonicalize(p).ok();
    if let Some(o) = canon(out) {
        if inputs.iter().any(|i| canon(i).as_ref() == Some(&o)) {
            return Err(CliError::Usage(format!(
                "refusing to overwrite input {}",
                out.display()
            )));
        }
    }
    Ok(())
}

fn parent_dir(p: &Path) -> &Path {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    }
}

/// Writes through a temporary file in the destination directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut builder = tempfile::Builder::new();
    builder.prefix(".bxaic-");
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(parent_dir(path)).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn labeler() -> Result<Labeler, CliError> {
    Ok(Labeler::new(load_pains()?, TaskConfig::default()))
}

pub fn cmd_build(a: &BuildArgs) -> Result<(), CliError> {
    let text = read_text(&a.input)?;
    fs::create_dir_all(&a.out).map_err(|source| CliError::Io {
        path: a.out.clone(),
        source,
    })?;
    let labeler = labeler()?;
    let lines = read_corpus(&text);
    let cfg = BuildConfig {
        size: a.size,
        seed: a.seed,
        split: a.split,
        stats: StatsConfig {
            similarity_pairs: a.similarity_pairs,
            histogram_bins: a.histogram_bins,
            ..StatsConfig::default()
        },
    };
    let out = build_dataset(&lines, &labeler, &cfg)?;
    if !out.diagnostics.is_empty() {
        log::warn!(
            "{} of {} corpus lines rejected; see {}",
            out.diagnostics.len(),
            lines.len(),
            DIAGNOSTICS_FILE
        );
    }
    let mut diagnostics = String::new();
    for d in &out.diagnostics {
        diagnostics.push_str(&serde_json::to_string(d).expect("serializable"));
        diagnostics.push('\n');
    }
    let manifest = BuildManifest {
        input: a.input.display().to_string(),
        corpus_lines: lines.len(),
        population: out.population,
        sampled: out.molecules.len(),
        rejected: out.diagnostics.len(),
        config: &cfg,
        sampling: &out.weights,
    };
    write_atomic(&a.out.join(DATASET_FILE), &write_dataset(&out.molecules))?;
    for (name, body) in split_files(&out.split) {
        write_atomic(&a.out.join(format!("{name}.txt")), &body)?;
    }
    write_atomic(&a.out.join(STATS_FILE), &to_json_document(&out.stats))?;
    write_atomic(&a.out.join(DIAGNOSTICS_FILE), &diagnostics)?;
    write_atomic(&a.out.join(MANIFEST_FILE), &to_json_document(&manifest))?;
    println!(
        "{} molecules from {} survivors of {} lines (train {}, valid {}, test {}) -> {}",
        out.molecules.len(),
        out.population,
        lines.len(),
        out.split.train.len(),
        out.split.valid.len(),
        out.split.test.len(),
        a.out.display()
    );
    Ok(())
}

fn indices(mask: &[bool]) -> String {
    let on: Vec<String> = mask
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i.to_string())
        .collect();
    if on.is_empty() {
        "-".into()
    } else {
        on.join(",")
    }
}

/// Renders the label table shown by `label --format text`.
pub fn label_text(m: &bxaic_core::LabeledMolecule) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "smiles  {}", m.smiles);
    let _ = writeln!(s, "atoms   {}  bonds {}", m.atom_count, m.bonds.len());
    let _ = writeln!(
        s,
        "{:<12}{:<7}{:<13}{:<24}bonds",
        "task", "label", "explanation", "atoms"
    );
    for o in &m.outcomes {
        let kind = match o.kind() {
            bxaic_core::ExplanationKind::Null => "null",
            bxaic_core::ExplanationKind::Subgraph => "subgraph",
        };
        let bonds = o
            .bond_mask
            .as_deref()
            .map_or_else(|| "n/a".to_string(), indices);
        let _ = writeln!(
            s,
            "{:<12}{:<7}{:<13}{:<24}{}",
            o.task.name(),
            u8::from(o.label),
            kind,
            indices(&o.atom_mask),
            bonds
        );
    }
    s
}

pub fn cmd_label(a: &LabelArgs) -> Result<(), CliError> {
    let labeler = labeler()?;
    let mol = prepare_smiles(&a.smiles).map_err(|source| CliError::Parse {
        smiles: a.smiles.clone(),
        source,
    })?;
    let m = labeler.label_all("query", &a.smiles, &mol);
    match a.format {
        LabelFormat::Text => print!("{}", label_text(&m)),
        LabelFormat::Json => print!("{}", write_dataset(std::slice::from_ref(&m))),
    }
    Ok(())
}

pub fn cmd_baseline(a: &BaselineArgs) -> Result<(), CliError> {
    let seed = match (a.method, a.seed) {
        (_, Some(s)) => s,
        (BaselineMethod::Random, None) => {
            return Err(CliError::Usage(
                "--seed is required for the random baseline".into(),
            ));
        }
        (_, None) => 0,
    };
    let dataset = read_dataset(&read_text(&a.dataset)?).map_err(schema_err(&a.dataset))?;
    check_output(&a.out, &[&a.dataset])?;
    let records = baseline_attributions(&dataset, a.method, seed);
    write_atomic(&a.out, &write_attributions(&records))?;
    println!(
        "{} {} attribution records -> {}",
        records.len(),
        a.method.name(),
        a.out.display()
    );
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Usage(format!(
            "--alpha must lie in (0, 1), got {}",
            a.alpha
        )));
    }
    if a.fence_k.is_nan() || a.fence_k <= 0.0 {
        return Err(CliError::Usage(format!(
            "--fence-k must be positive, got {}",
            a.fence_k
        )));
    }
    let dataset = read_dataset(&read_text(&a.dataset)?).map_err(schema_err(&a.dataset))?;
    let attributions =
        read_attributions(&read_text(&a.attributions)?).map_err(schema_err(&a.attributions))?;
    let predictions = match &a.predictions {
        Some(p) => Some(read_predictions(&read_text(p)?).map_err(schema_err(p))?),
        None => None,
    };
    let ids = match &a.ids {
        Some(p) => Some(read_id_list(&read_text(p)?).map_err(schema_err(p))?),
        None => None,
    };
    let mut inputs: Vec<&Path> = vec![&a.dataset, &a.attributions];
    inputs.extend(a.predictions.as_deref());
    inputs.extend(a.ids.as_deref());
    check_output(&a.out, &inputs)?;

    let name = a.name.clone().unwrap_or_else(|| {
        a.attributions
            .file_stem()
            .map_or_else(|| "explainer".into(), |s| s.to_string_lossy().into_owned())
    });
    let cfg = EvalConfig {
        ne: NeConfig {
            k: a.fence_k,
            quartile_rule: a.quartile_rule,
        },
        absolute: a.absolute,
        levels: a.level.levels(),
        threshold: a.threshold,
    };
    let report = evaluate_explainer(
        &name,
        &dataset,
        &attributions,
        predictions.as_deref(),
        ids.as_deref(),
        &cfg,
        a.emit_per_graph,
    )?;
    for s in &report.skipped {
        log::warn!("{} {}: {}", s.level, s.task, s.reason);
    }
    for line in &report.table {
        println!("{line}");
    }
    write_atomic(
        &a.out,
        &to_json_document(&ReportDocument {
            alpha: a.alpha,
            report,
        }),
    )?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<ReportDocument, CliError> {
    from_json_document(&read_text(path)?).map_err(schema_err(path))
}

pub fn cmd_compare(a: &CompareArgs) -> Result<(), CliError> {
    let docs = a
        .reports
        .iter()
        .map(|p| read_report(p))
        .collect::<Result<Vec<_>, _>>()?;
    let inputs: Vec<&Path> = a.reports.iter().map(PathBuf::as_path).collect();
    check_output(&a.out, &inputs)?;
    let alpha = match a.alpha {
        Some(x) => x,
        None => {
            let first = docs[0].alpha;
            if docs.iter().any(|d| d.alpha != first) {
                return Err(CliError::Usage(
                    "reports disagree on alpha; pass --alpha".into(),
                ));
            }
            first
        }
    };
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Usage(format!(
            "--alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let replicates = replicate_spread(&docs.iter().map(|d| &d.report).collect::<Vec<_>>());
    let mut tables = Vec::with_capacity(docs.len());
    for (doc, path) in docs.into_iter().zip(&a.reports) {
        let rows = doc.report.per_graph.ok_or_else(|| {
            CliError::Data(format!(
                "{}: report has no per-graph scores; rerun eval with --emit-per-graph",
                path.display()
            ))
        })?;
        tables.push((doc.report.explainer, rows));
    }
    let matrix = compare_explainers(&tables, alpha)?;
    let by_task = compare_by_task(&tables, alpha)?;
    for line in &matrix.table {
        println!("{line}");
    }
    for r in &replicates {
        let f = |m: &Option<bxaic_core::dataset::MeanStd>| {
            m.as_ref().map_or("--".to_string(), |m| {
                format!("{:.2} ± {:.2}", m.mean, m.std)
            })
        };
        println!(
            "{} {} over {} runs: NE {} SE {} avg {}",
            r.explainer,
            r.level,
            r.runs,
            f(&r.ne),
            f(&r.se),
            f(&r.avg)
        );
    }
    write_atomic(
        &a.out,
        &to_json_document(&ComparisonDocument {
            matrix,
            by_task,
            replicates,
        }),
    )?;
    Ok(())
}
