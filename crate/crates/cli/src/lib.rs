//! Command implementations behind the `commstream` binary.

pub mod report;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use commstream::commgraph::extract_features;
use commstream::hoeffding::HoeffdingTree;
use commstream::io::{read_builds, read_features, read_work_items, write_features};
use commstream::knn::{knn_evaluate, KnnProtocol};
use commstream::stream::{
    order_chronologically, run_prequential_observed, synth_stream, Concept, PrequentialConfig, SynthConfig,
};
use commstream::{ConfusionMatrix, Instance, TreeParams};

/// Failure of a command, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed input, bad arguments or insufficient data.
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

fn context(what: &Path) -> impl Fn(commstream::Error) -> CliError + '_ {
    move |e| {
        let message = format!("{}: {e}", what.display());
        if e.is_input_error() {
            CliError::Input(message)
        } else {
            CliError::Io(message)
        }
    }
}

fn io_context(what: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", what.display()))
}

fn input(e: commstream::Error) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "commstream", version, about = "Build-outcome prediction from developer communication streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn build and work-item JSONL files into a chronologically ordered feature CSV.
    Extract(ExtractArgs),
    /// Prequential Hoeffding-tree run with log, summary and tree snapshots.
    Run(RunArgs),
    /// Hoeffding tree and k-NN scored side by side under one protocol.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub builds: PathBuf,
    #[arg(long)]
    pub items: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    /// Realistic metric ranges with a weak class signal.
    Reference,
    /// Classes apart on every feature.
    Separable,
    /// Classes apart on group in/out-degree centralization only.
    Threshold,
    /// Identical class-conditional distributions.
    Uninformative,
}

impl SynthKind {
    fn concept(self) -> Concept {
        match self {
            SynthKind::Reference => Concept::communication(),
            SynthKind::Separable => Concept::separable(),
            SynthKind::Threshold => Concept::single_threshold(),
            SynthKind::Uninformative => Concept::uninformative(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Feature CSV written by `extract`.
    #[arg(long, conflicts_with = "synth")]
    pub features: Option<PathBuf>,
    /// Generate a synthetic stream instead of reading one.
    #[arg(long, value_enum)]
    pub synth: Option<SynthKind>,
    /// Length of the synthetic stream.
    #[arg(long, default_value_t = 199, requires = "synth")]
    pub synth_instances: usize,
    /// Swap the class roles of the synthetic concept from this index on; repeatable.
    #[arg(long = "drift-at", requires = "synth")]
    pub drift_at: Vec<usize>,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct TreeArgs {
    #[arg(long, default_value_t = 20)]
    pub grace: u64,
    #[arg(long, default_value_t = 0.05)]
    pub split_confidence: f64,
    #[arg(long, default_value_t = 0.1)]
    pub tie_threshold: f64,
    #[arg(long, default_value_t = commstream::adwin::DEFAULT_DELTA)]
    pub drift_delta: f64,
    /// Leading instances used for training only.
    #[arg(long, default_value_t = commstream::stream::DEFAULT_WARMUP)]
    pub warmup: usize,
}

impl TreeArgs {
    fn params(&self) -> TreeParams {
        TreeParams {
            grace_period: self.grace,
            split_confidence: self.split_confidence,
            tie_threshold: self.tie_threshold,
            drift_delta: self.drift_delta,
            ..TreeParams::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub tree: TreeArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub tree: TreeArgs,
    #[arg(long, default_value_t = commstream::knn::DEFAULT_K)]
    pub k: usize,
    /// Score k-NN on the instances it has stored instead of test-then-insert.
    #[arg(long)]
    pub resubstitution: bool,
    /// Also write the comparison as JSON to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Extract(a) => cmd_extract(&a.builds, &a.items, &a.out),
        Command::Run(a) => cmd_run(&a).map(|_| ()),
        Command::Compare(a) => {
            let report = cmd_compare(&a)?;
            print!("{}", report.table);
            Ok(())
        }
    }
}

pub fn cmd_extract(builds_path: &Path, items_path: &Path, out: &Path) -> Result<(), CliError> {
    let builds = File::open(builds_path).map_err(io_context(builds_path))?;
    let builds = read_builds(BufReader::new(builds)).map_err(context(builds_path))?.records;
    let items = File::open(items_path).map_err(io_context(items_path))?;
    let items = read_work_items(BufReader::new(items)).map_err(context(items_path))?.records;

    let builds = order_chronologically(builds);
    let features = extract_features(&builds, &items).map_err(input)?;
    let rows: Vec<Instance> = builds
        .into_iter()
        .zip(features)
        .map(|(b, features)| Instance {
            id: b.build_id,
            features,
            label: b.outcome,
        })
        .collect();
    write_file(out, |w| write_features(w, &rows))
}

fn write_file<F>(path: &Path, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> commstream::Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_context(dir))?;
    }
    let file = File::create(path).map_err(io_context(path))?;
    let mut w = BufWriter::new(file);
    write(&mut w).map_err(context(path))?;
    w.flush().map_err(io_context(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_context(path))
}

/// Loads the stream named by the source flags, in stream order.
pub fn load_stream(source: &SourceArgs) -> Result<(String, Vec<Instance>), CliError> {
    match (&source.features, source.synth) {
        (Some(path), None) => {
            let file = File::open(path).map_err(io_context(path))?;
            let rows = read_features(BufReader::new(file)).map_err(context(path))?;
            Ok((path.display().to_string(), rows))
        }
        (None, Some(kind)) => {
            let mut concept = kind.concept();
            let mut drift_points = Vec::new();
            let mut at = source.drift_at.clone();
            at.sort_unstable();
            at.dedup();
            for idx in at {
                concept = concept.flipped();
                drift_points.push((idx, concept.clone()));
            }
            let config = SynthConfig {
                n_instances: source.synth_instances,
                concept: kind.concept(),
                drift_points,
                ..SynthConfig::reference(source.seed)
            };
            let rows = synth_stream(&config).map_err(input)?;
            let name = serde_json::to_value(kind).map_err(|e| CliError::Input(e.to_string()))?;
            Ok((format!("synth:{}", name.as_str().unwrap_or_default()), rows))
        }
        _ => Err(CliError::Input("exactly one of --features or --synth is required".into())),
    }
}

fn check_length(instances: &[Instance], warmup: usize) -> Result<(), CliError> {
    if instances.len() <= warmup {
        return Err(CliError::Input(format!(
            "need more than {warmup} instances (the warmup), got {}",
            instances.len()
        )));
    }
    Ok(())
}

fn warn_if_grace_too_long(grace: u64, len: usize) {
    if grace >= len as u64 {
        log::warn!(
            "grace period {grace} is not shorter than the {len}-instance stream; \
             the tree may underfit and lose final accuracy"
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub source: String,
    pub seed: u64,
    pub params: TreeParams,
    pub instances: usize,
    pub warmup: usize,
    pub scored: usize,
    pub matrix: ConfusionMatrix,
    pub accuracy: f64,
    pub recall_success: Option<f64>,
    pub recall_fail: Option<f64>,
    /// Stream indices at which the tree replaced a subtree.
    pub drift_events: Vec<usize>,
    /// DOT files written, relative to the output directory.
    pub snapshots: Vec<String>,
    pub tree_splits: usize,
    pub tree_leaves: usize,
    pub tree_depth: usize,
    pub tree: String,
}

pub const LOG_FILE: &str = "prequential.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TREE_FILE: &str = "tree.json";
pub const FINAL_DOT_FILE: &str = "tree-final.dot";

pub fn drift_dot_file(index: usize) -> String {
    format!("tree-drift-{index:05}.dot")
}

pub fn cmd_run(args: &RunArgs) -> Result<RunSummary, CliError> {
    let params = args.tree.params();
    params.validate().map_err(input)?;
    let (source, instances) = load_stream(&args.source)?;
    let warmup = args.tree.warmup;
    check_length(&instances, warmup)?;
    warn_if_grace_too_long(params.grace_period, instances.len());

    fs::create_dir_all(&args.out).map_err(io_context(&args.out))?;
    let mut tree = HoeffdingTree::new(params).map_err(input)?;
    let mut snapshots = Vec::new();
    let mut write_error = None;
    let log = run_prequential_observed(
        &mut tree,
        &instances,
        &PrequentialConfig::with_warmup(warmup),
        |index, model: &HoeffdingTree| {
            let name = drift_dot_file(index);
            if let Err(e) = write_text(&args.out.join(&name), &model.to_dot()) {
                write_error.get_or_insert(e);
            }
            snapshots.push(name);
        },
    )
    .map_err(input)?;
    if let Some(e) = write_error {
        return Err(e);
    }

    write_file(&args.out.join(LOG_FILE), |w| log.write_csv(w))?;
    write_text(&args.out.join(FINAL_DOT_FILE), &tree.to_dot())?;
    snapshots.push(FINAL_DOT_FILE.to_string());
    write_text(&args.out.join(TREE_FILE), &tree.to_json().map_err(input)?)?;

    let summary = RunSummary {
        source,
        seed: args.source.seed,
        params,
        instances: instances.len(),
        warmup,
        scored: log.records.len(),
        matrix: log.matrix,
        accuracy: log.accuracy(),
        recall_success: log.matrix.recall(commstream::Outcome::Success),
        recall_fail: log.matrix.recall(commstream::Outcome::Fail),
        drift_events: log.drift_indices.clone(),
        snapshots,
        tree_splits: tree.split_count(),
        tree_leaves: tree.leaf_count(),
        tree_depth: tree.depth(),
        tree: tree.render(),
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Input(e.to_string()))?;
    write_text(&args.out.join(SUMMARY_FILE), &(json + "\n"))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub matrix: ConfusionMatrix,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub source: String,
    pub seed: u64,
    pub warmup: usize,
    pub evaluated: usize,
    pub k: usize,
    pub knn_protocol: String,
    pub results: Vec<MethodResult>,
    /// The rendered side-by-side table.
    pub table: String,
}

pub fn cmd_compare(args: &CompareArgs) -> Result<Comparison, CliError> {
    let params = args.tree.params();
    params.validate().map_err(input)?;
    let (source, instances) = load_stream(&args.source)?;
    let warmup = args.tree.warmup;
    check_length(&instances, warmup)?;
    warn_if_grace_too_long(params.grace_period, instances.len());

    let mut tree = HoeffdingTree::new(params).map_err(input)?;
    let tree_log = run_prequential_observed(&mut tree, &instances, &PrequentialConfig::with_warmup(warmup), |_, _| {})
        .map_err(input)?;
    let protocol = if args.resubstitution {
        KnnProtocol::Resubstitution
    } else {
        KnnProtocol::Prequential
    };
    let knn = knn_evaluate(&instances, args.k, warmup, protocol).map_err(input)?;

    let results = vec![
        MethodResult {
            method: "Hoeffding Tree".into(),
            matrix: tree_log.matrix,
            accuracy: tree_log.matrix.accuracy(),
        },
        MethodResult {
            method: format!("k-NN (k={})", args.k),
            matrix: knn,
            accuracy: knn.accuracy(),
        },
    ];
    let evaluated = instances.len() - warmup;
    let columns: Vec<_> = results.iter().map(|r| (r.method.clone(), r.matrix)).collect();
    let table = format!(
        "Comparison over {evaluated} instances (first {warmup} excluded)\n\n{}",
        report::comparison_table(&columns)
    );
    let comparison = Comparison {
        source,
        seed: args.source.seed,
        warmup,
        evaluated,
        k: args.k,
        knn_protocol: match protocol {
            KnnProtocol::Prequential => "prequential".into(),
            KnnProtocol::Resubstitution => "resubstitution".into(),
        },
        results,
        table,
    };
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&comparison).map_err(|e| CliError::Input(e.to_string()))?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io_context(dir))?;
        }
        write_text(path, &(json + "\n"))?;
    }
    Ok(comparison)
}
