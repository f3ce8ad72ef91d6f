//! Command line interface.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use toolrank_core::competition::ScoringSchema;
use toolrank_core::ranking::Prediction;
use toolrank_core::wl::KernelSpec;
use toolrank_core::{frontend, KernelConfig, NeighborSelector, SvmConfig, ToolSet};

use crate::dataset::{self, Dataset};
use crate::experiment::{self, ExperimentConfig};
use crate::kernel::{self, FittedKernel};
use crate::model::RankingModel;
use crate::{graph_json, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "toolrank", version, about = "Predict how verification tools rank on a C program")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Turn a C program (or a directory of them) into verification graph JSON.
    Extract(ExtractArgs),
    /// Derive per-task rankings from tool outcomes and write a dataset manifest.
    Assemble(AssembleArgs),
    /// Compute the Gram matrix of a dataset.
    Gram(GramArgs),
    /// Train a ranking model on a dataset.
    Train(TrainArgs),
    /// Rank the tools for one program with a trained model.
    Predict(PredictArgs),
    /// Cross-validate the ranking model against the default predictor.
    Cv(CvArgs),
    /// Show the default predictor ranking of a dataset.
    Baseline(BaselineArgs),
}

#[derive(Debug, Args)]
struct KernelArgs {
    /// Edge types followed during relabelling, e.g. `CF` or `CD,DD`. Repeat
    /// to combine several kernels.
    #[arg(long = "edges", default_value = "CF")]
    edges: Vec<NeighborSelector>,
    /// Largest AST depth of counted nodes.
    #[arg(long, default_value_t = KernelConfig::DEFAULT_DEPTH)]
    depth: u32,
    /// Number of relabelling rounds.
    #[arg(long, default_value_t = KernelConfig::DEFAULT_ITERATIONS)]
    iters: u32,
    /// Comma-separated weights, one per `--edges` (default: equal weights).
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
}

impl KernelArgs {
    fn spec(&self) -> Result<KernelSpec> {
        let n = self.edges.len();
        let weights = match &self.weights {
            Some(w) if w.len() != n => {
                return Err(Error::Config(format!("{} weights given for {n} --edges components", w.len())))
            }
            Some(w) => w.clone(),
            None if n == 1 => vec![1.0],
            None => vec![1.0 / n as f64; n],
        };
        let components = weights
            .into_iter()
            .zip(&self.edges)
            .map(|(w, &sel)| (w, KernelConfig::new(sel, self.depth, self.iters)))
            .collect();
        Ok(KernelSpec::weighted(components)?)
    }
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Outcomes table with header `task,tool,time_s,answer,expected`.
    #[arg(long)]
    outcomes: Option<PathBuf>,
    /// Directory of graph JSON files or C sources named `<task>.json` / `<task>.c`.
    #[arg(long)]
    graphs: Option<PathBuf>,
    /// Scoring schema JSON (default: the placeholder example schema).
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Keep only tools with at least one correct outcome.
    #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value_t = true, default_missing_value = "true")]
    filter_tools: bool,
    /// Accept schemas that reward incorrect or penalize correct answers.
    #[arg(long)]
    allow_unusual_schema: bool,
}

impl SourceArgs {
    fn schema(&self) -> Result<ScoringSchema> {
        match &self.schema {
            Some(p) => dataset::read_schema(p, !self.allow_unusual_schema),
            None => {
                log::warn!("no --schema given; using the placeholder example schema");
                Ok(ScoringSchema::EXAMPLE)
            }
        }
    }

    fn manifest(&self) -> Result<dataset::Manifest> {
        let (Some(graphs), Some(outcomes)) = (&self.graphs, &self.outcomes) else {
            return Err(Error::Config("need --graphs and --outcomes".into()));
        };
        let records = dataset::read_outcomes(outcomes)?;
        dataset::assemble(graphs, &records, &self.schema()?, self.filter_tools)
    }
}

#[derive(Debug, Args)]
struct DatasetArgs {
    /// Dataset manifest written by `assemble`.
    #[arg(long, conflicts_with_all = ["graphs", "outcomes"])]
    dataset: Option<PathBuf>,
    #[command(flatten)]
    source: SourceArgs,
}

impl DatasetArgs {
    fn load(&self) -> Result<Dataset> {
        match (&self.dataset, &self.source.graphs) {
            (Some(path), _) => dataset::load_manifest(path),
            (None, Some(dir)) => dataset::manifest_to_dataset(&self.source.manifest()?, dir),
            (None, None) => Err(Error::Config("need --dataset, or --graphs with --outcomes".into())),
        }
    }
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// C file, or a directory whose `*.c` files are all extracted.
    input: PathBuf,
    /// Output file (directory when the input is one); stdout if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AssembleArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct GramArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct SvmArgs {
    /// SVM regularization constant.
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
}

impl SvmArgs {
    fn config(&self) -> SvmConfig {
        SvmConfig { c: self.c, ..SvmConfig::default() }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    svm: SvmArgs,
    /// Model directory to create.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// C source or graph JSON.
    input: PathBuf,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    svm: SvmArgs,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Repeat the whole cross-validation with fresh shuffles.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Reuse a Gram matrix written by `gram` (checked against tasks and kernel).
    #[arg(long)]
    gram: Option<PathBuf>,
    /// Include wall-clock times in the JSON report (makes it non-reproducible).
    #[arg(long)]
    record_timings: bool,
    /// Report file; stdout if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long)]
    json: bool,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract(a) => extract(&a),
        Command::Assemble(a) => {
            let manifest = a.source.manifest()?;
            dataset::save_manifest(&a.output, &manifest)?;
            println!("{} tasks, {} tools: {}", manifest.tasks.len(), manifest.tools.len(), manifest.tools.join(", "));
            Ok(())
        }
        Command::Gram(a) => {
            let data = a.data.load()?;
            let fitted = FittedKernel::fit(&data.graphs, &a.kernel.spec()?);
            let gram = fitted.gram();
            kernel::save_gram(&a.output, &data.tasks, &fitted, &gram)
        }
        Command::Train(a) => {
            let data = a.data.load()?;
            let fitted = FittedKernel::fit(&data.graphs, &a.kernel.spec()?);
            let gram = fitted.gram();
            let all: Vec<usize> = (0..data.len()).collect();
            let svm = a.svm.config();
            let ensemble = experiment::train_ensemble(&gram, &all, &data.rankings, &data.tools, &svm)?;
            let degenerate = ensemble.models().iter().filter(|m| m.degenerate.is_some()).count();
            if degenerate > 0 {
                log::warn!("{degenerate} pairwise models saw a single class and predict a constant");
            }
            RankingModel { kernel: fitted, ensemble, svm, tasks: data.tasks }.save(&a.output)
        }
        Command::Predict(a) => {
            let model = RankingModel::load(&a.model)?;
            let g = dataset::load_any_graph(&a.input)?;
            let p = model.predict(&g)?;
            print!("{}", if a.json { prediction_json(model.ensemble.tools(), &p) } else { prediction_text(model.ensemble.tools(), &p) });
            Ok(())
        }
        Command::Cv(a) => cv(&a),
        Command::Baseline(a) => {
            let data = a.data.load()?;
            let (r, s) = experiment::baseline(&data.rankings)?;
            if a.json {
                let v = serde_json::json!({
                    "tools": data.tools.names(),
                    "ranking": r.positions(),
                    "order": r.order().iter().map(|&t| &data.tools.names()[t]).collect::<Vec<_>>(),
                    "mean_spearman": s,
                });
                println!("{}", serde_json::to_string_pretty(&v)?);
            } else {
                println!("{}", order_line(&data.tools, &r.order()));
                println!("mean training Spearman {s:.4} over {} tasks", data.len());
            }
            Ok(())
        }
    }
}

fn extract(a: &ExtractArgs) -> Result<()> {
    let convert = |src: &Path| -> Result<String> {
        let text = fs::read_to_string(src).map_err(|e| Error::io(src, e))?;
        let g = frontend::extract(&text).map_err(|e| Error::from(e).at(src))?;
        Ok(graph_json::to_json(&g))
    };
    if a.input.is_dir() {
        let out = a.output.as_ref().ok_or_else(|| Error::Config("-o <dir> is required for a directory input".into()))?;
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let mut sources: Vec<PathBuf> = fs::read_dir(&a.input)
            .map_err(|e| Error::io(&a.input, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "c"))
            .collect();
        sources.sort();
        for src in &sources {
            let dst = out.join(src.with_extension("json").file_name().expect("file has a name"));
            fs::write(&dst, convert(src)? + "\n").map_err(|e| Error::io(&dst, e))?;
        }
        log::info!("extracted {} programs", sources.len());
        return Ok(());
    }
    let json = convert(&a.input)?;
    match &a.output {
        Some(out) => fs::write(out, json + "\n").map_err(|e| Error::io(out, e)),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn cv(a: &CvArgs) -> Result<()> {
    let data = a.data.load()?;
    let cfg = ExperimentConfig { kernel: a.kernel.spec()?, svm: a.svm.config(), folds: a.folds, seed: a.seed, repeats: a.repeats };
    let report = match &a.gram {
        Some(path) => {
            let (tasks, gram) = kernel::load_gram(path)?;
            if tasks != data.tasks {
                return Err(Error::Config(format!("{} was computed for a different task list", path.display())));
            }
            if gram.fingerprint() != cfg.kernel.fingerprint() {
                return Err(Error::Config(format!(
                    "{} holds kernel {}, but the flags ask for {}",
                    path.display(),
                    gram.fingerprint(),
                    cfg.kernel.fingerprint()
                )));
            }
            experiment::cross_validate(&gram, &data.rankings, &data.tools, &cfg)?
        }
        None => experiment::cross_validate_dataset(&data, &cfg)?,
    };
    let table = report.table();
    let report = if a.record_timings { report } else { report.without_timings() };
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match &a.output {
        Some(out) => {
            fs::write(out, json).map_err(|e| Error::io(out, e))?;
            print!("{table}");
        }
        None => {
            eprint!("{table}");
            print!("{json}");
        }
    }
    Ok(())
}

fn order_line(tools: &ToolSet, order: &[usize]) -> String {
    order.iter().enumerate().map(|(r, &t)| format!("{}. {}", r + 1, tools.names()[t])).collect::<Vec<_>>().join("  ")
}

fn prediction_text(tools: &ToolSet, p: &Prediction) -> String {
    let names = tools.names();
    let width = names.iter().map(String::len).max().unwrap_or(0).max(6);
    let mut s = String::new();
    let _ = writeln!(s, "ranking: {}", order_line(tools, &p.ranking.order()));
    let _ = writeln!(s, "scores:");
    for (name, score) in names.iter().zip(&p.scores) {
        let _ = writeln!(s, "  {name:<width$} {score:.4}");
    }
    let _ = writeln!(s, "pairwise probabilities (row preferred over column):");
    let _ = write!(s, "  {:<width$}", "");
    for name in names {
        let _ = write!(s, " {name:>width$}");
    }
    s.push('\n');
    for (i, row) in p.probabilities.rows().enumerate() {
        let _ = write!(s, "  {:<width$}", names[i]);
        for (j, v) in row.iter().enumerate() {
            if i == j {
                let _ = write!(s, " {:>width$}", "-");
            } else {
                let _ = write!(s, " {v:>width$.4}");
            }
        }
        s.push('\n');
    }
    s
}

fn prediction_json(tools: &ToolSet, p: &Prediction) -> String {
    let v = serde_json::json!({
        "tools": tools.names(),
        "ranking": p.ranking.positions(),
        "order": p.ranking.order().iter().map(|&t| &tools.names()[t]).collect::<Vec<_>>(),
        "scores": p.scores,
        "probabilities": p.probabilities.rows().collect::<Vec<_>>(),
    });
    serde_json::to_string_pretty(&v).expect("prediction serializes") + "\n"
}
