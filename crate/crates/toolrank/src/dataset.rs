//! Outcome tables, scoring schemas and dataset manifests.
//!
//! A dataset manifest links each task to its graph file and its ground-truth
//! ranking:
//!
//! ```json
//! {
//!   "graphs": "graphs",
//!   "tools": ["cpachecker", "esbmc", "ultimate"],
//!   "excluded_tools": [],
//!   "tasks": [{"task": "loop_01", "file": "loop_01.json", "ranking": [2, 1, 3]}]
//! }
//! ```
//!
//! `graphs` is resolved relative to the manifest's directory. Graph files may
//! be graph JSON or C sources, which are extracted on load.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toolrank_core::competition::{assemble_dataset, ScoringSchema, TaskOutcome};
use toolrank_core::{frontend, Ranking, ToolSet, VerificationGraph};

use crate::{graph_json, Error, Result};

pub fn read_outcomes(path: &Path) -> Result<Vec<TaskOutcome>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| Error::from(e).at(path))?;
    let headers = reader.headers().map_err(|e| Error::from(e).at(path))?.clone();
    let expected = ["task", "tool", "time_s", "answer", "expected"];
    if headers.iter().ne(expected) {
        return Err(Error::Format(format!("header must be `{}`, found `{}`", expected.join(","), headers.iter().collect::<Vec<_>>().join(","))).at(path));
    }
    reader.deserialize().collect::<Result<Vec<TaskOutcome>, _>>().map_err(|e| Error::from(e).at(path))
}

/// Read a schema file; with `check`, reject schemas where correct answers
/// score below zero or incorrect ones above.
pub fn read_schema(path: &Path, check: bool) -> Result<ScoringSchema> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let schema: ScoringSchema = serde_json::from_str(&text).map_err(|e| Error::from(e).at(path))?;
    if check {
        schema.check().map_err(|e| Error::from(e).at(path))?;
    }
    Ok(schema)
}

/// Tasks with their graphs and rankings, in a fixed order.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub tasks: Vec<String>,
    pub graphs: Vec<VerificationGraph>,
    pub rankings: Vec<Ranking>,
    pub tools: ToolSet,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub graphs: PathBuf,
    pub tools: Vec<String>,
    #[serde(default)]
    pub excluded_tools: Vec<String>,
    pub tasks: Vec<ManifestTask>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestTask {
    pub task: String,
    pub file: String,
    pub ranking: Vec<usize>,
}

/// Load a graph from JSON or, for `.c` files, by running the frontend.
pub fn load_any_graph(path: &Path) -> Result<VerificationGraph> {
    if path.extension().is_some_and(|e| e == "c") {
        let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        frontend::extract(&src).map_err(|e| Error::from(e).at(path))
    } else {
        graph_json::load_graph(path)
    }
}

/// Graph files (`*.json`, `*.c`) in `dir` keyed by file stem, sorted by name.
pub fn list_graph_dir(dir: &Path) -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str());
        if path.is_file() && matches!(ext, Some("json" | "c")) {
            let stem = path.file_stem().and_then(|s| s.to_str()).ok_or_else(|| Error::Format(format!("non UTF-8 file name {}", path.display())))?;
            let name = path.file_name().and_then(|s| s.to_str()).expect("stem is UTF-8");
            files.push((stem.to_string(), name.to_string()));
        }
    }
    files.sort();
    if let Some(w) = files.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Format(format!("task {} has more than one graph file in {}", w[0].0, dir.display())));
    }
    Ok(files)
}

/// Derive rankings from outcomes and pair them with the graph files of `dir`.
pub fn assemble(dir: &Path, outcomes: &[TaskOutcome], schema: &ScoringSchema, filter_tools: bool) -> Result<Manifest> {
    let files = list_graph_dir(dir)?;
    let task_names: Vec<String> = files.iter().map(|(t, _)| t.clone()).collect();
    let data = assemble_dataset(&task_names, outcomes, schema, filter_tools)?;
    for (task, tool) in &data.missing {
        log::warn!("missing outcome for task {task}, tool {tool}; scored as UNKNOWN");
    }
    if !data.excluded.is_empty() {
        log::info!("excluded tools without a correct outcome: {}", data.excluded.join(", "));
    }
    let file_of: std::collections::BTreeMap<&str, &str> = files.iter().map(|(t, f)| (t.as_str(), f.as_str())).collect();
    Ok(Manifest {
        graphs: dir.to_owned(),
        tools: data.tools.names().to_vec(),
        excluded_tools: data.excluded,
        tasks: data
            .tasks
            .iter()
            .zip(&data.rankings)
            .map(|(t, r)| ManifestTask { task: t.clone(), file: file_of[t.as_str()].to_string(), ranking: r.positions().to_vec() })
            .collect(),
    })
}

/// Write `manifest` to `path`, storing the graph directory relative to the
/// manifest when it lies below it.
pub fn save_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut m = manifest.clone();
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if let (Ok(dir), Ok(base)) = (m.graphs.canonicalize(), base.canonicalize()) {
        m.graphs = match dir.strip_prefix(&base) {
            Ok(rel) if rel.as_os_str().is_empty() => PathBuf::from("."),
            Ok(rel) => rel.to_owned(),
            Err(_) => dir,
        };
    }
    let text = serde_json::to_string_pretty(&m)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_manifest(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::from(e).at(path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    manifest_to_dataset(&manifest, &base.join(&manifest.graphs)).map_err(|e| e.at(path))
}

pub fn manifest_to_dataset(manifest: &Manifest, graph_dir: &Path) -> Result<Dataset> {
    let tools = ToolSet::new(manifest.tools.clone())?;
    let mut data = Dataset { tasks: Vec::new(), graphs: Vec::new(), rankings: Vec::new(), tools };
    for t in &manifest.tasks {
        let ranking = Ranking::from_positions(t.ranking.clone())?;
        if ranking.len() != data.tools.len() {
            return Err(Error::Format(format!("task {} ranks {} tools, expected {}", t.task, ranking.len(), data.tools.len())));
        }
        data.graphs.push(load_any_graph(&graph_dir.join(&t.file))?);
        data.tasks.push(t.task.clone());
        data.rankings.push(ranking);
    }
    if data.is_empty() {
        return Err(Error::Format("dataset has no tasks".into()));
    }
    Ok(data)
}
