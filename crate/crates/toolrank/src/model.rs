//! Trained ensembles on disk.
//!
//! A model directory holds `manifest.json` (tool order, kernel, SVM settings,
//! training tasks), one `kernel_<k>.json` per kernel component with its
//! compression table and training histograms, and one `pair_<i>_<j>.json` per
//! pairwise model. Everything needed to rank a new program is in the
//! directory.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toolrank_core::ranking::{pairs, Prediction};
use toolrank_core::svm::PairwiseModel;
use toolrank_core::wl::WlFeatures;
use toolrank_core::{CompressionTable, KernelConfig, RpcEnsemble, SvmConfig, ToolSet, VerificationGraph};

use crate::kernel::{Component, FittedKernel};
use crate::{Error, Result};

const FORMAT: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: u32,
    vocabulary: u32,
    tools: Vec<String>,
    kernel: String,
    components: Vec<ComponentRecord>,
    svm: SvmConfig,
    tasks: Vec<String>,
    pairs: Vec<PairRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentRecord {
    weight: f64,
    edges: String,
    depth: u32,
    iterations: u32,
    file: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairRecord {
    i: usize,
    j: usize,
    file: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentFile {
    table: Vec<String>,
    features: Vec<WlFeatures>,
}

/// An ensemble together with the kernel state needed to compute kernel rows
/// for unseen graphs.
#[derive(Debug, Clone)]
pub struct RankingModel {
    pub kernel: FittedKernel,
    pub ensemble: RpcEnsemble,
    pub svm: SvmConfig,
    pub tasks: Vec<String>,
}

impl RankingModel {
    pub fn predict(&self, g: &VerificationGraph) -> Result<Prediction> {
        Ok(self.ensemble.predict(&self.kernel.row(g))?)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut components = Vec::new();
        for (k, c) in self.kernel.components.iter().enumerate() {
            let file = format!("kernel_{k}.json");
            let body = ComponentFile { table: c.table.keys().to_vec(), features: c.features.clone() };
            write_json(&dir.join(&file), &body)?;
            components.push(ComponentRecord {
                weight: c.weight,
                edges: c.config.selector.to_string(),
                depth: c.config.depth,
                iterations: c.config.iterations,
                file,
            });
        }
        let mut pair_records = Vec::new();
        for ((i, j), m) in pairs(self.ensemble.tools().len()).zip(self.ensemble.models()) {
            let file = format!("pair_{i}_{j}.json");
            write_json(&dir.join(&file), m)?;
            pair_records.push(PairRecord { i, j, file });
        }
        let manifest = Manifest {
            format: FORMAT,
            vocabulary: crate::graph_json::FORMAT_VERSION,
            tools: self.ensemble.tools().names().to_vec(),
            kernel: self.ensemble.kernel().to_string(),
            components,
            svm: self.svm,
            tasks: self.tasks.clone(),
            pairs: pair_records,
        };
        write_json(&dir.join("manifest.json"), &manifest)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
        if manifest.format != FORMAT || manifest.vocabulary != crate::graph_json::FORMAT_VERSION {
            return Err(Error::Format(format!(
                "model format {} / vocabulary {} is not supported by this build",
                manifest.format, manifest.vocabulary
            )));
        }
        let mut components = Vec::new();
        for c in &manifest.components {
            let path = dir.join(&c.file);
            let body: ComponentFile = read_json(&path)?;
            if body.features.len() != manifest.tasks.len() {
                return Err(Error::Format(format!("{} has {} histograms for {} tasks", c.file, body.features.len(), manifest.tasks.len())));
            }
            components.push(Component {
                weight: c.weight,
                config: KernelConfig::new(c.edges.parse()?, c.depth, c.iterations),
                table: CompressionTable::from_keys(body.table).map_err(|e| Error::from(e).at(&path))?,
                features: body.features,
            });
        }
        let kernel = FittedKernel { components };
        if kernel.fingerprint() != manifest.kernel {
            return Err(Error::Format(format!("kernel components describe {} but manifest says {}", kernel.fingerprint(), manifest.kernel)));
        }
        let tools = ToolSet::new(manifest.tools)?;
        let mut models: Vec<PairwiseModel> = Vec::new();
        for ((i, j), rec) in pairs(tools.len()).zip(&manifest.pairs) {
            if (rec.i, rec.j) != (i, j) {
                return Err(Error::Format(format!("pair ({}, {}) listed where ({i}, {j}) was expected", rec.i, rec.j)));
            }
            let m: PairwiseModel = read_json(&dir.join(&rec.file))?;
            if let Some(&s) = m.support.iter().find(|&&s| s >= manifest.tasks.len()) {
                return Err(Error::Format(format!("{} refers to training instance {s}, but only {} exist", rec.file, manifest.tasks.len())));
            }
            models.push(m);
        }
        let ensemble = RpcEnsemble::from_models(tools, models, manifest.kernel)?;
        Ok(RankingModel { kernel, ensemble, svm: manifest.svm, tasks: manifest.tasks })
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::from(e).at(path))
}
