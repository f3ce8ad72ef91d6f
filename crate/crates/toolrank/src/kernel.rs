//! Kernel computation over a task list, parallel over Gram rows.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use toolrank_core::wl::{combine, KernelSpec, WlFeatures};
use toolrank_core::{CompressionTable, GramMatrix, KernelConfig, VerificationGraph};

use crate::{Error, Result};

/// One kernel component after relabelling the training graphs: the shared
/// compression table and the per-graph histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub config: KernelConfig,
    pub table: CompressionTable,
    pub features: Vec<WlFeatures>,
}

/// A (possibly weighted) kernel fitted to an ordered list of graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedKernel {
    pub components: Vec<Component>,
}

impl FittedKernel {
    /// Relabel `graphs` once per component. Components are independent and
    /// run in parallel; within a component the table is filled in task order,
    /// so ids are deterministic.
    pub fn fit(graphs: &[VerificationGraph], spec: &KernelSpec) -> Self {
        let components = spec
            .components
            .par_iter()
            .map(|&(weight, config)| {
                let mut table = CompressionTable::new();
                let features = graphs.iter().map(|g| WlFeatures::compute(g, &config, &mut table)).collect();
                Component { weight, config, table, features }
            })
            .collect();
        FittedKernel { components }
    }

    pub fn spec(&self) -> KernelSpec {
        KernelSpec { components: self.components.iter().map(|c| (c.weight, c.config)).collect() }
    }

    pub fn fingerprint(&self) -> String {
        self.spec().fingerprint()
    }

    pub fn len(&self) -> usize {
        self.components.first().map_or(0, |c| c.features.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gram(&self) -> GramMatrix {
        let parts: Vec<GramMatrix> =
            self.components.iter().map(|c| parallel_gram(&c.features, c.config.fingerprint())).collect();
        let weighted: Vec<(f64, &GramMatrix)> = self.components.iter().map(|c| c.weight).zip(&parts).collect();
        combine(&weighted).expect("components share the task list and have valid weights")
    }

    /// Kernel values between a new graph and every fitted graph, summed over
    /// components in the same order as [`FittedKernel::gram`].
    pub fn row(&self, g: &VerificationGraph) -> Vec<f64> {
        let mut row = vec![0.0; self.len()];
        for c in &self.components {
            let mut table = c.table.clone();
            let f = WlFeatures::compute(g, &c.config, &mut table);
            row.iter_mut().zip(&c.features).for_each(|(acc, t)| *acc += c.weight * t.dot(&f) as f64);
        }
        row
    }
}

/// Gram matrix of precomputed features; rows are computed in parallel.
pub fn parallel_gram(features: &[WlFeatures], fingerprint: String) -> GramMatrix {
    let n = features.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| features[i].dot(&features[j]) as f64).collect())
        .collect();
    let mut data = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            data[i * n + i + off] = v;
            data[(i + off) * n + i] = v;
        }
    }
    GramMatrix::from_rows(n, data, fingerprint).expect("square by construction")
}

/// Gram file: `{"tasks", "kernel", "matrix", "tables"}`, with one
/// compression table (keys in id order) per kernel component.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GramFile {
    tasks: Vec<String>,
    kernel: String,
    matrix: Vec<Vec<f64>>,
    tables: Vec<Vec<String>>,
}

pub fn save_gram(path: &Path, tasks: &[String], kernel: &FittedKernel, gram: &GramMatrix) -> Result<()> {
    let file = GramFile {
        tasks: tasks.to_vec(),
        kernel: gram.fingerprint().into(),
        matrix: (0..gram.size()).map(|i| gram.row(i).to_vec()).collect(),
        tables: kernel.components.iter().map(|c| c.table.keys().to_vec()).collect(),
    };
    let text = serde_json::to_string(&file)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Read a Gram file, returning its task order and matrix.
pub fn load_gram(path: &Path) -> Result<(Vec<String>, GramMatrix)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: GramFile = serde_json::from_str(&text).map_err(|e| Error::from(e).at(path))?;
    let n = file.tasks.len();
    if file.matrix.len() != n || file.matrix.iter().any(|r| r.len() != n) {
        return Err(Error::Format(format!("matrix is not {n}x{n}")).at(path));
    }
    let gram = GramMatrix::from_rows(n, file.matrix.concat(), file.kernel)?;
    if gram.max_asymmetry() > 0.0 {
        return Err(Error::Format("matrix is not symmetric".into()).at(path));
    }
    Ok((file.tasks, gram))
}
