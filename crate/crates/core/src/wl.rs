//! Weisfeiler-Lehman relabelling and the verification graph kernel.
//!
//! Each refinement round gives node `n` the label
//! `z(label(n) . sort[z(label(t(e)) . type(e) . cond(e)) | e in sel(n)])`,
//! where `z` is an injective [`CompressionTable`] shared by every graph of one
//! Gram computation. The kernel sums, over rounds `0..=m`, the number of
//! equally labelled node pairs whose AST depth is at most `d`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::graph::{NeighborSelector, VerificationGraph};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("Gram matrix {index} has size {got}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, got: usize },
    #[error("kernel weights must be positive and finite, got {0}")]
    BadWeight(f64),
    #[error("at least one Gram matrix is required")]
    Empty,
    #[error("matrix data has {got} entries, expected {expected}")]
    BadShape { expected: usize, got: usize },
    #[error("compression table key `{0}` appears twice")]
    DuplicateKey(String),
}

/// Injective map from label sequences to integer labels.
///
/// Keys are tagged strings over integer tokens, so distinct sequences can
/// never collide: `L:<name>` for vocabulary labels, `E:<target>:<kind>:<T|F>`
/// for edge triples and `R:<own>:<a>,<b>,...` for refined labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompressionTable {
    ids: BTreeMap<String, u32>,
    keys: Vec<String>,
}

impl CompressionTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuild a persisted table; `keys[i]` gets id `i`.
    pub fn from_keys(keys: Vec<String>) -> Result<Self, KernelError> {
        let mut ids = BTreeMap::new();
        for (i, k) in keys.iter().enumerate() {
            if ids.insert(k.clone(), i as u32).is_some() {
                return Err(KernelError::DuplicateKey(k.clone()));
            }
        }
        Ok(CompressionTable { ids, keys })
    }

    /// Id of `key`, assigning the next fresh id if it is new.
    pub fn intern(&mut self, key: &str) -> u32 {
        if let Some(&id) = self.ids.get(key) {
            return id;
        }
        let id = self.keys.len() as u32;
        self.ids.insert(key.to_string(), id);
        self.keys.push(key.to_string());
        id
    }

    pub fn get(&self, key: &str) -> Option<u32> {
        self.ids.get(key).copied()
    }

    pub fn key(&self, id: u32) -> Option<&str> {
        self.keys.get(id as usize).map(String::as_str)
    }

    /// Keys in id order.
    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Neighbor selector, AST depth bound `d` and iteration bound `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KernelConfig {
    pub selector: NeighborSelector,
    pub depth: u32,
    pub iterations: u32,
}

impl KernelConfig {
    /// Repository defaults: `d = 5`, `m = 2`.
    pub const DEFAULT_DEPTH: u32 = 5;
    pub const DEFAULT_ITERATIONS: u32 = 2;

    pub fn new(selector: NeighborSelector, depth: u32, iterations: u32) -> Self {
        KernelConfig { selector, depth, iterations }
    }

    /// Canonical text form, e.g. `wl(edges=CF,CD;d=5;m=2)`.
    pub fn fingerprint(&self) -> String {
        alloc::format!("wl(edges={};d={};m={})", self.selector, self.depth, self.iterations)
    }
}

/// Weighted sum of kernels. A single component with weight 1 is a plain
/// kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub components: Vec<(f64, KernelConfig)>,
}

impl KernelSpec {
    pub fn single(cfg: KernelConfig) -> Self {
        KernelSpec { components: alloc::vec![(1.0, cfg)] }
    }

    pub fn weighted(components: Vec<(f64, KernelConfig)>) -> Result<Self, KernelError> {
        if components.is_empty() {
            return Err(KernelError::Empty);
        }
        if let Some(&(w, _)) = components.iter().find(|(w, _)| !(w.is_finite() && *w > 0.0)) {
            return Err(KernelError::BadWeight(w));
        }
        Ok(KernelSpec { components })
    }

    pub fn fingerprint(&self) -> String {
        match self.components.as_slice() {
            [(w, cfg)] if *w == 1.0 => cfg.fingerprint(),
            parts => {
                let mut s = String::new();
                for (i, (w, cfg)) in parts.iter().enumerate() {
                    if i > 0 {
                        s.push_str(" + ");
                    }
                    let _ = write!(s, "{w:?}*{}", cfg.fingerprint());
                }
                s
            }
        }
    }
}

/// A graph together with its current integer node labelling.
#[derive(Debug, Clone)]
pub struct RelabeledGraph<'g> {
    graph: &'g VerificationGraph,
    labels: Vec<u32>,
}

impl<'g> RelabeledGraph<'g> {
    /// Round 0: vocabulary labels mapped through `z`.
    pub fn initial(graph: &'g VerificationGraph, z: &mut CompressionTable) -> Self {
        let mut key = String::new();
        let labels = graph
            .nodes()
            .iter()
            .map(|n| {
                key.clear();
                key.push_str("L:");
                key.push_str(n.label.name());
                z.intern(&key)
            })
            .collect();
        RelabeledGraph { graph, labels }
    }

    pub fn graph(&self) -> &'g VerificationGraph {
        self.graph
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// One synchronous refinement round; all new labels are computed from the
    /// labelling before the round.
    pub fn relabel_step(&self, sel: NeighborSelector, z: &mut CompressionTable) -> Self {
        let g = self.graph;
        let mut key = String::new();
        let mut aug = Vec::new();
        let labels = (0..g.node_count())
            .map(|n| {
                aug.clear();
                for e in g.neighbors_iter(n, sel) {
                    let e = &g.edges()[e as usize];
                    key.clear();
                    let cond = if e.cond { 'T' } else { 'F' };
                    let _ = write!(key, "E:{}:{}:{}", self.labels[e.dst as usize], e.kind, cond);
                    aug.push(z.intern(&key));
                }
                aug.sort_unstable();
                key.clear();
                let _ = write!(key, "R:{}:", self.labels[n]);
                for (i, a) in aug.iter().enumerate() {
                    if i > 0 {
                        key.push(',');
                    }
                    let _ = write!(key, "{a}");
                }
                z.intern(&key)
            })
            .collect();
        RelabeledGraph { graph: g, labels }
    }

    /// Sorted `(label, count)` pairs over nodes with depth at most `depth`.
    pub fn histogram(&self, depth: u32) -> Vec<(u32, u64)> {
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for (node, &label) in self.graph.nodes().iter().zip(&self.labels) {
            if node.depth <= depth {
                *counts.entry(label).or_default() += 1;
            }
        }
        counts.into_iter().collect()
    }
}

/// Depth-restricted label histograms of one graph, one per round `0..=m`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WlFeatures {
    pub rounds: Vec<Vec<(u32, u64)>>,
}

impl WlFeatures {
    pub fn compute(g: &VerificationGraph, cfg: &KernelConfig, z: &mut CompressionTable) -> Self {
        let mut current = RelabeledGraph::initial(g, z);
        let mut rounds = Vec::with_capacity(cfg.iterations as usize + 1);
        rounds.push(current.histogram(cfg.depth));
        for _ in 0..cfg.iterations {
            current = current.relabel_step(cfg.selector, z);
            rounds.push(current.histogram(cfg.depth));
        }
        WlFeatures { rounds }
    }

    /// Kernel value: sum over rounds of histogram inner products.
    pub fn dot(&self, other: &WlFeatures) -> u64 {
        self.rounds.iter().zip(&other.rounds).map(|(a, b)| sparse_dot(a, b)).sum()
    }
}

fn sparse_dot(a: &[(u32, u64)], b: &[(u32, u64)]) -> u64 {
    let (mut i, mut j, mut acc) = (0, 0, 0u64);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// The verification graph kernel `k^(d,m)` for one pair, exact.
pub fn wl_kernel(
    g1: &VerificationGraph,
    g2: &VerificationGraph,
    cfg: &KernelConfig,
    z: &mut CompressionTable,
) -> u64 {
    let f1 = WlFeatures::compute(g1, cfg, z);
    let f2 = WlFeatures::compute(g2, cfg, z);
    f1.dot(&f2)
}

/// Symmetric kernel matrix over an ordered list of instances, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    size: usize,
    data: Vec<f64>,
    fingerprint: String,
}

impl GramMatrix {
    pub fn from_rows(size: usize, data: Vec<f64>, fingerprint: String) -> Result<Self, KernelError> {
        if data.len() != size * size {
            return Err(KernelError::BadShape { expected: size * size, got: data.len() });
        }
        Ok(GramMatrix { size, data, fingerprint })
    }

    /// Gram matrix of precomputed features; only the upper triangle is
    /// evaluated.
    pub fn from_features(features: &[WlFeatures], fingerprint: String) -> Self {
        let n = features.len();
        let mut data = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = features[i].dot(&features[j]) as f64;
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        GramMatrix { size: n, data, fingerprint }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.size..(i + 1) * self.size]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.size {
            for j in i + 1..self.size {
                worst = worst.max(libm::fabs(self.get(i, j) - self.get(j, i)));
            }
        }
        worst
    }

    /// Restriction to `indices` (rows and columns, in that order).
    pub fn submatrix(&self, indices: &[usize]) -> GramMatrix {
        let data = indices
            .iter()
            .flat_map(|&i| indices.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        GramMatrix { size: indices.len(), data, fingerprint: self.fingerprint.clone() }
    }
}

/// Gram matrix of `graphs` under `cfg`, with one compression table shared by
/// all graphs. Returns the table for later extension to new instances.
pub fn gram(graphs: &[VerificationGraph], cfg: &KernelConfig) -> (GramMatrix, CompressionTable) {
    let mut z = CompressionTable::new();
    let features: Vec<WlFeatures> = graphs.iter().map(|g| WlFeatures::compute(g, cfg, &mut z)).collect();
    (GramMatrix::from_features(&features, cfg.fingerprint()), z)
}

/// Entrywise weighted sum of Gram matrices over the same task order.
pub fn combine(grams: &[(f64, &GramMatrix)]) -> Result<GramMatrix, KernelError> {
    let (_, first) = grams.first().ok_or(KernelError::Empty)?;
    let n = first.size;
    let mut data = alloc::vec![0.0; n * n];
    let mut fingerprint = String::new();
    for (index, &(w, g)) in grams.iter().enumerate() {
        if !(w.is_finite() && w > 0.0) {
            return Err(KernelError::BadWeight(w));
        }
        if g.size != n {
            return Err(KernelError::DimensionMismatch { index, expected: n, got: g.size });
        }
        data.iter_mut().zip(&g.data).for_each(|(acc, v)| *acc += w * v);
        if index > 0 {
            fingerprint.push_str(" + ");
        }
        let _ = write!(fingerprint, "{w:?}*{}", g.fingerprint);
    }
    if let [(w, g)] = grams {
        if *w == 1.0 {
            fingerprint = g.fingerprint.clone();
        }
    }
    Ok(GramMatrix { size: n, data, fingerprint })
}
