//! Label ranking: permutations over a fixed tool set, Spearman correlation,
//! ranking by pairwise comparison and the default (consensus) predictor.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::svm::{self, BinaryDataset, PairwiseModel, SvmConfig, SvmError};
use crate::wl::GramMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RankingError {
    #[error("at least two tools are required, got {0}")]
    TooFewTools(usize),
    #[error("duplicate tool name {0:?}")]
    DuplicateTool(String),
    #[error("positions {0:?} are not a permutation of 1..K")]
    NotAPermutation(Vec<usize>),
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no training rankings")]
    NoRankings,
    #[error("ensemble has {got} pairwise models, expected {expected}")]
    IncompleteEnsemble { expected: usize, got: usize },
    #[error(transparent)]
    Svm(#[from] SvmError),
}

/// Ordered set of `K >= 2` distinct tool names. The order fixes the label
/// indices `0..K`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<String>", into = "Vec<String>"))]
pub struct ToolSet(Vec<String>);

impl ToolSet {
    pub fn new(names: Vec<String>) -> Result<Self, RankingError> {
        if names.len() < 2 {
            return Err(RankingError::TooFewTools(names.len()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(RankingError::DuplicateTool(n.clone()));
            }
        }
        Ok(ToolSet(names))
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }
}

impl TryFrom<Vec<String>> for ToolSet {
    type Error = RankingError;

    fn try_from(names: Vec<String>) -> Result<Self, Self::Error> {
        ToolSet::new(names)
    }
}

impl From<ToolSet> for Vec<String> {
    fn from(t: ToolSet) -> Self {
        t.0
    }
}

/// A permutation stored as positions: `position(i)` is the 1-based rank of
/// tool `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<usize>", into = "Vec<usize>"))]
pub struct Ranking(Vec<usize>);

impl Ranking {
    pub fn from_positions(positions: Vec<usize>) -> Result<Self, RankingError> {
        let k = positions.len();
        let mut seen = alloc::vec![false; k];
        for &p in &positions {
            if p == 0 || p > k || core::mem::replace(&mut seen[p - 1], true) {
                return Err(RankingError::NotAPermutation(positions));
            }
        }
        Ok(Ranking(positions))
    }

    /// Build from tool indices listed best first.
    pub fn from_order(order: &[usize]) -> Result<Self, RankingError> {
        let k = order.len();
        let mut positions = alloc::vec![0; k];
        for (rank, &tool) in order.iter().enumerate() {
            if tool >= k || positions[tool] != 0 {
                return Err(RankingError::NotAPermutation(order.iter().map(|t| t + 1).collect()));
            }
            positions[tool] = rank + 1;
        }
        Ok(Ranking(positions))
    }

    pub fn identity(k: usize) -> Self {
        Ranking((1..=k).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn position(&self, tool: usize) -> usize {
        self.0[tool]
    }

    /// Tool indices, best first.
    pub fn order(&self) -> Vec<usize> {
        let mut order = alloc::vec![0; self.0.len()];
        for (tool, &p) in self.0.iter().enumerate() {
            order[p - 1] = tool;
        }
        order
    }

    /// True if tool `i` is ranked before tool `j`.
    pub fn prefers(&self, i: usize, j: usize) -> bool {
        self.0[i] < self.0[j]
    }

    pub fn reversed(&self) -> Self {
        let k = self.0.len();
        Ranking(self.0.iter().map(|p| k + 1 - p).collect())
    }

    /// Relabel tools: tool `i` of `self` becomes tool `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let mut out = alloc::vec![0; self.0.len()];
        for (i, &p) in self.0.iter().enumerate() {
            out[perm[i]] = p;
        }
        Ranking(out)
    }
}

impl TryFrom<Vec<usize>> for Ranking {
    type Error = RankingError;

    fn try_from(p: Vec<usize>) -> Result<Self, Self::Error> {
        Ranking::from_positions(p)
    }
}

impl From<Ranking> for Vec<usize> {
    fn from(r: Ranking) -> Self {
        r.0
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str(")")
    }
}

/// Spearman rank correlation `1 - 6 sum (p_i - q_i)^2 / (K (K^2 - 1))`.
pub fn spearman(p: &Ranking, q: &Ranking) -> Result<f64, RankingError> {
    let k = p.len();
    if q.len() != k {
        return Err(RankingError::LengthMismatch { expected: k, got: q.len() });
    }
    if k < 2 {
        return Err(RankingError::TooFewTools(k));
    }
    let d2: usize = p.0.iter().zip(&q.0).map(|(&a, &b)| a.abs_diff(b).pow(2)).sum();
    let k = k as f64;
    Ok(1.0 - 6.0 * d2 as f64 / (k * (k * k - 1.0)))
}

/// Spearman loss `1 - S`.
pub fn spearman_loss(p: &Ranking, q: &Ranking) -> Result<f64, RankingError> {
    spearman(p, q).map(|s| 1.0 - s)
}

/// Pairwise preference probabilities `M_ij`, with `M_ji = 1 - M_ij`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PreferenceMatrix {
    k: usize,
    m: Vec<f64>,
}

impl PreferenceMatrix {
    /// Fill from `p(i, j)` for every `i < j`.
    pub fn from_upper(k: usize, mut p: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = alloc::vec![0.0; k * k];
        for i in 0..k {
            for j in i + 1..k {
                let v = p(i, j);
                m[i * k + j] = v;
                m[j * k + i] = 1.0 - v;
            }
        }
        PreferenceMatrix { k, m }
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    /// `M_ij`; the diagonal is 0.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.k + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.m.chunks(self.k.max(1))
    }

    /// Weighted-voting scores `S_i = sum_{j != i} M_ij`.
    pub fn scores(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum()).collect()
    }
}

/// Sort tools by descending score, ties by ascending index.
pub fn rank_by_scores(scores: &[f64]) -> Ranking {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ranking::from_order(&order).expect("sorted indices form a permutation")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub ranking: Ranking,
    pub scores: Vec<f64>,
    pub probabilities: PreferenceMatrix,
}

/// Aggregate pairwise probabilities by weighted voting.
pub fn vote(probabilities: PreferenceMatrix) -> Prediction {
    let scores = probabilities.scores();
    Prediction { ranking: rank_by_scores(&scores), scores, probabilities }
}

/// Number of pairwise models for `k` tools.
pub fn pair_count(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// Pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn pairs(k: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..k).flat_map(move |i| (i + 1..k).map(move |j| (i, j)))
}

/// Binary dataset for pair `(i, j)`: instance `instances[n]` is positive iff
/// `rankings[n]` ranks `i` before `j`.
pub fn pair_dataset(instances: &[usize], rankings: &[Ranking], i: usize, j: usize) -> BinaryDataset {
    BinaryDataset {
        indices: instances.to_vec(),
        labels: rankings.iter().map(|r| if r.prefers(i, j) { 1 } else { -1 }).collect(),
    }
}

/// One pairwise model per tool pair `(i, j)`, `i < j`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RpcEnsemble {
    tools: ToolSet,
    /// Models in [`pairs`] order.
    models: Vec<PairwiseModel>,
    kernel: String,
}

impl RpcEnsemble {
    pub fn from_models(tools: ToolSet, models: Vec<PairwiseModel>, kernel: String) -> Result<Self, RankingError> {
        let expected = pair_count(tools.len());
        if models.len() != expected {
            return Err(RankingError::IncompleteEnsemble { expected, got: models.len() });
        }
        Ok(RpcEnsemble { tools, models, kernel })
    }

    /// Train sequentially. `instances[n]` is the Gram index of the task whose
    /// true ranking is `rankings[n]`.
    pub fn train(
        gram: &GramMatrix,
        instances: &[usize],
        rankings: &[Ranking],
        tools: ToolSet,
        cfg: &SvmConfig,
    ) -> Result<Self, RankingError> {
        check_training_set(instances, rankings, &tools)?;
        let models = pairs(tools.len())
            .map(|(i, j)| svm::train(gram, &pair_dataset(instances, rankings, i, j), cfg))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_models(tools, models, gram.fingerprint().into())
    }

    pub fn tools(&self) -> &ToolSet {
        &self.tools
    }

    pub fn models(&self) -> &[PairwiseModel] {
        &self.models
    }

    /// Model for pair `(i, j)`, `i < j`.
    pub fn model(&self, i: usize, j: usize) -> &PairwiseModel {
        let k = self.tools.len();
        debug_assert!(i < j && j < k);
        let index = i * (2 * k - i - 1) / 2 + (j - i - 1);
        &self.models[index]
    }

    pub fn kernel(&self) -> &str {
        &self.kernel
    }

    /// Predict from `row[t] = K(x_t, x0)` over Gram indices `t`.
    pub fn predict(&self, row: &[f64]) -> Result<Prediction, RankingError> {
        let k = self.tools.len();
        let mut probs = Vec::with_capacity(self.models.len());
        for m in &self.models {
            probs.push(m.probability(row)?);
        }
        let mut next = probs.into_iter();
        Ok(vote(PreferenceMatrix::from_upper(k, |_, _| next.next().expect("one model per pair"))))
    }
}

/// Validate an RPC training set.
pub fn check_training_set(instances: &[usize], rankings: &[Ranking], tools: &ToolSet) -> Result<(), RankingError> {
    if rankings.is_empty() {
        return Err(RankingError::NoRankings);
    }
    if instances.len() != rankings.len() {
        return Err(RankingError::LengthMismatch { expected: instances.len(), got: rankings.len() });
    }
    if let Some(r) = rankings.iter().find(|r| r.len() != tools.len()) {
        return Err(RankingError::LengthMismatch { expected: tools.len(), got: r.len() });
    }
    Ok(())
}

/// Consensus ranking: tools sorted by summed position, ties by index. This
/// maximizes the summed Spearman correlation to the training rankings.
pub fn default_predictor(rankings: &[Ranking]) -> Result<Ranking, RankingError> {
    let k = rankings.first().ok_or(RankingError::NoRankings)?.len();
    let mut sums = alloc::vec![0usize; k];
    for r in rankings {
        if r.len() != k {
            return Err(RankingError::LengthMismatch { expected: k, got: r.len() });
        }
        sums.iter_mut().zip(&r.0).for_each(|(s, p)| *s += p);
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&t| (sums[t], t));
    Ranking::from_order(&order)
}
