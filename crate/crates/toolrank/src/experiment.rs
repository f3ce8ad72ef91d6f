//! k-fold cross-validation of RPC against the default predictor.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use toolrank_core::ranking::{check_training_set, default_predictor, pair_dataset, pairs, spearman};
use toolrank_core::svm;
use toolrank_core::wl::KernelSpec;
use toolrank_core::{GramMatrix, Ranking, RpcEnsemble, SvmConfig, ToolSet};

use crate::dataset::Dataset;
use crate::kernel::FittedKernel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    pub svm: SvmConfig,
    pub folds: usize,
    pub seed: u64,
    pub repeats: usize,
}

/// Train all pairwise models of an ensemble in parallel.
pub fn train_ensemble(
    gram: &GramMatrix,
    instances: &[usize],
    rankings: &[Ranking],
    tools: &ToolSet,
    cfg: &SvmConfig,
) -> Result<RpcEnsemble> {
    check_training_set(instances, rankings, tools)?;
    let all: Vec<(usize, usize)> = pairs(tools.len()).collect();
    let models = all
        .par_iter()
        .map(|&(i, j)| svm::train(gram, &pair_dataset(instances, rankings, i, j), cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RpcEnsemble::from_models(tools.clone(), models, gram.fingerprint().into())?)
}

/// Shuffle `0..n` and deal the result round-robin into `k` folds; each fold
/// is sorted ascending.
pub fn assign_folds(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut folds = vec![Vec::new(); k];
    for (pos, &i) in order.iter().enumerate() {
        folds[pos % k].push(i);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    folds
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub rpc_spearman: f64,
    pub default_spearman: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub repeat: usize,
    pub folds: Vec<FoldReport>,
    pub rpc_mean: f64,
    pub default_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation across folds of all repeats.
    pub std: f64,
    /// Sample standard deviation of the per-repeat means; present with more
    /// than one repeat.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub kernel: String,
    pub c: f64,
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub instances: usize,
    pub tools: Vec<String>,
    pub runs: Vec<RunReport>,
    pub rpc: Summary,
    pub default: Summary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram_seconds: Option<f64>,
}

impl CvReport {
    /// Drop wall-clock measurements, leaving a report that depends only on
    /// the inputs and the seed.
    pub fn without_timings(mut self) -> Self {
        self.gram_seconds = None;
        for f in self.runs.iter_mut().flat_map(|r| r.folds.iter_mut()) {
            f.train_seconds = None;
            f.test_seconds = None;
        }
        self
    }

    /// Plain-text table of fold results.
    pub fn table(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "kernel {}  C={}  folds={}  repeats={}  seed={}", self.kernel, self.c, self.folds, self.repeats, self.seed);
        let _ = writeln!(s, "{:>6} {:>4} {:>5} {:>10} {:>10} {:>9} {:>9}", "repeat", "fold", "test", "rpc", "default", "train s", "test s");
        for r in &self.runs {
            for f in &r.folds {
                let secs = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
                let _ = writeln!(
                    s,
                    "{:>6} {:>4} {:>5} {:>10.4} {:>10.4} {:>9} {:>9}",
                    r.repeat,
                    f.fold,
                    f.test_size,
                    f.rpc_spearman,
                    f.default_spearman,
                    secs(f.train_seconds),
                    secs(f.test_seconds)
                );
            }
        }
        let _ = writeln!(s, "rpc     {:.4} +- {:.4}", self.rpc.mean, self.rpc.std);
        let _ = writeln!(s, "default {:.4} +- {:.4}", self.default.mean, self.default.std);
        s
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn summarize(per_fold: &[f64], per_repeat: &[f64]) -> Summary {
    Summary {
        mean: mean(per_fold),
        std: sample_std(per_fold),
        repeat_std: (per_repeat.len() > 1).then(|| sample_std(per_repeat)),
    }
}

fn run_fold(gram: &GramMatrix, rankings: &[Ranking], tools: &ToolSet, cfg: &SvmConfig, fold: usize, test: &[usize]) -> Result<FoldReport> {
    let train: Vec<usize> = (0..rankings.len()).filter(|i| test.binary_search(i).is_err()).collect();
    let train_rankings: Vec<Ranking> = train.iter().map(|&i| rankings[i].clone()).collect();

    let start = Instant::now();
    let ensemble = train_ensemble(gram, &train, &train_rankings, tools, cfg)?;
    let train_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let mut rpc = Vec::with_capacity(test.len());
    for &t in test {
        let p = ensemble.predict(gram.row(t))?;
        rpc.push(spearman(&p.ranking, &rankings[t])?);
    }
    let test_seconds = start.elapsed().as_secs_f64();

    let consensus = default_predictor(&train_rankings)?;
    let default = test.iter().map(|&t| spearman(&consensus, &rankings[t])).collect::<Result<Vec<_>, _>>()?;
    Ok(FoldReport {
        fold,
        train_size: train.len(),
        test_size: test.len(),
        rpc_spearman: mean(&rpc),
        default_spearman: mean(&default),
        train_seconds: Some(train_seconds),
        test_seconds: Some(test_seconds),
    })
}

/// Cross-validate on a precomputed Gram matrix whose rows follow `rankings`.
/// Folds run concurrently; results are collected in fold order, so the
/// report is deterministic apart from timings.
pub fn cross_validate(gram: &GramMatrix, rankings: &[Ranking], tools: &ToolSet, cfg: &ExperimentConfig) -> Result<CvReport> {
    let n = rankings.len();
    if gram.size() != n {
        return Err(Error::Config(format!("Gram matrix has {} rows for {n} rankings", gram.size())));
    }
    if cfg.folds < 2 {
        return Err(Error::Config(format!("at least 2 folds are required, got {}", cfg.folds)));
    }
    if n < cfg.folds {
        return Err(Error::Config(format!("{n} instances cannot fill {} folds", cfg.folds)));
    }
    if cfg.repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut runs = Vec::with_capacity(cfg.repeats);
    for repeat in 0..cfg.repeats {
        let folds = assign_folds(n, cfg.folds, &mut rng);
        let reports = folds
            .par_iter()
            .enumerate()
            .map(|(f, test)| run_fold(gram, rankings, tools, &cfg.svm, f, test))
            .collect::<Result<Vec<_>>>()?;
        let rpc: Vec<f64> = reports.iter().map(|f| f.rpc_spearman).collect();
        let default: Vec<f64> = reports.iter().map(|f| f.default_spearman).collect();
        runs.push(RunReport { repeat, rpc_mean: mean(&rpc), default_mean: mean(&default), folds: reports });
    }
    let all = |get: fn(&FoldReport) -> f64| -> Vec<f64> { runs.iter().flat_map(|r| r.folds.iter().map(get)).collect() };
    let rpc_repeats: Vec<f64> = runs.iter().map(|r| r.rpc_mean).collect();
    let default_repeats: Vec<f64> = runs.iter().map(|r| r.default_mean).collect();
    Ok(CvReport {
        kernel: gram.fingerprint().into(),
        c: cfg.svm.c,
        folds: cfg.folds,
        repeats: cfg.repeats,
        seed: cfg.seed,
        instances: n,
        tools: tools.names().to_vec(),
        rpc: summarize(&all(|f| f.rpc_spearman), &rpc_repeats),
        default: summarize(&all(|f| f.default_spearman), &default_repeats),
        runs,
        gram_seconds: None,
    })
}

/// Compute the Gram matrix of `data` under `cfg.kernel`, then
/// cross-validate.
pub fn cross_validate_dataset(data: &Dataset, cfg: &ExperimentConfig) -> Result<CvReport> {
    let start = Instant::now();
    let gram = FittedKernel::fit(&data.graphs, &cfg.kernel).gram();
    let seconds = start.elapsed().as_secs_f64();
    let mut report = cross_validate(&gram, &data.rankings, &data.tools, cfg)?;
    report.gram_seconds = Some(seconds);
    Ok(report)
}

/// Consensus ranking of `rankings` and its mean Spearman correlation to them.
pub fn baseline(rankings: &[Ranking]) -> Result<(Ranking, f64)> {
    let r = default_predictor(rankings)?;
    let s = rankings.iter().map(|q| spearman(&r, q)).collect::<Result<Vec<_>, _>>()?;
    Ok((r, mean(&s)))
}
