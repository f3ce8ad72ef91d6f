//! Soft-margin SVM on a precomputed Gram matrix, with Platt scaling.
//!
//! The dual
//!
//! ```text
//! max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
//! s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! is solved by SMO: each step picks the maximal KKT-violating pair and solves
//! the two-variable subproblem analytically. The decision value of an instance
//! `x` is `f(x) = sum_i a_i y_i K(x_i, x) + b`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::wl::GramMatrix;

/// Curvature used when a pair's second derivative is not positive.
const TAU: f64 = 1e-12;
const JITTER: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SvmError {
    #[error("regularization C must be positive and finite, got {0}")]
    BadC(f64),
    #[error("training set is empty")]
    Empty,
    #[error("instance index {index} is outside the {size}x{size} Gram matrix")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("labels must be +1 or -1, got {0}")]
    BadLabel(i8),
    #[error("{indices} indices but {labels} labels")]
    LengthMismatch { indices: usize, labels: usize },
    #[error("kernel row has {got} entries but support index {needed} is required")]
    MissingKernelValue { needed: usize, got: usize },
    #[error("Platt scaling needs both classes")]
    SingleClass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SvmConfig {
    /// Regularization constant.
    pub c: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 1.0, tol: 1e-5, max_iter: 1_000_000 }
    }
}

/// Training instances (indices into a Gram matrix) with labels in {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BinaryDataset {
    pub indices: Vec<usize>,
    pub labels: Vec<i8>,
}

impl BinaryDataset {
    pub fn new(indices: Vec<usize>, labels: Vec<i8>) -> Result<Self, SvmError> {
        if indices.len() != labels.len() {
            return Err(SvmError::LengthMismatch { indices: indices.len(), labels: labels.len() });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
            return Err(SvmError::BadLabel(bad));
        }
        Ok(BinaryDataset { indices, labels })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The only class present, if the dataset is single-class.
    pub fn single_class(&self) -> Option<i8> {
        let first = *self.labels.first()?;
        self.labels.iter().all(|&y| y == first).then_some(first)
    }
}

/// Raw solution of the dual on a dense kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// Dual objective `sum a - 1/2 a'Qa` (to be maximized).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// A pair with negative curvature was found: the kernel is not PSD.
    pub indefinite: bool,
}

/// Solve the dual for an `n x n` row-major kernel matrix.
pub fn solve_dual(kernel: &[f64], labels: &[i8], cfg: &SvmConfig) -> Result<DualSolution, SvmError> {
    let n = labels.len();
    if !(cfg.c.is_finite() && cfg.c > 0.0) {
        return Err(SvmError::BadC(cfg.c));
    }
    if n == 0 {
        return Err(SvmError::Empty);
    }
    assert_eq!(kernel.len(), n * n, "kernel must be n x n");
    let c = cfg.c;
    let y: Vec<f64> = labels.iter().map(|&v| v as f64).collect();
    let k = |i: usize, j: usize| kernel[i * n + j];
    let scale = (0..n).map(|i| libm::fabs(k(i, i))).fold(1.0, f64::max);

    let mut alpha = alloc::vec![0.0; n];
    // Gradient of 1/2 a'Qa - e'a.
    let mut grad = alloc::vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let mut indefinite = false;

    while iterations < cfg.max_iter {
        // Maximal violating pair.
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if up && v > gmax {
                gmax = v;
                i = t;
            }
            if low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < cfg.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
        if quad < -1e-12 * scale {
            indefinite = true;
        }
        if quad <= 0.0 {
            quad = TAU;
        }
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(i, t) * di + y[j] * k(j, t) * dj);
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations without reaching tolerance {}", cfg.tol);
    }

    let bias = bias_from_gradient(&alpha, &grad, &y, c);
    let objective = -(0..n).map(|t| 0.5 * alpha[t] * (grad[t] - 1.0)).sum::<f64>();
    Ok(DualSolution { alphas: alpha, bias, objective, iterations, converged, indefinite })
}

/// `b` as the mean of `-y_i G_i` over free multipliers, or the midpoint of
/// the feasible interval when none are free.
fn bias_from_gradient(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 };
    -rho
}

/// Logistic calibration `p(f) = 1 / (1 + exp(a f + b))`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

impl Platt {
    /// Probability of the positive class, strictly inside (0, 1).
    pub fn apply(&self, decision: f64) -> f64 {
        let f = self.a * decision + self.b;
        let p = if f >= 0.0 {
            let e = libm::exp(-f);
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + libm::exp(f))
        };
        p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlattFit {
    pub platt: Platt,
    pub iterations: usize,
    pub converged: bool,
}

/// Regularized maximum-likelihood fit with prior-corrected targets, by Newton's
/// method with backtracking (at most 100 iterations).
pub fn platt_fit(decisions: &[f64], labels: &[i8]) -> Result<PlattFit, SvmError> {
    if decisions.len() != labels.len() {
        return Err(SvmError::LengthMismatch { indices: decisions.len(), labels: labels.len() });
    }
    let pos = labels.iter().filter(|&&y| y > 0).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(SvmError::SingleClass);
    }
    const MAX_ITER: usize = 100;
    const MIN_STEP: f64 = 1e-10;
    const SIGMA: f64 = 1e-12;
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    let targets: Vec<f64> = labels.iter().map(|&y| if y > 0 { hi } else { lo }).collect();

    let objective = |a: f64, b: f64| -> f64 {
        decisions
            .iter()
            .zip(&targets)
            .map(|(&f, &t)| {
                let z = f * a + b;
                if z >= 0.0 {
                    t * z + libm::log1p(libm::exp(-z))
                } else {
                    (t - 1.0) * z + libm::log1p(libm::exp(z))
                }
            })
            .sum()
    };

    let mut a = 0.0;
    let mut b = libm::log((neg + 1.0) / (pos + 1.0));
    let mut fval = objective(a, b);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
        for (&f, &t) in decisions.iter().zip(&targets) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = libm::exp(-z);
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = libm::exp(z);
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if libm::fabs(g1) < 1e-5 && libm::fabs(g2) < 1e-5 {
            converged = true;
            break;
        }
        iterations += 1;
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= MIN_STEP {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < MIN_STEP {
            log::warn!("Platt scaling line search failed after {iterations} iterations");
            break;
        }
    }
    if !converged && iterations >= MAX_ITER {
        log::warn!("Platt scaling did not converge in {MAX_ITER} Newton iterations");
    }
    Ok(PlattFit { platt: Platt { a, b }, iterations, converged })
}

/// Trained binary preference model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairwiseModel {
    /// Gram indices of the support instances.
    pub support: Vec<usize>,
    /// Dual coefficients `a_i` of the support instances, in `(0, C]`.
    pub alphas: Vec<f64>,
    /// Labels of the support instances.
    pub labels: Vec<i8>,
    pub bias: f64,
    pub platt: Platt,
    pub c: f64,
    /// Set when training data had a single class: the model always predicts it.
    pub degenerate: Option<i8>,
    /// The Gram matrix needed diagonal jitter to become PSD.
    pub jittered: bool,
    /// Fingerprint of the kernel the model was trained under.
    pub kernel: String,
}

impl PairwiseModel {
    /// `f(x) = sum a_i y_i K(x_i, x) + b`, where `row[k]` is `K(x_k, x)` for
    /// Gram index `k`.
    pub fn decision(&self, row: &[f64]) -> Result<f64, SvmError> {
        if let Some(&needed) = self.support.iter().max() {
            if needed >= row.len() {
                return Err(SvmError::MissingKernelValue { needed, got: row.len() });
            }
        }
        let sum: f64 = self
            .support
            .iter()
            .zip(&self.alphas)
            .zip(&self.labels)
            .map(|((&s, &a), &y)| a * y as f64 * row[s])
            .sum();
        Ok(sum + self.bias)
    }

    /// Calibrated probability of the positive class. Degenerate models return
    /// exactly 1 or 0.
    pub fn probability(&self, row: &[f64]) -> Result<f64, SvmError> {
        match self.degenerate {
            Some(y) => Ok(if y > 0 { 1.0 } else { 0.0 }),
            None => Ok(self.platt.apply(self.decision(row)?)),
        }
    }
}

/// Train on `data` using kernel values from `gram`, then fit Platt scaling on
/// the training decisions.
pub fn train(gram: &GramMatrix, data: &BinaryDataset, cfg: &SvmConfig) -> Result<PairwiseModel, SvmError> {
    if !(cfg.c.is_finite() && cfg.c > 0.0) {
        return Err(SvmError::BadC(cfg.c));
    }
    if data.is_empty() {
        return Err(SvmError::Empty);
    }
    let size = gram.size();
    if let Some(&index) = data.indices.iter().find(|&&i| i >= size) {
        return Err(SvmError::IndexOutOfRange { index, size });
    }
    if let Some(y) = data.single_class() {
        log::debug!("single-class pair dataset; returning constant model");
        return Ok(PairwiseModel {
            support: Vec::new(),
            alphas: Vec::new(),
            labels: Vec::new(),
            bias: y as f64,
            platt: Platt { a: 0.0, b: 0.0 },
            c: cfg.c,
            degenerate: Some(y),
            jittered: false,
            kernel: gram.fingerprint().into(),
        });
    }

    // Canonical instance order, so the solution does not depend on how the
    // caller listed the instances.
    let mut pairs: Vec<(usize, i8)> = data.indices.iter().copied().zip(data.labels.iter().copied()).collect();
    pairs.sort_unstable();
    let data = BinaryDataset { indices: pairs.iter().map(|p| p.0).collect(), labels: pairs.iter().map(|p| p.1).collect() };
    let n = data.len();
    let mut kernel: Vec<f64> = data
        .indices
        .iter()
        .flat_map(|&i| data.indices.iter().map(move |&j| (i, j)))
        .map(|(i, j)| gram.get(i, j))
        .collect();
    let mut sol = solve_dual(&kernel, &data.labels, cfg)?;
    let mut jittered = false;
    if sol.indefinite {
        log::warn!("Gram matrix is not positive semi-definite; retrying with diagonal jitter {JITTER}");
        for t in 0..n {
            kernel[t * n + t] += JITTER;
        }
        sol = solve_dual(&kernel, &data.labels, cfg)?;
        jittered = true;
    }

    let mut model = PairwiseModel {
        support: Vec::new(),
        alphas: Vec::new(),
        labels: Vec::new(),
        bias: sol.bias,
        platt: Platt { a: 0.0, b: 0.0 },
        c: cfg.c,
        degenerate: None,
        jittered,
        kernel: gram.fingerprint().into(),
    };
    for (t, &a) in sol.alphas.iter().enumerate() {
        if a > 0.0 {
            model.support.push(data.indices[t]);
            model.alphas.push(a);
            model.labels.push(data.labels[t]);
        }
    }
    let decisions = data
        .indices
        .iter()
        .map(|&i| model.decision(gram.row(i)))
        .collect::<Result<Vec<_>, _>>()?;
    model.platt = platt_fit(&decisions, &data.labels)?.platt;
    Ok(model)
}
