//! Metrics, k-fold cross-validation over `(λ, ε)` grids, and seeded
//! train/test splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimator::{fit, predict, FitConfig};
use crate::tensor::{frobenius_distance, frobenius_norm, DenseTensor};

pub const DEFAULT_FOLDS: usize = 5;

/// `(1/N) Σ (ŷᵢ − yᵢ)²`.
pub fn mse(y_hat: &[f64], y: &[f64]) -> Result<f64> {
    if y_hat.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            found: y_hat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::Empty("mse input"));
    }
    let sse: f64 = y_hat.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sse / y.len() as f64)
}

/// `‖Ŵ − W*‖_F / ‖W*‖_F`.
pub fn coefficient_error(w_hat: &DenseTensor, w_star: &DenseTensor) -> Result<f64> {
    let den = frobenius_norm(w_star);
    let num = frobenius_distance(w_hat, w_star)?;
    if den == 0.0 {
        return Err(Error::ZeroNormReference);
    }
    Ok(num / den)
}

/// Area under the ROC curve in its Mann–Whitney form: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
/// `labels[i]` is true for the positive class.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            found: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("scores"));
    }
    let n_pos = labels.iter().filter(|l| **l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // sum of (1-based, tie-averaged) ranks of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_block = order[i..=j].iter().filter(|&&k| labels[k]).count();
        rank_sum += avg_rank * pos_in_block as f64;
        i = j + 1;
    }
    let (np, nn) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Interprets a response vector as binary labels when it takes exactly two
/// distinct values; the larger value is the positive class.
pub fn binary_labels(y: &[f64]) -> Option<Vec<bool>> {
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo < hi) || y.iter().any(|v| *v != lo && *v != hi) {
        return None;
    }
    Some(y.iter().map(|v| *v == hi).collect())
}

/// Classification targets coded as `+1` (positive) and `−1` (negative).
pub fn encode_labels(labels: &[bool]) -> Vec<f64> {
    labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvGrid {
    pub lambdas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub k: usize,
}

impl CvGrid {
    pub fn new(lambdas: Vec<f64>, epsilons: Vec<f64>, k: usize) -> Self {
        Self {
            lambdas,
            epsilons,
            k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.epsilons.is_empty() {
            return Err(Error::Empty("cv grid"));
        }
        if self.lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::invalid("lambdas", "must be finite and >= 0"));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::invalid("epsilons", "must be finite and > 0"));
        }
        if self.k < 2 {
            return Err(Error::invalid("k", "need at least 2 folds"));
        }
        Ok(())
    }
}

impl Default for CvGrid {
    /// λ: 7 log-spaced points over `[1e-4, 1e1]`; ε: `1e-3, 1e-2, …, 1e2`.
    fn default() -> Self {
        Self {
            lambdas: logspace(-4.0, 1.0, 7),
            epsilons: logspace(-3.0, 2.0, 6),
            k: DEFAULT_FOLDS,
        }
    }
}

/// `count` points `10^a … 10^b`, evenly spaced in the exponent.
pub fn logspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![10f64.powf(a)],
        _ => (0..count)
            .map(|i| {
                let e = a + (b - a) * i as f64 / (count - 1) as f64;
                if e.fract() == 0.0 {
                    10f64.powi(e as i32)
                } else {
                    10f64.powf(e)
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub best_lambda: f64,
    pub best_epsilon: f64,
    pub best_score: f64,
    /// Mean validation MSE, indexed `[lambda][epsilon]`; `+∞` when every
    /// fold of the cell failed.
    pub cell_scores: Vec<Vec<f64>>,
    /// Validation MSE per fold, indexed `[lambda][epsilon][fold]`; `+∞`
    /// marks a failed fold.
    pub fold_scores: Vec<Vec<Vec<f64>>>,
    /// Fold index of each sample.
    pub fold_assignment: Vec<usize>,
}

/// Seeded shuffle, then contiguous blocks; the first `n mod k` folds get one
/// extra sample.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::invalid("k", format!("need 2 <= k <= N (k={k}, N={n})")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let (base, rem) = (n / k, n % k);
    let mut assignment = vec![0; n];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < rem);
        for &i in &perm[pos..pos + size] {
            assignment[i] = fold;
        }
        pos += size;
    }
    Ok(assignment)
}

fn fold_mse(data: &Dataset, assignment: &[usize], fold: usize, cfg: &FitConfig) -> Option<f64> {
    let (val, train): (Vec<usize>, Vec<usize>) =
        (0..data.len()).partition(|&i| assignment[i] == fold);
    let train = data.select(&train).ok()?;
    let val = data.select(&val).ok()?;
    let report = fit(&train, cfg).ok()?;
    let y_hat = predict(&report.factors, val.samples()).ok()?;
    mse(&y_hat, val.responses()).ok().filter(|v| v.is_finite())
}

/// Grid search by k-fold validation MSE. Each cell reuses `template` with
/// its `(λ, ε)` substituted; `template.seed` drives both the fold shuffle
/// and the factor initialization. Ties go to the larger λ, then the larger ε.
pub fn kfold_cv(data: &Dataset, grid: &CvGrid, template: &FitConfig) -> Result<CvResult> {
    grid.validate()?;
    template.validate()?;
    let assignment = fold_assignment(data.len(), grid.k, template.seed)?;

    let (nl, ne, k) = (grid.lambdas.len(), grid.epsilons.len(), grid.k);
    let flat: Vec<f64> = (0..nl * ne * k)
        .into_par_iter()
        .map(|t| {
            let (li, ei, fold) = (t / (ne * k), (t / k) % ne, t % k);
            let cfg = FitConfig {
                lambda: grid.lambdas[li],
                epsilon: grid.epsilons[ei],
                ..*template
            };
            fold_mse(data, &assignment, fold, &cfg).unwrap_or(f64::INFINITY)
        })
        .collect();

    let fold_scores: Vec<Vec<Vec<f64>>> = flat
        .chunks(ne * k)
        .map(|row| row.chunks(k).map(<[f64]>::to_vec).collect())
        .collect();
    let cell_scores: Vec<Vec<f64>> = fold_scores
        .iter()
        .map(|row| {
            row.iter()
                .map(|folds| {
                    let ok: Vec<f64> = folds.iter().copied().filter(|v| v.is_finite()).collect();
                    if ok.is_empty() {
                        f64::INFINITY
                    } else {
                        ok.iter().sum::<f64>() / ok.len() as f64
                    }
                })
                .collect()
        })
        .collect();

    let mut best = (0, 0);
    for li in 0..nl {
        for ei in 0..ne {
            let (s, b) = (cell_scores[li][ei], cell_scores[best.0][best.1]);
            let (l, bl) = (grid.lambdas[li], grid.lambdas[best.0]);
            let (e, be) = (grid.epsilons[ei], grid.epsilons[best.1]);
            if s < b || (s == b && (l > bl || (l == bl && e > be))) {
                best = (li, ei);
            }
        }
    }

    Ok(CvResult {
        best_lambda: grid.lambdas[best.0],
        best_epsilon: grid.epsilons[best.1],
        best_score: cell_scores[best.0][best.1],
        cell_scores,
        fold_scores,
        fold_assignment: assignment,
    })
}

/// Seeded shuffle of `0..n`, the first `round(fraction · n)` going to train.
pub fn train_test_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid("train_fraction", "must lie in (0, 1)"));
    }
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::invalid(
            "train_fraction",
            format!("split of {n} samples leaves an empty part"),
        ));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let test = perm.split_off(n_train);
    Ok((perm, test))
}

pub fn train_test_split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = train_test_indices(data.len(), train_fraction, seed)?;
    Ok((data.select(&train)?, data.select(&test)?))
}
