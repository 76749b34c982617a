//! Clustering error up to label permutation, and diagnostics that compare
//! sample spectra with their population counterparts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dcsbm::{population_matrices, sample_adjacency, DcsbmParams};
use crate::error::{Error, Result};
use crate::graph::LabelVector;
use crate::rng::derive_seed;
use crate::spectral::{
    dense_eigensystem, leading_eigenpairs, DVariant, EigenOptions, EigenSystem, RegularizedLaplacian,
};

/// Counts of (true label, predicted label) pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[t][p]`
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(truth: &[usize], pred: &[usize]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::Dimension(format!(
                "{} predicted labels vs {} true labels",
                pred.len(),
                truth.len()
            )));
        }
        let kt = truth.iter().max().map_or(0, |m| m + 1);
        let kp = pred.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![vec![0; kp]; kt];
        for (&t, &p) in truth.iter().zip(pred) {
            counts[t][p] += 1;
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn from_counts(counts: Vec<Vec<usize>>) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    fn true_k(&self) -> usize {
        self.counts.len()
    }

    fn pred_k(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    /// Maximum number of agreeing nodes over all label matchings, and the
    /// matching itself: `perm[p]` is the true label assigned to predicted
    /// label `p` (values `>= K_true` mean "unmatched").
    pub fn best_alignment(&self) -> (usize, Vec<usize>) {
        let size = self.true_k().max(self.pred_k());
        if size == 0 {
            return (0, Vec::new());
        }
        // cost[p][t] = -count, padded with zeros.
        let cost: Vec<Vec<i64>> = (0..size)
            .map(|p| {
                (0..size)
                    .map(|t| {
                        if p < self.pred_k() && t < self.true_k() {
                            -(self.counts[t][p] as i64)
                        } else {
                            0
                        }
                    })
                    .collect()
            })
            .collect();
        let assign = hungarian(&cost);
        let matched = (0..self.pred_k())
            .filter(|&p| assign[p] < self.true_k())
            .map(|p| self.counts[assign[p]][p])
            .sum();
        let mut perm = assign;
        perm.truncate(self.pred_k());
        (matched, perm)
    }
}

/// Minimum-cost perfect matching on a square cost matrix (potential-based
/// Hungarian method, O(n^3)). Returns `assign[row] = column`.
pub fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based arrays; index 0 is a sentinel column.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        row_of[0] = row;
        let mut col0 = 0usize;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r = row_of[col0];
            let mut delta = i64::MAX;
            let mut col1 = 0;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let cur = cost[r - 1][col - 1] - u[r] - v[col];
                if cur < minv[col] {
                    minv[col] = cur;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[row_of[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if row_of[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            row_of[col0] = row_of[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for col in 1..=n {
        if row_of[col] > 0 {
            assign[row_of[col] - 1] = col - 1;
        }
    }
    assign
}

/// Misclassification rate minimized over label permutations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringError {
    pub rate: f64,
    pub mismatches: usize,
    pub n: usize,
    /// `best_perm[p]` = true label matched to predicted label `p`.
    pub best_perm: Vec<usize>,
}

pub fn clustering_error(pred: &[usize], truth: &LabelVector) -> Result<ClusteringError> {
    let cm = ConfusionMatrix::new(truth.as_slice(), pred)?;
    let n = truth.len();
    let (matched, best_perm) = cm.best_alignment();
    let mismatches = n - matched;
    Ok(ClusteringError {
        rate: if n == 0 { 0.0 } else { mismatches as f64 / n as f64 },
        mismatches,
        n,
        best_perm,
    })
}

/// Diagnostic Hamming error bounds evaluated from an eigensystem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HammingBound {
    pub strong: f64,
    pub weak: f64,
}

/// `strong = (sqrt(K lambda_K^2 + 4 lambda_{K+1}^2) + 8K)^2 / (n m^2)` and
/// `weak = (|lambda_{K+1}| sqrt(K + 4) + 8K)^2 / (n m^2)`, where `m` is the
/// shortest embedding row length.
pub fn hamming_bound(es: &EigenSystem, k: usize, n: usize, m: f64) -> Result<HammingBound> {
    if !(m > 0.0) {
        return Err(Error::Parameter(format!(
            "shortest row length must be positive, got {m}"
        )));
    }
    if k == 0 || es.count() < k + 1 {
        return Err(Error::Dimension(format!(
            "need {} eigenvalues, have {}",
            k + 1,
            es.count()
        )));
    }
    let kf = k as f64;
    let lk = es.values[k - 1];
    let lk1 = es.values[k];
    let denom = n as f64 * m * m;
    Ok(HammingBound {
        strong: ((kf * lk * lk + 4.0 * lk1 * lk1).sqrt() + 8.0 * kf).powi(2) / denom,
        weak: (lk1.abs() * (kf + 4.0).sqrt() + 8.0 * kf).powi(2) / denom,
    })
}

/// Outcome of the Monte Carlo check of the eigenvalue perturbation bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationCoverage {
    /// Whether `d delta + min_i D_ii > 3 log(4n / epsilon)` holds.
    pub applicable: bool,
    /// `d delta + min_i D_ii` with population quantities.
    pub effective_degree: f64,
    /// Bound on `max_k |lambda_hat_k - lambda_k|`.
    pub max_bound: f64,
    /// Bound on `sum_k |lambda_hat_k - lambda_k|^2`.
    pub sum_sq_bound: f64,
    pub population_values: Vec<f64>,
    /// Per trial: (max deviation, sum of squared deviations).
    pub deviations: Vec<(f64, f64)>,
    /// Fraction of trials in which both inequalities held; `None` when the
    /// bound is undefined (zero effective degree).
    pub coverage: Option<f64>,
}

impl PerturbationCoverage {
    pub fn hits(&self) -> usize {
        self.deviations
            .iter()
            .filter(|&&(mx, ss)| mx <= self.max_bound && ss <= self.sum_sq_bound)
            .count()
    }
}

/// Samples `trials` graphs and counts how often the sample eigenvalues of
/// the regularized Laplacian stay within the perturbation bounds of the
/// population eigenvalues.
pub fn eigen_perturbation_check(
    params: &DcsbmParams,
    delta: f64,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<PerturbationCoverage> {
    if !(epsilon > 0.0) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let k = params.k();
    let n = params.n();
    let pop = match population_matrices(params, delta) {
        Ok(p) => p,
        Err(Error::Singular { .. }) => {
            return Ok(PerturbationCoverage {
                applicable: false,
                effective_degree: 0.0,
                max_bound: f64::INFINITY,
                sum_sq_bound: f64::INFINITY,
                population_values: Vec::new(),
                deviations: Vec::new(),
                coverage: None,
            })
        }
        Err(e) => return Err(e),
    };
    let min_deg = pop.expected_degrees.iter().copied().fold(f64::INFINITY, f64::min);
    let effective_degree = pop.d * delta + min_deg;
    let log_term = (4.0 * n as f64 / epsilon).ln();
    let applicable = effective_degree > 3.0 * log_term;
    if effective_degree <= 0.0 {
        return Ok(PerturbationCoverage {
            applicable,
            effective_degree,
            max_bound: f64::INFINITY,
            sum_sq_bound: f64::INFINITY,
            population_values: Vec::new(),
            deviations: Vec::new(),
            coverage: None,
        });
    }
    let max_bound = 4.0 * (3.0 * log_term / effective_degree).sqrt();
    let sum_sq_bound = 48.0 * k as f64 * log_term / effective_degree;
    let population_values = dense_eigensystem(&pop.laplacian).values[..k].to_vec();

    let deviations = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(f64, f64)> {
            let g = sample_adjacency(params, derive_seed(seed, t as u64));
            let lap = RegularizedLaplacian::new(&g, delta, DVariant::Midpoint)?;
            let es = leading_eigenpairs(&lap, k, &EigenOptions::default())?;
            let diffs: Vec<f64> = es
                .values
                .iter()
                .zip(&population_values)
                .map(|(a, b)| (a - b).abs())
                .collect();
            let mx = diffs.iter().copied().fold(0.0, f64::max);
            let ss = diffs.iter().map(|d| d * d).sum();
            Ok((mx, ss))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = PerturbationCoverage {
        applicable,
        effective_degree,
        max_bound,
        sum_sq_bound,
        population_values,
        deviations,
        coverage: None,
    };
    if trials > 0 {
        out.coverage = Some(out.hits() as f64 / trials as f64);
    }
    Ok(out)
}

/// Evaluation report written next to clustering results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Report {
    pub method: String,
    pub dataset: String,
    pub k: usize,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub errors: usize,
    pub n: usize,
    pub rate: f64,
    pub best_perm: Vec<usize>,
    pub weak_signal_a: Option<f64>,
    pub weak_signal_l: Option<f64>,
    pub bounds: Option<HammingBound>,
}
