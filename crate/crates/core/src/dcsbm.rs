//! Degree-corrected stochastic block model: parameters, sampling and the
//! population (expectation) matrices.
//!
//! Under the model, nodes `i != j` are joined independently with probability
//! `theta_i * theta_j * P[g_i][g_j]`. The expectation `Omega = Theta Z P Z' Theta`
//! (diagonal included) and the regularized Laplacian built from it have rank
//! `K`, which is what makes the pipeline exact when it is fed `Omega`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, LabelVector};
use crate::rng::{self, rng_from_seed};
use crate::spectral::{canonicalize_signs, dense_eigensystem, magnitude_order, DVariant, EigenSystem};

const SYMMETRY_TOL: f64 = 1e-12;

/// Model parameters. Memberships are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct DcsbmParams {
    p: DMatrix<f64>,
    theta: Vec<f64>,
    membership: Vec<usize>,
}

impl DcsbmParams {
    /// Validates and wraps the parameters.
    ///
    /// Hard requirements: `P` square, symmetric, entries in `[0, 1]`;
    /// `theta > 0`; every community non-empty; every pair probability in
    /// `[0, 1]`. Nonsingularity and irreducibility of `P` are reported by
    /// [`DcsbmParams::structural_issues`] instead, since sampling does not need them.
    pub fn new(p: DMatrix<f64>, theta: Vec<f64>, membership: Vec<usize>) -> Result<Self> {
        let k = p.nrows();
        if k == 0 || p.ncols() != k {
            return Err(Error::Parameter(format!(
                "mixing matrix must be square and non-empty, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        if theta.len() != membership.len() {
            return Err(Error::Dimension(format!(
                "theta has {} entries, membership has {}",
                theta.len(),
                membership.len()
            )));
        }
        for a in 0..k {
            for b in 0..k {
                let v = p[(a, b)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Parameter(format!(
                        "P[{}][{}] = {v} outside [0, 1]",
                        a + 1,
                        b + 1
                    )));
                }
                if (v - p[(b, a)]).abs() > SYMMETRY_TOL {
                    return Err(Error::Parameter(format!(
                        "P is not symmetric at ({}, {})",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        if let Some(i) = theta.iter().position(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::Parameter(format!("theta[{i}] = {} must be positive", theta[i])));
        }
        let mut sizes = vec![0usize; k];
        for (i, &g) in membership.iter().enumerate() {
            if g >= k {
                return Err(Error::Parameter(format!("node {i} in community {} > K = {k}", g + 1)));
            }
            sizes[g] += 1;
        }
        if let Some(c) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Parameter(format!("community {} is empty", c + 1)));
        }
        let params = DcsbmParams { p, theta, membership };
        if let Some((i, j, prob)) = params.worst_pair() {
            if prob > 1.0 {
                return Err(Error::Parameter(format!(
                    "edge probability theta[{i}] * theta[{j}] * P = {prob} exceeds 1 for pair ({i}, {j})"
                )));
            }
        }
        Ok(params)
    }

    /// The node pair with the largest edge probability, if any pair exists.
    fn worst_pair(&self) -> Option<(usize, usize, f64)> {
        let k = self.k();
        // Top two theta per community, with node ids.
        let mut top: Vec<[(f64, usize); 2]> = vec![[(0.0, usize::MAX); 2]; k];
        for (i, (&t, &g)) in self.theta.iter().zip(&self.membership).enumerate() {
            let slot = &mut top[g];
            if t > slot[0].0 {
                slot[1] = slot[0];
                slot[0] = (t, i);
            } else if t > slot[1].0 {
                slot[1] = (t, i);
            }
        }
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..k {
            for b in a..k {
                let (x, y) = if a == b {
                    (top[a][0], top[a][1])
                } else {
                    (top[a][0], top[b][0])
                };
                if x.1 == usize::MAX || y.1 == usize::MAX {
                    continue;
                }
                let prob = x.0 * y.0 * self.p[(a, b)];
                if best.is_none_or(|(_, _, p)| prob > p) {
                    best = Some((x.1.min(y.1), x.1.max(y.1), prob));
                }
            }
        }
        best
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn k(&self) -> usize {
        self.p.nrows()
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    pub fn labels(&self) -> LabelVector {
        LabelVector::new(self.membership.clone()).expect("communities are non-empty")
    }

    pub fn community_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k()];
        for &g in &self.membership {
            s[g] += 1;
        }
        s
    }

    pub fn edge_probability(&self, i: usize, j: usize) -> f64 {
        self.theta[i] * self.theta[j] * self.p[(self.membership[i], self.membership[j])]
    }

    /// Membership matrix `Z` (n x K).
    pub fn z(&self) -> DMatrix<f64> {
        let mut z = DMatrix::zeros(self.n(), self.k());
        for (i, &g) in self.membership.iter().enumerate() {
            z[(i, g)] = 1.0;
        }
        z
    }

    /// Conditions the population analysis assumes but sampling does not:
    /// `P` nonsingular and irreducible. Empty when both hold.
    pub fn structural_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let det = self.p.determinant();
        if det.abs() < 1e-12 {
            issues.push(format!("P is singular (det = {det:e})"));
        }
        let k = self.k();
        let mut seen = vec![false; k];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for b in 0..k {
                if !seen[b] && self.p[(a, b)] > 0.0 {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            issues.push("P is reducible (its support graph is disconnected)".into());
        }
        issues
    }
}

/// Samples an adjacency matrix. Pairs `i < j` are visited in row-major order,
/// one uniform draw each, so the result depends only on `seed`.
pub fn sample_adjacency(params: &DcsbmParams, seed: u64) -> Graph {
    let mut rng = rng_from_seed(seed);
    let n = params.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let u: f64 = rng.random();
            if u < params.edge_probability(i, j) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges).expect("indices in range")
}

/// Expectation matrices derived from the parameters.
#[derive(Debug, Clone)]
pub struct PopulationMatrices {
    pub omega: DMatrix<f64>,
    /// Diagonal of the expected-degree matrix.
    pub expected_degrees: Vec<f64>,
    /// Population regularized Laplacian.
    pub laplacian: DMatrix<f64>,
    pub delta: f64,
    /// Regularization scale computed from the expected degrees.
    pub d: f64,
    /// Max-norm gap between the direct and the factored Laplacian.
    pub factorization_gap: f64,
}

/// `Omega`, the expected degrees and the population Laplacian with `d` taken
/// as the midpoint of the expected degrees.
pub fn population_matrices(params: &DcsbmParams, delta: f64) -> Result<PopulationMatrices> {
    population_matrices_with(params, delta, DVariant::Midpoint)
}

pub fn population_matrices_with(params: &DcsbmParams, delta: f64, variant: DVariant) -> Result<PopulationMatrices> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Parameter(format!("delta must be finite and >= 0, got {delta}")));
    }
    let n = params.n();
    let mut omega = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = params.edge_probability(i, j);
            omega[(i, j)] = v;
            omega[(j, i)] = v;
        }
    }
    let expected_degrees: Vec<f64> = omega.row_iter().map(|r| r.sum()).collect();
    let d = variant.scale_from_degrees(&expected_degrees);
    let ridge = delta * d;
    let mut scale = Vec::with_capacity(n);
    for (i, &deg) in expected_degrees.iter().enumerate() {
        let denom = deg + ridge;
        if denom <= 0.0 {
            return Err(Error::Singular { node: i, degree: deg });
        }
        scale.push(1.0 / denom.sqrt());
    }
    let laplacian = DMatrix::from_fn(n, n, |i, j| scale[i] * omega[(i, j)] * scale[j]);
    let factored = factored_laplacian(params, &expected_degrees, ridge)?;
    let factorization_gap = (&laplacian - &factored).amax();
    if factorization_gap > 1e-10 {
        return Err(Error::Numerical {
            iterations: 0,
            residual: factorization_gap,
            message: "direct and factored population Laplacians disagree".into(),
        });
    }
    Ok(PopulationMatrices {
        omega,
        expected_degrees,
        laplacian,
        delta,
        d,
        factorization_gap,
    })
}

/// Pieces of the factored form `Theta_delta^{1/2} Z P~ Z' Theta_delta^{1/2}`.
struct Factors {
    /// `theta_i * D_ii / (D_ii + ridge)`
    theta_delta: Vec<f64>,
    /// `D_P^{-1/2} P D_P^{-1/2}` with `D_P = diag(P Z' Theta 1)`.
    p_tilde: DMatrix<f64>,
}

fn factors(params: &DcsbmParams, expected_degrees: &[f64], ridge: f64) -> Result<Factors> {
    let k = params.k();
    // Q = P Z' Theta; D_P(a) = sum_j Q[a][j] = sum_b P[a][b] * (theta mass of community b)
    let mut mass = vec![0.0; k];
    for (&t, &g) in params.theta.iter().zip(&params.membership) {
        mass[g] += t;
    }
    let dp: Vec<f64> = (0..k)
        .map(|a| (0..k).map(|b| params.p[(a, b)] * mass[b]).sum())
        .collect();
    if let Some(a) = dp.iter().position(|&v| v <= 0.0) {
        return Err(Error::Parameter(format!(
            "community {} has zero expected degree",
            a + 1
        )));
    }
    let p_tilde = DMatrix::from_fn(k, k, |a, b| params.p[(a, b)] / (dp[a] * dp[b]).sqrt());
    let theta_delta = params
        .theta
        .iter()
        .zip(expected_degrees)
        .map(|(&t, &deg)| t * deg / (deg + ridge))
        .collect();
    Ok(Factors { theta_delta, p_tilde })
}

fn factored_laplacian(params: &DcsbmParams, expected_degrees: &[f64], ridge: f64) -> Result<DMatrix<f64>> {
    let f = factors(params, expected_degrees, ridge)?;
    let n = params.n();
    let g = &params.membership;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        (f.theta_delta[i] * f.theta_delta[j]).sqrt() * f.p_tilde[(g[i], g[j])]
    }))
}

/// Eigenpairs of the population Laplacian.
#[derive(Debug, Clone)]
pub struct PopulationEigen {
    /// The `K` leading pairs from a direct decomposition of the population Laplacian.
    pub system: EigenSystem,
    /// The same pairs from the `K x K` closed form; `None` when the small
    /// matrix has a repeated eigenvalue.
    pub closed_form: Option<EigenSystem>,
    pub degenerate: bool,
    /// Largest eigenvalue disagreement between the two routes.
    pub value_gap: f64,
    /// Largest eigenvector disagreement (up to sign) between the two routes.
    pub vector_gap: f64,
    /// Magnitude of the `(K+1)`-th eigenvalue of the direct decomposition.
    pub trailing_magnitude: f64,
}

pub const SIMPLE_SPECTRUM_TOL: f64 = 1e-8;

pub fn population_eigen(params: &DcsbmParams, delta: f64) -> Result<PopulationEigen> {
    let pop = population_matrices(params, delta)?;
    population_eigen_from(params, &pop)
}

pub fn population_eigen_from(params: &DcsbmParams, pop: &PopulationMatrices) -> Result<PopulationEigen> {
    let k = params.k();
    let n = params.n();
    let full = dense_eigensystem(&pop.laplacian);
    let trailing_magnitude = if n > k { full.values[k].abs() } else { 0.0 };
    let system = full.truncate(k);

    let ridge = pop.delta * pop.d;
    let f = factors(params, &pop.expected_degrees, ridge)?;
    let theta_tilde: Vec<f64> = f.theta_delta.iter().map(|t| t.sqrt()).collect();
    let mut block_norm = vec![0.0; k];
    for (&t, &g) in theta_tilde.iter().zip(&params.membership) {
        block_norm[g] += t * t;
    }
    let total_sq: f64 = block_norm.iter().sum();
    block_norm.iter_mut().for_each(|v| *v = v.sqrt());
    let total = total_sq.sqrt();
    let d_tilde: Vec<f64> = block_norm.iter().map(|b| b / total).collect();
    let small = DMatrix::from_fn(k, k, |a, b| d_tilde[a] * f.p_tilde[(a, b)] * d_tilde[b]);
    let eig = SymmetricEigen::new(small);
    let mu: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let mut sorted = mu.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let degenerate = sorted.windows(2).any(|w| (w[1] - w[0]).abs() < SIMPLE_SPECTRUM_TOL);

    if degenerate {
        log::warn!("population spectrum is not simple; skipping closed-form cross-check");
        return Ok(PopulationEigen {
            system,
            closed_form: None,
            degenerate,
            value_gap: f64::NAN,
            vector_gap: f64::NAN,
            trailing_magnitude,
        });
    }

    let lambdas: Vec<f64> = mu.iter().map(|m| m * total_sq).collect();
    let order = magnitude_order(&lambdas);
    let mut vectors = DMatrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    for (c, &src) in order.iter().enumerate() {
        values.push(lambdas[src]);
        let a = eig.eigenvectors.column(src);
        for i in 0..n {
            let g = params.membership[i];
            vectors[(i, c)] = a[g] / block_norm[g] * theta_tilde[i];
        }
    }
    canonicalize_signs(&mut vectors);
    let closed = EigenSystem { values, vectors };

    let value_gap = closed
        .values
        .iter()
        .zip(&system.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let vector_gap = (0..k)
        .map(|c| {
            let u: DVector<f64> = closed.vector(c);
            let v: DVector<f64> = system.vector(c);
            (&u - &v).amax().min((&u + &v).amax())
        })
        .fold(0.0, f64::max);

    Ok(PopulationEigen {
        system,
        closed_form: Some(closed),
        degenerate,
        value_gap,
        vector_gap,
        trailing_magnitude,
    })
}

/// Per-node degree parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ThetaRule {
    /// `theta_i = values[g_i]`
    PerCommunity {
        values: Vec<f64>,
    },
    Constant {
        value: f64,
    },
    /// `theta_i = 0.5 + 0.5 (i / n)^2`, `i` counted from 1.
    Quadratic,
    /// `theta_i = 0.5 + 0.5 i / n`, `i` counted from 1.
    Linear,
}

impl ThetaRule {
    pub fn generate(&self, membership: &[usize]) -> Result<Vec<f64>> {
        let n = membership.len() as f64;
        match self {
            ThetaRule::PerCommunity { values } => membership
                .iter()
                .map(|&g| {
                    values.get(g).copied().ok_or_else(|| {
                        Error::Config(format!("theta has {} values, need one per community", values.len()))
                    })
                })
                .collect(),
            ThetaRule::Constant { value } => Ok(vec![*value; membership.len()]),
            ThetaRule::Quadratic => Ok((1..=membership.len())
                .map(|i| 0.5 + 0.5 * (i as f64 / n).powi(2))
                .collect()),
            ThetaRule::Linear => Ok((1..=membership.len()).map(|i| 0.5 + 0.5 * i as f64 / n).collect()),
        }
    }
}

/// How nodes are assigned to communities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum MembershipRule {
    /// Each node independently uniform over the `K` communities. Draws with
    /// an empty community are rejected and redrawn.
    IidUniform,
    /// Consecutive blocks. With `K - 1` sizes the remainder goes to the last community.
    Blocks { sizes: Vec<usize> },
    /// Two communities: the first `round(n / (c0 + 1))` nodes, then the rest.
    SizeRatio { c0: f64 },
}

impl MembershipRule {
    pub fn is_random(&self) -> bool {
        matches!(self, MembershipRule::IidUniform)
    }

    pub fn generate(&self, n: usize, k: usize, rng: &mut rng::Rng) -> Result<Vec<usize>> {
        let from_sizes = |sizes: &[usize]| -> Result<Vec<usize>> {
            let mut sizes = sizes.to_vec();
            let used: usize = sizes.iter().sum();
            if sizes.len() + 1 == k && used <= n {
                sizes.push(n - used);
            }
            if sizes.len() != k || sizes.iter().sum::<usize>() != n {
                return Err(Error::Config(format!(
                    "block sizes {sizes:?} do not cover n = {n} nodes in K = {k} communities"
                )));
            }
            Ok(sizes
                .iter()
                .enumerate()
                .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
                .collect())
        };
        match self {
            MembershipRule::IidUniform => {
                if n < k {
                    return Err(Error::Config(format!("n = {n} < K = {k}")));
                }
                for _ in 0..10_000 {
                    let g: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
                    let mut seen = vec![false; k];
                    g.iter().for_each(|&c| seen[c] = true);
                    if seen.iter().all(|&s| s) {
                        return Ok(g);
                    }
                }
                Err(Error::Config(
                    "could not draw a membership with no empty community".into(),
                ))
            }
            MembershipRule::Blocks { sizes } => from_sizes(sizes),
            MembershipRule::SizeRatio { c0 } => {
                if k != 2 {
                    return Err(Error::Config("size_ratio membership needs K = 2".into()));
                }
                let n1 = (n as f64 / (c0 + 1.0)).round() as usize;
                from_sizes(&[n1])
            }
        }
    }
}

fn default_delta() -> f64 {
    0.1
}

/// Declarative model description, as stored in model config files.
///
/// ```toml
/// n = 400
/// k = 2
/// p = [0.9, 0.5, 0.5, 0.9]          # row-major K x K
/// delta = 0.1
/// theta = { rule = "per_community", values = [0.2, 0.6] }
/// membership = { rule = "iid_uniform" }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub n: usize,
    pub k: usize,
    pub p: Vec<f64>,
    pub theta: ThetaRule,
    pub membership: MembershipRule,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl ModelSpec {
    pub fn p_matrix(&self) -> Result<DMatrix<f64>> {
        if self.p.len() != self.k * self.k {
            return Err(Error::Config(format!(
                "p has {} entries, expected K^2 = {}",
                self.p.len(),
                self.k * self.k
            )));
        }
        Ok(DMatrix::from_row_slice(self.k, self.k, &self.p))
    }

    /// Draws memberships (when random) and builds validated parameters.
    pub fn realize(&self, seed: u64) -> Result<DcsbmParams> {
        let mut rng = rng_from_seed(seed);
        let membership = self.membership.generate(self.n, self.k, &mut rng)?;
        let theta = self.theta.generate(&membership)?;
        DcsbmParams::new(self.p_matrix()?, theta, membership)
    }

    /// Checks that every admissible realization is valid. For random
    /// memberships the pair-probability bound is checked against the worst case.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n < self.k {
            return Err(Error::Config(format!(
                "need n >= K >= 1, got n = {}, K = {}",
                self.n, self.k
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!(
                "delta must be finite and >= 0, got {}",
                self.delta
            )));
        }
        let p = self.p_matrix()?;
        if !self.membership.is_random() {
            return self.realize(0).map(|_| ());
        }
        match &self.theta {
            ThetaRule::PerCommunity { values } => {
                if values.len() != self.k {
                    return Err(Error::Config(format!(
                        "theta has {} values, K = {}",
                        values.len(),
                        self.k
                    )));
                }
                for a in 0..self.k {
                    for b in a..self.k {
                        let prob = values[a] * values[b] * p[(a, b)];
                        if prob > 1.0 {
                            return Err(Error::Parameter(format!(
                                "edge probability {prob} exceeds 1 between communities {} and {}",
                                a + 1,
                                b + 1
                            )));
                        }
                    }
                }
            }
            rule => {
                let mut theta = rule.generate(&vec![0; self.n])?;
                theta.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let p_max = p.iter().copied().fold(0.0, f64::max);
                if self.n >= 2 && theta[0] * theta[1] * p_max > 1.0 {
                    return Err(Error::Parameter(format!(
                        "edge probability {} can exceed 1 under a random membership",
                        theta[0] * theta[1] * p_max
                    )));
                }
            }
        }
        let membership: Vec<usize> = (0..self.n).map(|i| i % self.k).collect();
        let theta = self.theta.generate(&membership)?;
        DcsbmParams::new(p, theta, membership).map(|_| ())
    }
}

/// Draws a random valid parameter set with nonsingular `P` and a simple
/// population spectrum, for property tests and exactness checks.
pub fn random_params(rng: &mut rng::Rng, n: usize, k: usize) -> DcsbmParams {
    assert!(n >= 2 * k, "need at least two nodes per community");
    loop {
        let mut p = DMatrix::zeros(k, k);
        for a in 0..k {
            p[(a, a)] = rng.random_range(0.4..0.9);
            for b in (a + 1)..k {
                let v = rng.random_range(0.02..0.3);
                p[(a, b)] = v;
                p[(b, a)] = v;
            }
        }
        // Random sizes, at least two nodes each.
        let mut membership: Vec<usize> = (0..n)
            .map(|i| if i < 2 * k { i % k } else { rng.random_range(0..k) })
            .collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            membership.swap(i, j);
        }
        let theta: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
        let Ok(params) = DcsbmParams::new(p, theta, membership) else {
            continue;
        };
        if !params.structural_issues().is_empty() {
            continue;
        }
        match population_eigen(&params, 0.1) {
            Ok(e) if !e.degenerate => return params,
            _ => continue,
        }
    }
}
