//! Eigenvalue-weighted embeddings, seeded k-means and the ISC pipeline.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dcsbm::{population_eigen_from, population_matrices, DcsbmParams};
use crate::error::{Error, Result};
use crate::graph::{Graph, LabelVector};
use crate::rng::{derive_seed, rng_from_seed};
use crate::spectral::{
    dense_eigensystem, leading_eigenpairs, DVariant, EigenOptions, EigenSystem, RegularizedLaplacian, Ridge,
};

/// Rows with norm below this are treated as zero rows.
pub const ZERO_ROW_TOL: f64 = 1e-12;

/// Spectral embedding of the nodes and its row-normalized form.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub x: DMatrix<f64>,
    pub x_star: DMatrix<f64>,
    /// Rows of `x` with (numerically) zero norm; their `x_star` row is `e_1`.
    pub zero_rows: Vec<bool>,
}

impl Embedding {
    /// `X = [eta_1 .. eta_{K+1}] diag(lambda_1 .. lambda_{K+1})`, then row-normalized.
    pub fn weighted(es: &EigenSystem, k: usize) -> Result<Self> {
        Self::from_system(es, k + 1, true)
    }

    /// The first `count` eigenvectors without eigenvalue weights, row-normalized.
    pub fn unweighted(es: &EigenSystem, count: usize) -> Result<Self> {
        Self::from_system(es, count, false)
    }

    fn from_system(es: &EigenSystem, count: usize, weighted: bool) -> Result<Self> {
        if es.count() < count {
            return Err(Error::Dimension(format!(
                "embedding needs {count} eigenpairs, have {}",
                es.count()
            )));
        }
        let mut x = es.vectors.columns(0, count).into_owned();
        if weighted {
            for (c, mut col) in x.column_iter_mut().enumerate() {
                col *= es.values[c];
            }
        }
        Ok(Self::normalize(x))
    }

    /// Row-normalizes an arbitrary embedding matrix.
    pub fn normalize(x: DMatrix<f64>) -> Self {
        let (n, m) = x.shape();
        let mut x_star = x.clone();
        let mut zero_rows = vec![false; n];
        for i in 0..n {
            let norm = x.row(i).norm();
            if norm < ZERO_ROW_TOL {
                zero_rows[i] = true;
                for c in 0..m {
                    x_star[(i, c)] = if c == 0 { 1.0 } else { 0.0 };
                }
            } else {
                for c in 0..m {
                    x_star[(i, c)] /= norm;
                }
            }
        }
        Embedding { x, x_star, zero_rows }
    }

    pub fn zero_row_count(&self) -> usize {
        self.zero_rows.iter().filter(|&&z| z).count()
    }

    /// Length of the shortest row of `x`.
    pub fn shortest_row(&self) -> f64 {
        self.x.row_iter().map(|r| r.norm()).fold(f64::INFINITY, f64::min)
    }
}

/// A hard clustering. Labels are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
}

impl Partition {
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn to_label_vector(&self) -> LabelVector {
        LabelVector::new(self.labels.clone()).expect("partitions have no empty cluster")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            restarts: 50,
            max_iter: 300,
            seed: 0,
        }
    }
}

fn sq_dist(points: &DMatrix<f64>, i: usize, center: &[f64]) -> f64 {
    center
        .iter()
        .enumerate()
        .map(|(c, v)| (points[(i, c)] - v).powi(2))
        .sum()
}

fn nearest(points: &DMatrix<f64>, i: usize, centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(points, i, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn centroids(points: &DMatrix<f64>, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let m = points.ncols();
    let mut sums = vec![vec![0.0; m]; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for c in 0..m {
            sums[l][c] += points[(i, c)];
        }
    }
    for (s, &cnt) in sums.iter_mut().zip(&counts) {
        if cnt > 0 {
            s.iter_mut().for_each(|v| *v /= cnt as f64);
        }
    }
    sums
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(points: &DMatrix<f64>, labels: &mut [usize], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let centers = centroids(points, labels, k);
        let mut far = (usize::MAX, -1.0);
        for (i, &l) in labels.iter().enumerate() {
            if counts[l] < 2 {
                continue;
            }
            let d = sq_dist(points, i, &centers[l]);
            if d > far.1 {
                far = (i, d);
            }
        }
        labels[far.0] = empty;
    }
}

fn plus_plus_init(points: &DMatrix<f64>, k: usize, rng: &mut crate::rng::Rng) -> Vec<Vec<f64>> {
    let n = points.nrows();
    let row = |i: usize| points.row(i).iter().copied().collect::<Vec<f64>>();
    let mut centers = vec![row(rng.random_range(0..n))];
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers[0])).collect();
    while centers.len() < k {
        let next = match WeightedIndex::new(&dist) {
            Ok(w) => w.sample(rng),
            // Every point sits on a center already.
            Err(_) => rng.random_range(0..n),
        };
        let c = row(next);
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &c));
        }
        centers.push(c);
    }
    centers
}

fn inertia(points: &DMatrix<f64>, labels: &[usize], k: usize) -> f64 {
    let centers = centroids(points, labels, k);
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(points, i, &centers[l]))
        .sum()
}

/// One k-means++ seeded Lloyd run. Also returns the objective after every iteration.
fn lloyd(points: &DMatrix<f64>, k: usize, max_iter: usize, seed: u64) -> (Vec<usize>, f64, Vec<f64>) {
    let n = points.nrows();
    let mut rng = rng_from_seed(seed);
    let centers = plus_plus_init(points, k, &mut rng);
    let mut labels: Vec<usize> = (0..n).map(|i| nearest(points, i, &centers).0).collect();
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        repair_empty(points, &mut labels, k);
        trace.push(inertia(points, &labels, k));
        let centers = centroids(points, &labels, k);
        let next: Vec<usize> = (0..n).map(|i| nearest(points, i, &centers).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    repair_empty(points, &mut labels, k);
    let obj = inertia(points, &labels, k);
    trace.push(obj);
    (labels, obj, trace)
}

fn partition_from(labels: Vec<usize>, k: usize, inertia: f64) -> Partition {
    let mut sizes = vec![0; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    Partition { labels, sizes, inertia }
}

/// k-means on the rows of `points`. Restart `r` is seeded with
/// `derive_seed(seed, r)`; the run with the smallest inertia wins, ties going
/// to the lowest restart index.
pub fn kmeans(points: &DMatrix<f64>, k: usize, opts: &KMeansOptions) -> Result<Partition> {
    let n = points.nrows();
    if k == 0 || n < k {
        return Err(Error::Parameter(format!(
            "k-means needs 1 <= K <= n, got K = {k}, n = {n}"
        )));
    }
    if opts.restarts == 0 {
        return Err(Error::Parameter("k-means needs at least one restart".into()));
    }
    let runs: Vec<(Vec<usize>, f64)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let (labels, obj, _) = lloyd(points, k, opts.max_iter, derive_seed(opts.seed, r as u64));
            (labels, obj)
        })
        .collect();
    let (labels, obj) = runs
        .into_iter()
        .reduce(|best, cur| if cur.1 < best.1 { cur } else { best })
        .expect("restarts >= 1");
    Ok(partition_from(labels, k, obj))
}

/// Objective after each Lloyd iteration of restart `restart` (for diagnostics and tests).
pub fn kmeans_trace(points: &DMatrix<f64>, k: usize, opts: &KMeansOptions, restart: usize) -> Vec<f64> {
    lloyd(points, k, opts.max_iter, derive_seed(opts.seed, restart as u64)).2
}

/// Settings for the ISC pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IscOptions {
    pub delta: f64,
    pub variant: DVariant,
    pub kmeans: KMeansOptions,
    pub eigen: EigenOptions,
}

impl Default for IscOptions {
    fn default() -> Self {
        IscOptions {
            delta: 0.1,
            variant: DVariant::Midpoint,
            kmeans: KMeansOptions::default(),
            eigen: EigenOptions::default(),
        }
    }
}

impl IscOptions {
    pub fn with_seed(seed: u64) -> Self {
        let mut o = Self::default();
        o.kmeans.seed = seed;
        o
    }
}

/// Everything the pipeline produced, not just the labels.
#[derive(Debug, Clone)]
pub struct IscOutcome {
    pub partition: Partition,
    /// The `K + 1` leading eigenpairs of the regularized Laplacian.
    pub eigensystem: EigenSystem,
    pub embedding: Embedding,
    pub ridge: Ridge,
}

/// Steps 2-4 from precomputed eigenpairs (at least `K + 1` of them).
pub fn isc_from_eigensystem(es: &EigenSystem, k: usize, kmeans_opts: &KMeansOptions) -> Result<(Embedding, Partition)> {
    let embedding = Embedding::weighted(es, k)?;
    let partition = kmeans(&embedding.x_star, k, kmeans_opts)?;
    Ok((embedding, partition))
}

/// Full ISC: regularized Laplacian, `K + 1` leading eigenpairs weighted by
/// their eigenvalues, row normalization, k-means with `K` clusters.
pub fn isc_cluster(g: &Graph, k: usize, opts: &IscOptions) -> Result<IscOutcome> {
    if k == 0 || k + 1 > g.n() {
        return Err(Error::Parameter(format!(
            "ISC needs 1 <= K < n, got K = {k}, n = {}",
            g.n()
        )));
    }
    let lap = RegularizedLaplacian::new(g, opts.delta, opts.variant)?;
    let es = leading_eigenpairs(&lap, k + 1, &opts.eigen)?;
    let (embedding, partition) = isc_from_eigensystem(&es, k, &opts.kmeans)?;
    Ok(IscOutcome {
        partition,
        eigensystem: es,
        embedding,
        ridge: lap.ridge(),
    })
}

#[derive(Debug, Clone)]
pub struct IdealOutcome {
    pub partition: Partition,
    pub embedding: Embedding,
    pub eigensystem: EigenSystem,
    /// The small matrix behind the population spectrum has a repeated eigenvalue.
    pub degenerate: bool,
}

/// ISC run on the expectation matrix instead of a sampled graph, with
/// expected degrees in place of observed ones.
pub fn ideal_isc(params: &DcsbmParams, delta: f64, kmeans_opts: &KMeansOptions) -> Result<IdealOutcome> {
    let k = params.k();
    if k + 1 > params.n() {
        return Err(Error::Parameter(format!(
            "ideal ISC needs K < n, got K = {k}, n = {}",
            params.n()
        )));
    }
    let pop = population_matrices(params, delta)?;
    let degenerate = population_eigen_from(params, &pop)?.degenerate;
    let es = dense_eigensystem(&pop.laplacian).truncate(k + 1);
    let (embedding, partition) = isc_from_eigensystem(&es, k, kmeans_opts)?;
    Ok(IdealOutcome {
        partition,
        embedding,
        eigensystem: es,
        degenerate,
    })
}
