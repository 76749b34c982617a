//! Comparison methods built on the same spectral machinery: SCORE-style
//! ratios of adjacency eigenvectors and RSC-style regularized spectral
//! clustering, each with either `K` or `K + 1` eigenvectors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::clustering::{kmeans, Embedding, KMeansOptions, Partition};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectral::{leading_eigenpairs, EigenOptions, EigenSystem, RegularizedLaplacian};

/// How many leading eigenvectors a baseline uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NEigs {
    #[default]
    K,
    KPlusOne,
}

impl NEigs {
    pub fn count(self, k: usize) -> usize {
        match self {
            NEigs::K => k,
            NEigs::KPlusOne => k + 1,
        }
    }
}

impl std::str::FromStr for NEigs {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "K" | "k" => Ok(NEigs::K),
            "K+1" | "k+1" => Ok(NEigs::KPlusOne),
            other => Err(Error::Parameter(format!("n-eigs must be K or K+1, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub partition: Partition,
    pub eigensystem: EigenSystem,
    /// SCORE only: nodes whose leading-eigenvector entry was numerically zero.
    pub degenerate_ratios: usize,
}

const RATIO_ZERO_TOL: f64 = 1e-12;

/// Entrywise ratios `eta_{k+1}(i) / eta_1(i)` for `k = 1..count-1`, clipped to
/// `[-threshold, threshold]`. Returns the ratio matrix and the number of
/// rows where `eta_1(i)` vanished.
pub fn score_ratios(es: &EigenSystem, count: usize, threshold: f64) -> Result<(DMatrix<f64>, usize)> {
    if es.count() < count {
        return Err(Error::Dimension(format!(
            "SCORE needs {count} eigenvectors, have {}",
            es.count()
        )));
    }
    let n = es.dim();
    let cols = count.saturating_sub(1);
    let mut r = DMatrix::zeros(n, cols);
    let mut degenerate = 0;
    for i in 0..n {
        let lead = es.vectors[(i, 0)];
        let zero = lead.abs() < RATIO_ZERO_TOL;
        degenerate += usize::from(zero);
        for c in 0..cols {
            let num = es.vectors[(i, c + 1)];
            let ratio = if zero {
                if num == 0.0 {
                    0.0
                } else {
                    threshold.copysign(num * lead.signum())
                }
            } else {
                num / lead
            };
            r[(i, c)] = ratio.clamp(-threshold, threshold);
        }
    }
    Ok((r, degenerate))
}

/// SCORE clustering from precomputed adjacency eigenpairs.
pub fn score_from_eigensystem(
    es: &EigenSystem,
    k: usize,
    n_eigs: NEigs,
    threshold: f64,
    kmeans_opts: &KMeansOptions,
) -> Result<(Partition, usize)> {
    let (r, degenerate) = score_ratios(es, n_eigs.count(k), threshold)?;
    let partition = if r.ncols() == 0 {
        kmeans(&DMatrix::zeros(es.dim(), 1), k, kmeans_opts)?
    } else {
        kmeans(&r, k, kmeans_opts)?
    };
    Ok((partition, degenerate))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreOptions {
    pub n_eigs: NEigs,
    /// Clipping threshold for the ratios; `None` means `ln n`.
    pub threshold: Option<f64>,
    pub kmeans: KMeansOptions,
    pub eigen: EigenOptions,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            n_eigs: NEigs::K,
            threshold: None,
            kmeans: KMeansOptions::default(),
            eigen: EigenOptions::default(),
        }
    }
}

pub fn default_score_threshold(n: usize) -> f64 {
    (n.max(2) as f64).ln()
}

pub fn score_cluster(g: &Graph, k: usize, opts: &ScoreOptions) -> Result<BaselineOutcome> {
    let count = opts.n_eigs.count(k);
    if k == 0 || count > g.n() {
        return Err(Error::Parameter(format!("SCORE needs {count} <= n = {}", g.n())));
    }
    let threshold = opts.threshold.unwrap_or_else(|| default_score_threshold(g.n()));
    if !(threshold > 0.0) {
        return Err(Error::Parameter(format!(
            "SCORE threshold must be positive, got {threshold}"
        )));
    }
    let es = leading_eigenpairs(g, count, &opts.eigen)?;
    let (partition, degenerate_ratios) = score_from_eigensystem(&es, k, opts.n_eigs, threshold, &opts.kmeans)?;
    if degenerate_ratios > 0 {
        log::warn!("SCORE: {degenerate_ratios} nodes have a vanishing leading eigenvector entry; ratios clipped");
    }
    Ok(BaselineOutcome {
        partition,
        eigensystem: es,
        degenerate_ratios,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RscOptions {
    pub n_eigs: NEigs,
    /// Ridge added to every degree; `None` means the mean degree.
    pub tau: Option<f64>,
    pub kmeans: KMeansOptions,
    pub eigen: EigenOptions,
}

impl Default for RscOptions {
    fn default() -> Self {
        RscOptions {
            n_eigs: NEigs::K,
            tau: None,
            kmeans: KMeansOptions::default(),
            eigen: EigenOptions::default(),
        }
    }
}

/// RSC clustering from precomputed eigenpairs of `L_tau`.
pub fn rsc_from_eigensystem(
    es: &EigenSystem,
    k: usize,
    n_eigs: NEigs,
    kmeans_opts: &KMeansOptions,
) -> Result<Partition> {
    let embedding = Embedding::unweighted(es, n_eigs.count(k))?;
    kmeans(&embedding.x_star, k, kmeans_opts)
}

pub fn rsc_cluster(g: &Graph, k: usize, opts: &RscOptions) -> Result<BaselineOutcome> {
    let count = opts.n_eigs.count(k);
    if k == 0 || count > g.n() {
        return Err(Error::Parameter(format!("RSC needs {count} <= n = {}", g.n())));
    }
    let lap = RegularizedLaplacian::with_tau(g, opts.tau)?;
    let es = leading_eigenpairs(&lap, count, &opts.eigen)?;
    let partition = rsc_from_eigensystem(&es, k, opts.n_eigs, &opts.kmeans)?;
    Ok(BaselineOutcome {
        partition,
        eigensystem: es,
        degenerate_ratios: 0,
    })
}
