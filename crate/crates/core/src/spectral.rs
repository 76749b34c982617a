//! Regularized graph Laplacian and leading eigenpairs by magnitude.

use std::cmp::Ordering;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{degree_stats, Graph};
use crate::rng::rng_from_seed;

/// Below this value of `1 - |lambda_{K+1} / lambda_K|` a network counts as weak signal.
pub const WEAK_SIGNAL_THRESHOLD: f64 = 0.1;

/// Which degree summary scales the ridge term `delta * d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DVariant {
    /// `(d_max + d_min) / 2`
    #[default]
    Midpoint,
    Dmax,
    Dmin,
    Dbar,
}

impl DVariant {
    pub const ALL: [DVariant; 4] = [DVariant::Midpoint, DVariant::Dmax, DVariant::Dmin, DVariant::Dbar];

    pub fn name(self) -> &'static str {
        match self {
            DVariant::Midpoint => "midpoint",
            DVariant::Dmax => "dmax",
            DVariant::Dmin => "dmin",
            DVariant::Dbar => "dbar",
        }
    }

    /// Picks the scale from a list of (observed or expected) degrees.
    pub fn scale_from_degrees(self, degrees: &[f64]) -> f64 {
        if degrees.is_empty() {
            return 0.0;
        }
        let min = degrees.iter().copied().fold(f64::INFINITY, f64::min);
        let max = degrees.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match self {
            DVariant::Midpoint => (min + max) / 2.0,
            DVariant::Dmax => max,
            DVariant::Dmin => min,
            DVariant::Dbar => degrees.iter().sum::<f64>() / degrees.len() as f64,
        }
    }
}

impl std::str::FromStr for DVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(DVariant::Midpoint),
            "dmax" => Ok(DVariant::Dmax),
            "dmin" => Ok(DVariant::Dmin),
            "dbar" => Ok(DVariant::Dbar),
            other => Err(Error::Parameter(format!("unknown d variant {other:?}"))),
        }
    }
}

/// How the ridge added to every degree was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Ridge {
    /// `delta * d` with `d` taken from the degree summary `variant`.
    Scaled { delta: f64, variant: DVariant, d: f64 },
    /// A fixed `tau`, as in regularized spectral clustering.
    Explicit { tau: f64 },
}

impl Ridge {
    pub fn value(&self) -> f64 {
        match *self {
            Ridge::Scaled { delta, d, .. } => delta * d,
            Ridge::Explicit { tau } => tau,
        }
    }
}

/// Symmetric linear operator that the eigensolver can work with.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    /// `y = M x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn to_dense(&self) -> DMatrix<f64>;
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            *yi = 0.0;
            for (j, xj) in x.iter().enumerate() {
                *yi += self[(i, j)] * xj;
            }
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

/// The adjacency matrix.
impl SymmetricOperator for Graph {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.neighbors(i).iter().map(|&j| x[j]).sum();
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        Graph::to_dense(self)
    }
}

/// `L = (D + ridge I)^{-1/2} A (D + ridge I)^{-1/2}`, kept in sparse form.
#[derive(Debug, Clone)]
pub struct RegularizedLaplacian {
    graph: Graph,
    scale: Vec<f64>,
    ridge: Ridge,
}

impl RegularizedLaplacian {
    /// Ridge `delta * d` where `d` follows `variant` over the observed degrees.
    pub fn new(g: &Graph, delta: f64, variant: DVariant) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Parameter(format!("delta must be finite and >= 0, got {delta}")));
        }
        let stats = degree_stats(g);
        let d = match variant {
            DVariant::Midpoint => stats.midpoint,
            DVariant::Dmax => stats.d_max as f64,
            DVariant::Dmin => stats.d_min as f64,
            DVariant::Dbar => stats.d_bar,
        };
        Self::with_ridge(g, Ridge::Scaled { delta, variant, d })
    }

    /// Ridge `tau`; with `tau = None` the mean degree is used.
    pub fn with_tau(g: &Graph, tau: Option<f64>) -> Result<Self> {
        let tau = tau.unwrap_or_else(|| degree_stats(g).d_bar);
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::Parameter(format!("tau must be finite and >= 0, got {tau}")));
        }
        Self::with_ridge(g, Ridge::Explicit { tau })
    }

    fn with_ridge(g: &Graph, ridge: Ridge) -> Result<Self> {
        let r = ridge.value();
        let scale = (0..g.n())
            .map(|i| {
                let denom = g.degree(i) as f64 + r;
                if denom > 0.0 {
                    Ok(1.0 / denom.sqrt())
                } else {
                    Err(Error::Singular {
                        node: i,
                        degree: g.degree(i) as f64,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RegularizedLaplacian {
            graph: g.clone(),
            scale,
            ridge,
        })
    }

    pub fn ridge(&self) -> Ridge {
        self.ridge
    }

    /// The regularization scale `d` actually used (for explicit `tau`, `tau` itself).
    pub fn d_used(&self) -> f64 {
        match self.ridge {
            Ridge::Scaled { d, .. } => d,
            Ridge::Explicit { tau } => tau,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if self.graph.has_edge(i, j) {
            self.scale[i] * self.scale[j]
        } else {
            0.0
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        self.to_dense()
    }
}

impl SymmetricOperator for RegularizedLaplacian {
    fn dim(&self) -> usize {
        self.graph.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let s: f64 = self.graph.neighbors(i).iter().map(|&j| self.scale[j] * x[j]).sum();
            *yi = self.scale[i] * s;
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.graph.n();
        let mut m = DMatrix::zeros(n, n);
        for (i, j) in self.graph.edges() {
            let v = self.scale[i] * self.scale[j];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }
}

/// Leading eigenpairs, ordered by decreasing magnitude. Column `k` of
/// `vectors` belongs to `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.vectors.column(k).into_owned()
    }

    /// First `k` pairs.
    pub fn truncate(&self, k: usize) -> EigenSystem {
        EigenSystem {
            values: self.values[..k].to_vec(),
            vectors: self.vectors.columns(0, k).into_owned(),
        }
    }

    /// Largest `‖M v_k - λ_k v_k‖` over the retained pairs.
    pub fn max_residual(&self, op: &dyn SymmetricOperator) -> f64 {
        let n = self.dim();
        let mut y = vec![0.0; n];
        let mut worst = 0.0f64;
        for (k, &lambda) in self.values.iter().enumerate() {
            let v: Vec<f64> = self.vectors.column(k).iter().copied().collect();
            op.apply(&v, &mut y);
            let r = y
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    }

    /// Plain-text artifact: `n k`, then the values, then `n` rows of `k` vector entries.
    pub fn to_text(&self) -> String {
        let (n, k) = (self.dim(), self.count());
        let mut s = String::new();
        writeln!(s, "{n} {k}").unwrap();
        let vals: Vec<String> = self.values.iter().map(|v| format!("{v:e}")).collect();
        writeln!(s, "{}", vals.join(" ")).unwrap();
        for i in 0..n {
            let row: Vec<String> = (0..k).map(|c| format!("{:e}", self.vectors[(i, c)])).collect();
            writeln!(s, "{}", row.join(" ")).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<EigenSystem> {
        let bad = |m: &str| Error::Parameter(format!("eigensystem artifact: {m}"));
        let mut lines = text.lines();
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("missing header"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad header")))
            .collect::<Result<_>>()?;
        let [n, k] = header[..] else {
            return Err(bad("header must be `n k`"));
        };
        let floats = |line: Option<&str>, want: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = line
                .ok_or_else(|| bad("truncated"))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad("bad number")))
                .collect::<Result<_>>()?;
            if v.len() != want {
                return Err(bad("wrong row length"));
            }
            Ok(v)
        };
        let values = floats(lines.next(), k)?;
        let mut vectors = DMatrix::zeros(n, k);
        for i in 0..n {
            for (c, x) in floats(lines.next(), k)?.into_iter().enumerate() {
                vectors[(i, c)] = x;
            }
        }
        Ok(EigenSystem { values, vectors })
    }
}

/// Eigensolver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Matrices up to this dimension are decomposed densely; larger ones use Lanczos.
    pub dense_limit: usize,
    /// Residual tolerance for the Lanczos path.
    pub tol: f64,
    /// Lanczos iteration cap; `None` means `10 n`.
    pub max_iter: Option<usize>,
    /// Seeds the Lanczos start vector.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            dense_limit: 4096,
            tol: 1e-10,
            max_iter: None,
            seed: 0x15C,
        }
    }
}

/// Residual above which a returned pair is rejected outright.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

const TIE_TOL: f64 = 1e-12;

/// Orders eigenvalue indices by decreasing magnitude; magnitudes within
/// `1e-12` count as tied and go positive first, then by index.
pub(crate) fn magnitude_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut start = 0;
    while start < idx.len() {
        let head = values[idx[start]].abs();
        let mut end = start + 1;
        while end < idx.len() && (head - values[idx[end]].abs()).abs() <= TIE_TOL {
            end += 1;
        }
        idx[start..end].sort_by_key(|&i| (values[i] < 0.0, i));
        start = end;
    }
    idx
}

/// Flips each column so that its entry of largest magnitude (first one on ties) is positive.
pub fn canonicalize_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() + 1e-14 {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

fn from_full_decomposition(values: &[f64], vectors: &DMatrix<f64>, k: usize) -> EigenSystem {
    // Index by ascending eigenvalue so "original index" is solver-independent.
    let mut asc: Vec<usize> = (0..values.len()).collect();
    asc.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let sorted_vals: Vec<f64> = asc.iter().map(|&i| values[i]).collect();
    let order = magnitude_order(&sorted_vals);
    let n = vectors.nrows();
    let mut out = DMatrix::zeros(n, k);
    let mut vals = Vec::with_capacity(k);
    for (c, &o) in order.iter().take(k).enumerate() {
        let src = asc[o];
        vals.push(values[src]);
        out.set_column(c, &vectors.column(src));
    }
    canonicalize_signs(&mut out);
    EigenSystem {
        values: vals,
        vectors: out,
    }
}

/// All eigenpairs of a dense symmetric matrix, ordered by magnitude.
pub fn dense_eigensystem(m: &DMatrix<f64>) -> EigenSystem {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    from_full_decomposition(&values, &eig.eigenvectors, n)
}

/// The `k` eigenpairs of largest magnitude.
pub fn leading_eigenpairs<O: SymmetricOperator + ?Sized>(op: &O, k: usize, opts: &EigenOptions) -> Result<EigenSystem> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::Parameter(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let es = if n <= opts.dense_limit {
        dense_eigensystem(&op.to_dense()).truncate(k)
    } else {
        lanczos(op, k, opts)?
    };
    let residual = es.max_residual(&DynOp(op));
    if residual > RESIDUAL_LIMIT {
        return Err(Error::Numerical {
            iterations: 0,
            residual,
            message: "eigenpair residual above limit".into(),
        });
    }
    Ok(es)
}

struct DynOp<'a, O: ?Sized>(&'a O);

impl<O: SymmetricOperator + ?Sized> SymmetricOperator for DynOp<'_, O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y)
    }
    fn to_dense(&self) -> DMatrix<f64> {
        self.0.to_dense()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthogonalizes `w` against `basis` twice (classical Gram-Schmidt, repeated).
fn reorthogonalize(basis: &[Vec<f64>], w: &mut [f64]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, w);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= c * qi;
            }
        }
    }
}

/// Lanczos with full reorthogonalization. The Krylov dimension grows until
/// the wanted Ritz pairs meet the residual tolerance.
fn lanczos<O: SymmetricOperator + ?Sized>(op: &O, k: usize, opts: &EigenOptions) -> Result<EigenSystem> {
    let n = op.dim();
    let max_iter = opts.max_iter.unwrap_or(10 * n).max(1);
    let mut rng = rng_from_seed(opts.seed);
    let mut random_unit = |basis: &[Vec<f64>]| -> Option<Vec<f64>> {
        for _ in 0..10 {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            reorthogonalize(basis, &mut v);
            let nv = norm(&v);
            if nv > 1e-8 {
                v.iter_mut().for_each(|x| *x /= nv);
                return Some(v);
            }
        }
        None
    };

    let mut basis: Vec<Vec<f64>> = vec![random_unit(&[]).expect("n >= 1")];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new(); // beta[j] couples basis[j] and basis[j + 1]
    let mut target = n.min((2 * k + 20).max(k + 30));
    let mut w = vec![0.0; n];
    let mut iterations = 0;
    let mut last_residual = f64::INFINITY;

    loop {
        while basis.len() <= target && alpha.len() < basis.len() {
            let j = alpha.len();
            op.apply(&basis[j], &mut w);
            iterations += 1;
            let a = dot(&basis[j], &w);
            alpha.push(a);
            reorthogonalize(&basis, &mut w);
            if basis.len() == n {
                break;
            }
            let b = norm(&w);
            if b > 1e-10 {
                beta.push(b);
                basis.push(w.iter().map(|x| x / b).collect());
            } else {
                // Invariant subspace found; continue from a fresh orthogonal direction.
                match random_unit(&basis) {
                    Some(v) => {
                        beta.push(0.0);
                        basis.push(v);
                    }
                    None => break,
                }
            }
            if alpha.len() >= target {
                break;
            }
        }

        let m = alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let ritz = dense_eigensystem(&t);
        let kk = k.min(m);
        let mut vectors = DMatrix::zeros(n, kk);
        for c in 0..kk {
            for (j, q) in basis.iter().take(m).enumerate() {
                let s = ritz.vectors[(j, c)];
                for i in 0..n {
                    vectors[(i, c)] += s * q[i];
                }
            }
            let nv = vectors.column(c).norm();
            vectors.column_mut(c).unscale_mut(nv);
        }
        canonicalize_signs(&mut vectors);
        let es = EigenSystem {
            values: ritz.values[..kk].to_vec(),
            vectors,
        };
        if kk == k {
            last_residual = es.max_residual(&DynOp(op));
            if last_residual <= opts.tol || m >= n {
                return Ok(es);
            }
        }
        if iterations >= max_iter || m >= n {
            return Err(Error::Numerical {
                iterations,
                residual: last_residual,
                message: format!("Lanczos did not converge for k = {k}, Krylov dimension {m}"),
            });
        }
        target = n.min(target * 2).min(m + max_iter - iterations);
    }
}

/// `1 - |lambda_{K+1} / lambda_K|`.
pub fn weak_signal_quantity(es: &EigenSystem, k: usize) -> Result<f64> {
    if k == 0 || es.count() < k + 1 {
        return Err(Error::Dimension(format!(
            "need {} eigenvalues, have {}",
            k + 1,
            es.count()
        )));
    }
    let lk = es.values[k - 1];
    if lk.abs() < 1e-12 {
        return Err(Error::UndefinedRatio(lk.abs()));
    }
    Ok(1.0 - (es.values[k] / lk).abs())
}

pub fn is_weak_signal(quantity: f64) -> bool {
    quantity < WEAK_SIGNAL_THRESHOLD
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn complete(n: usize) -> Graph {
        let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        Graph::from_edges(n, edges.collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_edge_laplacian() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let l = RegularizedLaplacian::new(&g, 0.1, DVariant::Midpoint).unwrap();
        assert_eq!(l.d_used(), 1.0);
        let m = l.matrix();
        assert_abs_diff_eq!(m[(0, 1)], 1.0 / 1.1, epsilon = 1e-15);
        assert_eq!(m[(0, 0)], 0.0);
    }

    #[test]
    fn zero_delta_is_normalized_adjacency() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap();
        let l = RegularizedLaplacian::new(&g, 0.0, DVariant::Midpoint).unwrap().matrix();
        let d = g.degrees();
        for (i, j) in g.edges() {
            assert_abs_diff_eq!(l[(i, j)], 1.0 / ((d[i] * d[j]) as f64).sqrt(), epsilon = 1e-15);
        }
    }

    #[test]
    fn isolated_node_without_ridge_is_singular() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        match RegularizedLaplacian::new(&g, 0.0, DVariant::Midpoint) {
            Err(Error::Singular { node, .. }) => assert_eq!(node, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(RegularizedLaplacian::new(&g, 0.1, DVariant::Midpoint).is_ok());
    }

    #[test]
    fn complete_graph_spectrum() {
        let n = 7;
        let l = RegularizedLaplacian::new(&complete(n), 0.0, DVariant::Midpoint).unwrap();
        let es = leading_eigenpairs(&l, n, &EigenOptions::default()).unwrap();
        assert_abs_diff_eq!(es.values[0], 1.0, epsilon = 1e-12);
        for &v in &es.values[1..] {
            assert_abs_diff_eq!(v, -1.0 / (n as f64 - 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn ties_break_positive_first() {
        let order = magnitude_order(&[-0.5, 0.2, 0.5, -0.9]);
        assert_eq!(order, vec![3, 2, 0, 1]);
    }

    #[test]
    fn canonical_sign_makes_largest_entry_positive() {
        let mut v = DMatrix::from_column_slice(3, 1, &[0.1, -0.9, 0.3]);
        canonicalize_signs(&mut v);
        assert!(v[(1, 0)] > 0.0);
    }

    #[test]
    fn weak_signal_equal_magnitudes_is_zero() {
        let es = EigenSystem {
            values: vec![1.0, 0.4, -0.4],
            vectors: DMatrix::identity(3, 3),
        };
        assert_abs_diff_eq!(weak_signal_quantity(&es, 2).unwrap(), 0.0);
        assert!(is_weak_signal(0.0));
        let degenerate = EigenSystem {
            values: vec![1.0, 0.0, 0.0],
            vectors: DMatrix::identity(3, 3),
        };
        assert!(matches!(
            weak_signal_quantity(&degenerate, 2),
            Err(Error::UndefinedRatio(_))
        ));
        assert!(matches!(weak_signal_quantity(&es, 3), Err(Error::Dimension(_))));
    }

    #[test]
    fn artifact_text_round_trips() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (0, 2)]).unwrap();
        let l = RegularizedLaplacian::new(&g, 0.1, DVariant::Midpoint).unwrap();
        let es = leading_eigenpairs(&l, 3, &EigenOptions::default()).unwrap();
        let back = EigenSystem::from_text(&es.to_text()).unwrap();
        assert_eq!(back, es);
    }

    #[test]
    fn k_out_of_range_is_rejected() {
        let g = complete(3);
        assert!(leading_eigenpairs(&g, 0, &EigenOptions::default()).is_err());
        assert!(leading_eigenpairs(&g, 4, &EigenOptions::default()).is_err());
    }
}
