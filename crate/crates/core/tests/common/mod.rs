//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's numerical code.

#![allow(dead_code)]

use std::path::PathBuf;

/// Cyclic Jacobi eigenvalue iteration for a dense symmetric matrix given as
/// rows. Returns `(values, vectors)` with `vectors[c]` the c-th eigenvector,
/// in no particular order.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[i][i]).collect();
    let vectors = (0..n).map(|c| (0..n).map(|r| v[r][c]).collect()).collect();
    (values, vectors)
}

/// Jacobi eigenpairs sorted by decreasing magnitude.
pub fn jacobi_by_magnitude(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (values, vectors) = jacobi_eigen(a);
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&x, &y| values[y].abs().partial_cmp(&values[x].abs()).unwrap());
    (
        idx.iter().map(|&i| values[i]).collect(),
        idx.iter().map(|&i| vectors[i].clone()).collect(),
    )
}

/// Max-norm distance between two vectors, minimized over a global sign flip.
pub fn sign_free_distance(u: &[f64], v: &[f64]) -> f64 {
    let plus = u.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let minus = u.iter().zip(v).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
    plus.min(minus)
}

/// Minimum mismatches over every injective relabeling, by enumeration.
/// `counts[t][p]` is the confusion matrix.
pub fn brute_force_mismatches(counts: &[Vec<usize>]) -> usize {
    let kt = counts.len();
    let kp = counts.first().map_or(0, |r| r.len());
    let total: usize = counts.iter().flatten().sum();
    let size = kt.max(kp);
    let get = |t: usize, p: usize| if t < kt && p < kp { counts[t][p] } else { 0 };
    let mut perm: Vec<usize> = (0..size).collect();
    let mut best = 0;
    permute(&mut perm, 0, &mut |p| {
        let matched: usize = (0..size).map(|t| get(t, p[t])).sum();
        best = best.max(matched);
    });
    total - best
}

fn permute(v: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
    if start == v.len() {
        f(v);
        return;
    }
    for i in start..v.len() {
        v.swap(start, i);
        permute(v, start + 1, f);
        v.swap(start, i);
    }
}

/// Misclassification count by enumerating every relabeling of `pred`.
pub fn brute_force_error(pred: &[usize], truth: &[usize]) -> usize {
    let kt = truth.iter().max().map_or(0, |m| m + 1);
    let kp = pred.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0; kp]; kt];
    for (&t, &p) in truth.iter().zip(pred) {
        counts[t][p] += 1;
    }
    brute_force_mismatches(&counts)
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}
