//! Monte Carlo checks of the block model sampler against the analytic
//! edge probabilities.

use isc::harness::builtin;
use isc::rng::derive_seed;
use isc::{population_matrices, sample_adjacency, DcsbmParams};

/// Edge counts per unordered pair (row-major upper triangle) over `m` samples.
fn edge_counts(params: &DcsbmParams, m: usize, seed: u64) -> Vec<u32> {
    let n = params.n();
    let mut counts = vec![0u32; n * n];
    for s in 0..m {
        let g = sample_adjacency(params, derive_seed(seed, s as u64));
        for (i, j) in g.edges() {
            counts[i * n + j] += 1;
        }
    }
    counts
}

/// Fraction of pairs whose empirical frequency is within `z` standard errors.
fn fraction_within(params: &DcsbmParams, counts: &[u32], m: usize, z: f64) -> f64 {
    let n = params.n();
    let omega = population_matrices(params, 0.1).unwrap().omega;
    let mut ok = 0usize;
    let mut total = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let p = omega[(i, j)];
            let freq = counts[i * n + j] as f64 / m as f64;
            let se = (p * (1.0 - p) / m as f64).sqrt();
            total += 1;
            ok += usize::from((freq - p).abs() <= z * se);
        }
    }
    ok as f64 / total as f64
}

#[test]
fn experiment_1a_mean_adjacency_matches_omega() {
    let params = builtin("exp1a").unwrap().model.realize(1).unwrap();
    assert_eq!(params.n(), 400);
    let m = 500;
    let counts = edge_counts(&params, m, 2);
    let frac = fraction_within(&params, &counts, m, 3.0);
    // Under the model about 0.27% of pairs fall outside 3 standard errors.
    assert!(frac >= 0.99, "only {frac} of pairs within 3 SE");

    // Block totals aggregate tens of thousands of pairs, so any bias shows up.
    let n = params.n();
    let omega = population_matrices(&params, 0.1).unwrap().omega;
    let g = params.membership();
    for (a, b) in [(0, 0), (0, 1), (1, 1)] {
        let (mut mean, mut var, mut expected) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if (g[i].min(g[j]), g[i].max(g[j])) == (a, b) {
                    let p = omega[(i, j)];
                    expected += p;
                    var += p * (1.0 - p);
                    mean += counts[i * n + j] as f64 / m as f64;
                }
            }
        }
        let se = (var / m as f64).sqrt();
        assert!(
            (mean - expected).abs() <= 3.0 * se,
            "block ({a},{b}): {mean} vs {expected} (se {se})"
        );
    }
}

#[test]
fn pair_frequencies_converge_at_one_thousand_samples() {
    let mut cfg = builtin("exp1b").unwrap().model;
    cfg.n = 150;
    let params = cfg.realize(4).unwrap();
    let m = 1000;
    let counts = edge_counts(&params, m, 5);
    let frac = fraction_within(&params, &counts, m, 4.0);
    assert!(frac >= 0.99, "only {frac} of pairs within 4 SE");
}

#[test]
fn same_seed_same_graph() {
    let params = builtin("exp2c").unwrap().model.realize(0).unwrap();
    let a = sample_adjacency(&params, 77);
    let b = sample_adjacency(&params, 77);
    assert_eq!(a, b);
    assert_ne!(a, sample_adjacency(&params, 78));
}
