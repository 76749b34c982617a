mod common;

use std::path::Path;

use isc::clustering::kmeans;
use isc::dcsbm::{population_matrices, random_params};
use isc::evaluation::{hungarian, ConfusionMatrix};
use isc::graph::{degree_stats, parse_edge_list, Indexing};
use isc::rng::rng_from_seed;
use isc::{
    clustering_error, isc_cluster, leading_eigenpairs, sample_adjacency, DVariant, EigenOptions, Embedding, Graph,
    IscOptions, KMeansOptions, LabelVector, RegularizedLaplacian,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn edge_set(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2..max_n).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..(3 * n))))
}

fn small_graph() -> impl Strategy<Value = Graph> {
    edge_set(40).prop_map(|(n, e)| Graph::from_edges(n, e).unwrap())
}

fn labels(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..k, n)
}

/// Whether some injective map sends `pred` onto `truth` exactly.
fn is_relabeling(pred: &[usize], truth: &[usize]) -> bool {
    let mut fwd = std::collections::HashMap::new();
    let mut back = std::collections::HashMap::new();
    pred.iter()
        .zip(truth)
        .all(|(&p, &t)| *fwd.entry(p).or_insert(t) == t && *back.entry(t).or_insert(p) == p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_list_ignores_line_order_and_direction(
        (n, edges) in edge_set(30),
        flips in prop::collection::vec(any::<bool>(), 90),
        shuffle_seed in any::<u64>(),
    ) {
        let text = |pairs: &[(usize, usize)]| {
            let mut s = format!("n={n}\n");
            for (i, j) in pairs {
                s.push_str(&format!("{i} {j}\n"));
            }
            s
        };
        let mut varied: Vec<(usize, usize)> = edges
            .iter()
            .zip(flips.iter().cycle())
            .map(|(&(i, j), &f)| if f { (j, i) } else { (i, j) })
            .collect();
        // Deterministic shuffle.
        let mut state = shuffle_seed | 1;
        for i in (1..varied.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            varied.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let p = Path::new("mem");
        let (a, _) = parse_edge_list(&text(&edges), Indexing::ZeroBased, p).unwrap();
        let (b, _) = parse_edge_list(&text(&varied), Indexing::ZeroBased, p).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn degree_sum_is_twice_edge_count(g in small_graph()) {
        prop_assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.n_edges());
        prop_assert_eq!(g.edges().count(), g.n_edges());
    }

    #[test]
    fn midpoint_scale_within_degree_range(g in small_graph()) {
        let s = degree_stats(&g);
        prop_assert!(s.d_min as f64 <= s.midpoint && s.midpoint <= s.d_max as f64);
        prop_assert!(s.d_min as f64 <= s.d_bar && s.d_bar <= s.d_max as f64);
    }

    #[test]
    fn laplacian_spectrum_bounded_and_shrinking(g in small_graph()) {
        let mut last = f64::INFINITY;
        for delta in [0.05, 0.1, 0.2, 0.5, 1.0, 5.0] {
            let lap = RegularizedLaplacian::new(&g, delta, DVariant::Midpoint);
            let Ok(lap) = lap else {
                // Only an edgeless graph has d = 0 and hence no ridge.
                prop_assert_eq!(g.n_edges(), 0);
                return Ok(());
            };
            let m = lap.matrix();
            let es = isc::spectral::dense_eigensystem(&m);
            prop_assert!(es.values.iter().all(|v| v.abs() <= 1.0 + 1e-12));
            let trace_sq = m.iter().map(|x| x * x).sum::<f64>();
            prop_assert!(trace_sq <= last + 1e-12);
            last = trace_sq;
        }
    }

    #[test]
    fn sign_flips_preserve_normalized_distances(g in small_graph(), mask in 0u32..16) {
        prop_assume!(g.n_edges() > 0 && g.n() >= 4);
        let lap = RegularizedLaplacian::new(&g, 0.1, DVariant::Midpoint).unwrap();
        let es = leading_eigenpairs(&lap, 4, &EigenOptions::default()).unwrap();
        let mut flipped = es.clone();
        for c in 0..4 {
            if mask & (1 << c) != 0 {
                flipped.vectors.column_mut(c).neg_mut();
            }
        }
        let ea = Embedding::weighted(&es, 3).unwrap();
        let (a, b) = (&ea.x_star, &Embedding::weighted(&flipped, 3).unwrap().x_star);
        // Zero rows are pinned to e_1 whatever the signs, so only the rest move rigidly.
        let live: Vec<usize> = (0..g.n()).filter(|&i| !ea.zero_rows[i]).collect();
        for &i in &live {
            for &j in &live {
                let da = (a.row(i) - a.row(j)).norm();
                let db = (b.row(i) - b.row(j)).norm();
                prop_assert!((da - db).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalized_rows_have_unit_norm(g in small_graph()) {
        prop_assume!(g.n_edges() > 0 && g.n() >= 3);
        let lap = RegularizedLaplacian::new(&g, 0.1, DVariant::Midpoint).unwrap();
        let es = leading_eigenpairs(&lap, 3, &EigenOptions::default()).unwrap();
        let emb = Embedding::weighted(&es, 2).unwrap();
        for i in 0..g.n() {
            let norm = emb.x_star.row(i).norm();
            prop_assert!((norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn column_sign_flip_gives_same_partition(seed in any::<u64>(), col in 0usize..3) {
        let mut rng = rng_from_seed(seed);
        let x = DMatrix::from_fn(60, 3, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let mut y = x.clone();
        y.column_mut(col).neg_mut();
        let opts = KMeansOptions { restarts: 5, max_iter: 100, seed };
        let a = kmeans(&x, 4, &opts).unwrap();
        let b = kmeans(&y, 4, &opts).unwrap();
        prop_assert_eq!(clustering_error(&a.labels, &b.to_label_vector()).unwrap().mismatches, 0);
    }

    #[test]
    fn more_restarts_never_increase_inertia(seed in any::<u64>(), r in 1usize..8) {
        let mut rng = rng_from_seed(seed);
        let x = DMatrix::from_fn(50, 2, |_, _| rand::Rng::random_range(&mut rng, 0.0..1.0));
        let opts = |restarts| KMeansOptions { restarts, max_iter: 100, seed };
        let a = kmeans(&x, 3, &opts(r)).unwrap();
        let b = kmeans(&x, 3, &opts(r + 1)).unwrap();
        prop_assert!(b.inertia <= a.inertia);
    }

    #[test]
    fn error_is_invariant_under_relabeling(
        truth in labels(30, 4),
        pred in labels(30, 4),
        perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let truth = LabelVector::from_codes(&truth.iter().map(|&l| l as i64).collect::<Vec<_>>());
        let relabeled: Vec<usize> = pred.iter().map(|&l| perm[l]).collect();
        let a = clustering_error(&pred, &truth).unwrap();
        let b = clustering_error(&relabeled, &truth).unwrap();
        prop_assert_eq!(a.mismatches, b.mismatches);
        prop_assert!(a.rate <= 1.0);
        prop_assert_eq!(a.mismatches, common::brute_force_error(&pred, truth.as_slice()));
    }

    #[test]
    fn zero_rate_iff_relabeling_of_truth(truth in labels(20, 3), perm in Just(vec![0usize, 1, 2]).prop_shuffle()) {
        let truth = LabelVector::from_codes(&truth.iter().map(|&l| l as i64).collect::<Vec<_>>());
        let pred: Vec<usize> = truth.as_slice().iter().map(|&l| perm[l]).collect();
        prop_assert_eq!(clustering_error(&pred, &truth).unwrap().rate, 0.0);
        let mut broken = pred.clone();
        broken[0] = (broken[0] + 1) % 3;
        let rate = clustering_error(&broken, &truth).unwrap().rate;
        prop_assert_eq!(rate == 0.0, is_relabeling(&broken, truth.as_slice()));
    }

    #[test]
    fn hungarian_matches_enumeration(k in 1usize..=6, cells in prop::collection::vec(0usize..20, 36)) {
        let counts: Vec<Vec<usize>> = (0..k).map(|t| cells[t * 6..t * 6 + k].to_vec()).collect();
        let cm = ConfusionMatrix::from_counts(counts.clone());
        let (matched, _) = cm.best_alignment();
        prop_assert_eq!(cm.total() - matched, common::brute_force_mismatches(&counts));
        let cost: Vec<Vec<i64>> = counts.iter().map(|r| r.iter().map(|&c| -(c as i64)).collect()).collect();
        let assign = hungarian(&cost);
        let mut seen = assign.clone();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), k);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn population_factorization_holds(seed in any::<u64>(), k in 2usize..=4, n in 20usize..80) {
        let params = random_params(&mut rng_from_seed(seed), n.max(2 * k), k);
        let pop = population_matrices(&params, 0.1).unwrap();
        prop_assert!(pop.factorization_gap < 1e-10);
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>()) {
        let params = random_params(&mut rng_from_seed(seed), 40, 2);
        prop_assert_eq!(sample_adjacency(&params, seed), sample_adjacency(&params, seed));
    }

    #[test]
    fn pipeline_is_deterministic(seed in any::<u64>()) {
        let params = random_params(&mut rng_from_seed(seed), 60, 3);
        let g = sample_adjacency(&params, seed ^ 1);
        prop_assume!(g.n_edges() > 0);
        let opts = IscOptions { kmeans: KMeansOptions { restarts: 5, max_iter: 100, seed }, ..IscOptions::default() };
        let a = isc_cluster(&g, 3, &opts).unwrap();
        let b = isc_cluster(&g, 3, &opts).unwrap();
        prop_assert_eq!(a.partition, b.partition);
    }
}
