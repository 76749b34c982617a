//! ISC against SCORE and RSC on one sampled graph from each built-in
//! experiment.

use isc::baselines::{rsc_cluster, score_cluster, NEigs, RscOptions, ScoreOptions};
use isc::harness::{builtin, builtin_names};
use isc::{clustering_error, isc_cluster, sample_adjacency, IscOptions};

fn main() -> isc::Result<()> {
    println!(
        "{:<8}{:>8}{:>8}{:>10}{:>8}{:>8}",
        "config", "isc", "score", "score_k1", "rsc", "rsc_k1"
    );
    for name in builtin_names() {
        let params = builtin(name).expect("built-in config").model.realize(5)?;
        let (k, truth) = (params.k(), params.labels());
        let g = sample_adjacency(&params, 6);
        let rate = |labels: &[usize]| clustering_error(labels, &truth).map(|e| e.rate);
        let score = |n_eigs| {
            score_cluster(
                &g,
                k,
                &ScoreOptions {
                    n_eigs,
                    ..ScoreOptions::default()
                },
            )
        };
        let rsc = |n_eigs| {
            rsc_cluster(
                &g,
                k,
                &RscOptions {
                    n_eigs,
                    ..RscOptions::default()
                },
            )
        };
        println!(
            "{name:<8}{:>8.3}{:>8.3}{:>10.3}{:>8.3}{:>8.3}",
            rate(&isc_cluster(&g, k, &IscOptions::default())?.partition.labels)?,
            rate(&score(NEigs::K)?.partition.labels)?,
            rate(&score(NEigs::KPlusOne)?.partition.labels)?,
            rate(&rsc(NEigs::K)?.partition.labels)?,
            rate(&rsc(NEigs::KPlusOne)?.partition.labels)?,
        );
    }
    Ok(())
}
