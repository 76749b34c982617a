//! Cluster a labelled network from a data directory.
//!
//! cargo run --example load_dataset -- crates/core/tests/data karate 2

use isc::datasets::load_dataset;
use isc::graph::degree_stats;
use isc::{clustering_error, isc_cluster, IscOptions};
use std::path::PathBuf;

fn main() -> isc::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(
        args.next()
            .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data").into()),
    );
    let name = args.next().unwrap_or_else(|| "karate".into());
    let ds = load_dataset(&dir, &name)?.largest_component();
    let k = args.next().and_then(|s| s.parse().ok()).unwrap_or(ds.k());
    let s = degree_stats(&ds.graph);
    println!(
        "{name}: n={} edges={} K={k} dmin={} dmax={}",
        ds.graph.n(),
        ds.graph.n_edges(),
        s.d_min,
        s.d_max
    );
    let out = isc_cluster(&ds.graph, k, &IscOptions::default())?;
    let e = clustering_error(&out.partition.labels, &ds.labels)?;
    println!("ISC errors {}/{} (rate {:.4})", e.mismatches, e.n, e.rate);
    Ok(())
}
