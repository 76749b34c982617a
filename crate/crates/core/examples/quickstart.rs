//! Cluster a small graph given as an edge list.
//!
//! cargo run --example quickstart

use isc::graph::{parse_edge_list, Indexing};
use isc::{isc_cluster, IscOptions};
use std::path::Path;

const EDGES: &str = "\
# two 5-cliques joined by a single bridge
0 1\n0 2\n0 3\n0 4\n1 2\n1 3\n1 4\n2 3\n2 4\n3 4
5 6\n5 7\n5 8\n5 9\n6 7\n6 8\n6 9\n7 8\n7 9\n8 9
4 5
";

fn main() -> isc::Result<()> {
    let (g, _) = parse_edge_list(EDGES, Indexing::ZeroBased, Path::new("inline"))?;
    let out = isc_cluster(&g, 2, &IscOptions::default())?;
    println!("labels   {:?}", out.partition.labels);
    println!("sizes    {:?}", out.partition.sizes);
    println!("eigvals  {:?}", out.eigensystem.values.as_slice());
    println!("ridge    {:?}", out.ridge);
    Ok(())
}
