//! Monte Carlo coverage of the eigenvalue concentration bounds, plus the
//! Hamming error bounds evaluated on one sample.

use isc::evaluation::eigen_perturbation_check;
use isc::harness::builtin;
use isc::{hamming_bound, isc_cluster, sample_adjacency, IscOptions};

fn main() -> isc::Result<()> {
    let params = builtin("exp1b").expect("built-in config").model.realize(0)?;
    let cov = eigen_perturbation_check(&params, 0.1, 0.05, 40, 1)?;
    println!(
        "effective degree {:.2} (applicable: {}), max bound {:.3}, sum-of-squares bound {:.3}",
        cov.effective_degree, cov.applicable, cov.max_bound, cov.sum_sq_bound
    );
    println!("{}/{} trials inside both bounds", cov.hits(), cov.deviations.len());

    let g = sample_adjacency(&params, 2);
    let out = isc_cluster(&g, params.k(), &IscOptions::default())?;
    let shortest = (0..g.n())
        .map(|i| out.embedding.x.row(i).norm())
        .fold(f64::INFINITY, f64::min);
    let b = hamming_bound(&out.eigensystem, params.k(), g.n(), shortest)?;
    println!("hamming bounds: strong {:.3e}, weak {:.3e}", b.strong, b.weak);
    Ok(())
}
