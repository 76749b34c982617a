//! Compare the weak-signal quantity 1 - |lambda_{K+1} / lambda_K| from the
//! adjacency matrix and from the regularized Laplacian on sampled graphs.

use isc::harness::builtin;
use isc::{leading_eigenpairs, sample_adjacency, weak_signal_quantity, DVariant, EigenOptions, RegularizedLaplacian};

fn main() -> isc::Result<()> {
    let opts = EigenOptions::default();
    for name in ["exp1a", "exp1b"] {
        let cfg = builtin(name).expect("built-in config");
        let params = cfg.model.realize(1)?;
        let k = params.k();
        let g = sample_adjacency(&params, 2);
        let lap = RegularizedLaplacian::new(&g, 0.1, DVariant::Midpoint)?;
        let from_a = weak_signal_quantity(&leading_eigenpairs(&g, k + 1, &opts)?, k)?;
        let from_l = weak_signal_quantity(&leading_eigenpairs(&lap, k + 1, &opts)?, k)?;
        println!("{name}: A {from_a:.4}  L {from_l:.4}");
    }
    Ok(())
}
