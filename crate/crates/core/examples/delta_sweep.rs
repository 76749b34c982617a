//! Error as a function of the regularizer and of the degree scale d on a
//! sampled graph.

use isc::harness::{builtin, default_delta_grid, run_d_variant_table, run_delta_sweep, sweep_tsv};
use isc::sample_adjacency;

fn main() -> isc::Result<()> {
    let params = builtin("exp2c").expect("built-in config").model.realize(3)?;
    let g = sample_adjacency(&params, 4);
    let truth = params.labels();
    let rows = run_delta_sweep(&g, &truth, params.k(), &default_delta_grid(), 0)?;
    print!("{}", sweep_tsv(&rows, g.n()));
    println!();
    print!("{}", sweep_tsv(&run_d_variant_table(&g, &truth, params.k(), 0)?, g.n()));
    Ok(())
}
