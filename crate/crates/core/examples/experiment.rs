//! Run a shortened built-in experiment and write its result tables.
//!
//! cargo run --release --example experiment -- exp2a /tmp/exp2a

use isc::harness::{builtin, run_experiment, summary_tsv, write_outputs};

fn main() -> isc::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "exp1a".into());
    let mut cfg = builtin(&name).ok_or_else(|| isc::Error::Config(format!("unknown experiment {name}")))?;
    cfg.replicates = 5;
    cfg.restarts = 10;
    let res = run_experiment(&cfg)?;
    print!("{}", summary_tsv(&res));
    if let Some(dir) = args.next() {
        let files = write_outputs(&res, dir.as_ref())?;
        println!("wrote {} files to {dir}", files.len());
    }
    Ok(())
}
