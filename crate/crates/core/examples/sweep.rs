//! Runs a sweep file and prints the summary table.
//!
//! cargo run --release --example sweep -- configs/desk.toml

use std::path::PathBuf;
use std::time::Instant;

use tpa::experiment::{run_and_write, ExperimentSpec};

fn main() -> tpa::Result<()> {
    let path = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "configs/desk.toml".into()));
    let spec = ExperimentSpec::load(&path)?;
    if let Some(dir) = spec.output.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let start = Instant::now();
    let out = run_and_write(&spec)?;
    println!("{} rows in {:.1}s", out.rows.len(), start.elapsed().as_secs_f64());
    println!("{:<16} {:>5} {:>5} {:>4} {:>9} {:>8} {:>8} {:>8}", "scheme", "G", "kappa", "T", "sum", "p10", "p50", "p90");
    for s in &out.summary {
        println!(
            "{:<16} {:>5} {:>5} {:>4} {:>9.3} {:>8.4} {:>8.4} {:>8.4}",
            s.scheme,
            s.g_fraction,
            s.kappa.map_or("-".into(), |k| k.to_string()),
            s.t.map_or("-".into(), |t| t.to_string()),
            s.mean_sum_rate,
            s.rate_90_likely,
            s.median_rate,
            s.rate_10_likely
        );
    }
    Ok(())
}
