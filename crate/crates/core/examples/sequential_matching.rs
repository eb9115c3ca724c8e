//! Runs sMWIM and the greedy matcher on one random network and prints the
//! per-round trace of each.
//!
//! cargo run --release --example sequential_matching -- [seed]

use std::time::Instant;

use tpa::greedy::{greedy_assign, GreedyConfig};
use tpa::netgen::{generate_network, SimConfig};
use tpa::smwim::{sequential_assign, BendersOptions};
use tpa::topo::sparsify_top_fraction;

fn main() -> tpa::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = SimConfig {
        num_rrh: 50,
        num_ue: 20,
        seed,
        ..SimConfig::default()
    };
    let net = generate_network(&cfg)?;
    for g in [0.3, 0.75] {
        let topo = sparsify_top_fraction(&net, g)?;
        for kappa in [1, 2] {
            let start = Instant::now();
            let res = sequential_assign(&topo, 20, kappa, &BendersOptions::default())?;
            println!(
                "smwim  G={g:.2} kappa={kappa}: {} rounds, {:.3}s, converged={}",
                res.pilot_dim(),
                start.elapsed().as_secs_f64(),
                res.converged
            );
            for t in &res.trace {
                println!("  round {:2}  objective {:8.4}  cuts {:3}", t.round, t.objective, t.cuts);
            }
            let start = Instant::now();
            let gr = greedy_assign(&topo, &GreedyConfig::new(20, kappa, 20))?;
            println!(
                "greedy G={g:.2} kappa={kappa}: {} rounds, {:.3}s",
                gr.pilot_dim(),
                start.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
