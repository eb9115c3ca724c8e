//! Coloring and coded-multicast pilots on the small hand-built topology,
//! checked with the rank feasibility test.
//!
//! cargo run --example coloring

use tpa::topo::{build_conflict_graph, coded_multicast_assignment, color_assignment, default_estimation_pattern, four_ue_example, verify_assignment};

fn main() -> tpa::Result<()> {
    let (topo, pat) = four_ue_example();
    let cg = build_conflict_graph(&topo, &pat);
    println!("{} estimated links, {} conflicts", cg.vertices.len(), cg.num_edges());

    let colored = color_assignment(&cg)?;
    println!("coloring uses T = {}", colored.pilot_dim());
    println!("{}", colored.x);
    println!("feasible: {}", verify_assignment(&colored.x, &topo, &pat)?.feasible);

    let coded = coded_multicast_assignment(&topo)?;
    let full = default_estimation_pattern(&topo);
    println!("coded multicast uses T = {}, every link estimated", coded.pilot_dim());
    println!("feasible: {}", verify_assignment(&coded.x, &topo, &full)?.feasible);
    Ok(())
}
