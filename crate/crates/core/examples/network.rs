//! Draws one deployment and prints its link budget.
//!
//! cargo run --release --example network -- [seed]

use tpa::netgen::{generate_network, normalized_snrs, path_loss_db, SimConfig};

fn main() -> tpa::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let cfg = SimConfig { seed, ..SimConfig::default() };
    println!("Hata constant {:.2} dB, noise {:.2} dBm", cfg.hata_constant_db(), cfg.noise_power_dbm());
    for d in [0.005, 0.01, 0.05, 0.2, 1.0] {
        println!("  path loss at {d:>5} km: {:8.2} dB", path_loss_db(d, &cfg)?);
    }

    let net = generate_network(&cfg)?;
    let (rho_p, rho_d) = normalized_snrs(&net, &cfg);
    println!("{} RRHs, {} UEs, rho_p = {rho_p:.3e}, rho_d = {rho_d:.3e}", net.num_rrh(), net.num_ue());
    for k in 0..net.num_ue().min(5) {
        let row = net.beta.row(k);
        let best = row.iter().cloned().fold(f64::MIN, f64::max);
        println!("  UE {k}: strongest link {:.1} dB", 10.0 * best.log10());
    }
    Ok(())
}
