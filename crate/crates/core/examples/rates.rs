//! Scores semi-random and sMWIM pilots on one network, and compares the
//! simulated estimation error with its closed form.
//!
//! cargo run --release --example rates -- [seed]

use tpa::baselines::ServingPolicy;
use tpa::eval::{simulate_mse, PowerRule};
use tpa::experiment::{assign_scheme, evaluate, Scheme, SchemeParams};
use tpa::netgen::{generate_network, normalized_snrs, SimConfig};
use tpa::topo::sparsify_top_fraction;

fn main() -> tpa::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let cfg = SimConfig { num_rrh: 30, num_ue: 10, seed, ..SimConfig::default() };
    let net = generate_network(&cfg)?;
    let topo = sparsify_top_fraction(&net, 0.75)?;
    let params = SchemeParams { t: 5, kappa: 2, kappa_u: 20, serving_policy: ServingPolicy::default(), cellfree_iters: 10 };

    for scheme in [Scheme::SemiRandom, Scheme::Smwim] {
        let a = assign_scheme(scheme, &net, &topo, &params)?;
        let r = evaluate(&a, &net, &cfg, 500, PowerRule::default())?;
        let mut sorted = r.per_user_rate.clone();
        sorted.sort_by(f64::total_cmp);
        println!("{scheme:<12} T={} sum {:.2} bit/s/Hz, worst user {:.3}", a.pilot_dim(), r.sum_rate, sorted[0]);
    }

    let a = assign_scheme(Scheme::Smwim, &net, &topo, &params)?;
    let (rho_p, _) = normalized_snrs(&net, &cfg);
    let samples = simulate_mse(&a, &net, rho_p, 2000, 1)?;
    for s in samples.iter().take(5) {
        println!(
            "link (rrh {}, ue {}): MSE closed {:.3e}, simulated {:.3e} +/- {:.1e}",
            s.m, s.k, s.closed_form, s.empirical, s.std_error
        );
    }
    Ok(())
}
