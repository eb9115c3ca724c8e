//! Finds the pilot dimension by matrix completion, then recovers binary
//! pilots from the completed matrix.
//!
//! cargo run --release --example completion

use tpa::lrmc::{check_completion, complete, factorize_binary, CompletionOptions, CompletionProblem};
use tpa::topo::{four_ue_example, verify_assignment};

fn main() -> tpa::Result<()> {
    let (topo, pat) = four_ue_example();
    let prob = CompletionProblem::new(&topo, &pat)?;
    println!("{} rows, lower bound T >= {}", prob.num_rows(), prob.rank_lower_bound());

    let res = complete(&prob, &CompletionOptions::default(), 0);
    let check = check_completion(&prob, &res.a, res.t);
    println!(
        "T = {} (converged {}, {} iterations), sigma ratio {:.1e}, passes {}",
        res.t,
        res.converged,
        res.iterations_used,
        check.rank_ratio,
        check.passes(1e-6, 1e-4)
    );

    // Columns of a generic completion are arbitrary points of a T-dimensional
    // space, not 0/1 combinations of T vectors, so this usually fails.
    match factorize_binary(&res.a, res.t, &topo, &pat, 30, 0) {
        Ok(f) => {
            println!("binary pilots (residual {:.1e}):{}", f.relative_residual, f.x);
            println!("feasible: {}", verify_assignment(&f.x, &topo, &pat)?.feasible);
        }
        Err(e) => println!("{e}; pair the dimension with coloring or semi-random pilots instead"),
    }
    Ok(())
}
