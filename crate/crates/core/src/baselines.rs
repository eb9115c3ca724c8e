//! Reference single-pilot-per-UE schemes.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lrmc::{complete, CompletionOptions, CompletionProblem};
use crate::netgen::NetworkRealization;
use crate::rng::rng_from_seed;
use crate::topo::{EstimationPattern, PilotAssignment, Topology};

/// Which connected UEs an RRH serves under a baseline assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ServingPolicy {
    /// Connected UEs whose pilot no other connected UE overlaps.
    #[default]
    Uncontaminated,
    /// Every connected UE.
    AllConnected,
}

/// Fills `serving` from the topology according to `policy`.
pub fn apply_serving_policy(mut assign: PilotAssignment, topo: &Topology, policy: ServingPolicy) -> Result<PilotAssignment> {
    if assign.x.nrows() != topo.num_ue() {
        return Err(Error::Shape("assignment and topology disagree on K".into()));
    }
    let overlaps = |a: usize, b: usize| assign.x.row(a).iter().zip(assign.x.row(b).iter()).any(|(p, q)| p * q != 0.0);
    let has_pilot = |k: usize| assign.x.row(k).iter().any(|&v| v != 0.0);
    assign.serving = (0..topo.num_rrh())
        .map(|m| {
            let connected = topo.rrh_neighbors(m);
            connected
                .iter()
                .copied()
                .filter(|&k| has_pilot(k))
                .filter(|&k| policy == ServingPolicy::AllConnected || connected.iter().all(|&j| j == k || !overlaps(k, j)))
                .collect()
        })
        .collect();
    Ok(assign)
}

fn one_hot(pilots: &[usize], t: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(pilots.len(), t);
    for (k, &p) in pilots.iter().enumerate() {
        x[(k, p)] = 1.0;
    }
    x
}

fn pilots_of(x: &DMatrix<f64>) -> Vec<usize> {
    (0..x.nrows()).map(|k| x.row(k).iter().position(|&v| v != 0.0).unwrap_or(0)).collect()
}

/// Users shuffled, then dealt pilots round-robin: group sizes differ by at most one.
///
/// Serving sets are left empty; see [`apply_serving_policy`].
pub fn semi_random_assign(num_ue: usize, t: usize, seed: u64) -> Result<PilotAssignment> {
    if t == 0 || t > num_ue {
        return Err(Error::Contract(format!("need 1 <= T <= K, got T = {t}, K = {num_ue}")));
    }
    let mut perm: Vec<usize> = (0..num_ue).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let mut pilots = vec![0; num_ue];
    for (i, &k) in perm.iter().enumerate() {
        pilots[k] = i % t;
    }
    Ok(PilotAssignment {
        scheme: "semi-random".into(),
        x: one_hot(&pilots, t),
        y: None,
        serving: Vec::new(),
        seed: Some(seed),
        flagged_ues: Vec::new(),
    })
}

/// Contamination seen by UE `k` on pilot `p`: `Σ_{m ∈ R_k} Σ_{j ≠ k, pilot j = p} β_mj`.
pub fn contamination(net: &NetworkRealization, topo: &Topology, pilots: &[usize], k: usize, p: usize) -> f64 {
    topo.ue_neighbors(k)
        .into_iter()
        .map(|m| {
            (0..pilots.len())
                .filter(|&j| j != k && pilots[j] == p)
                .map(|j| net.beta[(j, m)])
                .sum::<f64>()
        })
        .sum()
}

/// Semi-random start, then `n_iters` times move the most contaminated UE
/// to its least contaminated pilot.
pub fn cellfree_greedy_assign(net: &NetworkRealization, topo: &Topology, t: usize, n_iters: usize, seed: u64) -> Result<PilotAssignment> {
    let mut assign = semi_random_assign(net.num_ue(), t, seed)?;
    let mut pilots = pilots_of(&assign.x);
    for _ in 0..n_iters {
        let worst = (0..pilots.len())
            .map(|k| (k, contamination(net, topo, &pilots, k, pilots[k])))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|p| p.0)
            .expect("at least one UE");
        let best = (0..t)
            .map(|p| (p, contamination(net, topo, &pilots, worst, p)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|p| p.0)
            .unwrap();
        pilots[worst] = best;
    }
    assign.x = one_hot(&pilots, t);
    assign.scheme = "cellfree-greedy".into();
    Ok(assign)
}

/// Pilot dimension from matrix completion, pilots from the semi-random rule.
pub fn lrmc_plus_semirandom(topo: &Topology, pat: &EstimationPattern, seed: u64) -> Result<PilotAssignment> {
    let prob = CompletionProblem::new(topo, pat)?;
    let res = complete(&prob, &CompletionOptions::default(), seed);
    if !res.converged {
        log::warn!("matrix completion did not converge; using dedicated pilots");
    }
    let t = res.t.clamp(1, topo.num_ue().max(1));
    let mut assign = semi_random_assign(topo.num_ue(), t, seed)?;
    assign.scheme = "lrmc-semirandom".into();
    Ok(assign)
}
