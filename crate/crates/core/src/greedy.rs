//! Greedy many-to-many matching driven by path loss only.
//!
//! Every round prunes the remaining topology in three stages (dominant-RRH
//! competition, per-UE RRH cap, per-RRH cap resolved by a profit/cost
//! score) and assigns the round's pilot to the surviving UEs. Assigned UEs
//! leave the topology.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::milp::{branch_and_bound, Lp};
use crate::smwim::{RoundSolution, RoundTrace, SequentialResult};
use crate::topo::Topology;

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyConfig {
    pub t_max: usize,
    /// Per-RRH, per-pilot cap.
    pub kappa: usize,
    /// Per-UE cap on serving RRHs.
    pub kappa_u: usize,
    /// Profit/cost trade-off.
    pub delta: f64,
}

impl GreedyConfig {
    pub fn new(t_max: usize, kappa: usize, kappa_u: usize) -> Self {
        Self {
            t_max,
            kappa,
            kappa_u,
            delta: 1.0,
        }
    }

    pub fn validate(&self, num_rrh: usize) -> Result<()> {
        if self.t_max == 0 || self.kappa == 0 || self.kappa_u == 0 {
            return Err(Error::InvalidConfig("T_max, kappa and kappa_u must be positive".into()));
        }
        if self.kappa_u > num_rrh {
            return Err(Error::InvalidConfig(format!("kappa_u = {} exceeds M = {num_rrh}", self.kappa_u)));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidConfig("delta must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Working state of one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundState {
    pub t_tilde: DMatrix<bool>,
    pub b_tilde: DMatrix<f64>,
    pub x: Vec<bool>,
    pub y: Vec<bool>,
    pub profit: DMatrix<f64>,
    pub cost: DMatrix<f64>,
}

impl RoundState {
    pub fn new(t_tilde: DMatrix<bool>, weights: &DMatrix<f64>) -> Self {
        let b_tilde = DMatrix::from_fn(t_tilde.nrows(), t_tilde.ncols(), |k, m| if t_tilde[(k, m)] { weights[(k, m)] } else { 0.0 });
        let (profit, cost) = profit_cost(&b_tilde);
        Self {
            x: vec![true; t_tilde.nrows()],
            y: vec![true; t_tilde.ncols()],
            t_tilde,
            b_tilde,
            profit,
            cost,
        }
    }

    /// Re-masks the weights and refreshes profit and cost.
    fn refresh(&mut self) {
        let t = &self.t_tilde;
        self.b_tilde = DMatrix::from_fn(t.nrows(), t.ncols(), |k, m| if t[(k, m)] { self.b_tilde[(k, m)] } else { 0.0 });
        let (p, c) = profit_cost(&self.b_tilde);
        self.profit = p;
        self.cost = c;
    }

    fn clear_row(&mut self, k: usize) {
        for m in 0..self.t_tilde.ncols() {
            self.t_tilde[(k, m)] = false;
        }
    }

    fn clear_col(&mut self, m: usize) {
        for k in 0..self.t_tilde.nrows() {
            self.t_tilde[(k, m)] = false;
        }
    }

    fn load(&self, m: usize) -> usize {
        (0..self.t_tilde.nrows()).filter(|&k| self.x[k] && self.t_tilde[(k, m)]).count()
    }
}

/// Marks, per UE, the strongest RRH (lowest index on ties; nothing for zero rows).
pub fn argmax_mask(b: &DMatrix<f64>) -> DMatrix<bool> {
    let (k_n, m_n) = b.shape();
    let mut mask = DMatrix::from_element(k_n, m_n, false);
    for k in 0..k_n {
        let mut best: Option<usize> = None;
        for m in 0..m_n {
            if b[(k, m)] > 0.0 && best.is_none_or(|j| b[(k, m)] > b[(k, j)]) {
                best = Some(m);
            }
        }
        if let Some(m) = best {
            mask[(k, m)] = true;
        }
    }
    mask
}

/// `P_km = B_km Σ_j B_jm` and `C_km = B_km Σ_{j≠k} B_jm`.
pub fn profit_cost(b: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (k_n, m_n) = b.shape();
    let mut p = DMatrix::zeros(k_n, m_n);
    let mut c = DMatrix::zeros(k_n, m_n);
    for m in 0..m_n {
        let col_sum: f64 = b.column(m).iter().sum();
        for k in 0..k_n {
            let others: f64 = (0..k_n).filter(|&j| j != k).map(|j| b[(j, m)]).sum();
            p[(k, m)] = b[(k, m)] * col_sum;
            c[(k, m)] = b[(k, m)] * others;
        }
    }
    (p, c)
}

/// `Φ = Σ x_k y_m (P_km − δ C_km)`.
pub fn evaluate_phi(x: &[bool], y: &[bool], p: &DMatrix<f64>, c: &DMatrix<f64>, delta: f64) -> f64 {
    let mut phi = 0.0;
    for (k, _) in x.iter().enumerate().filter(|e| *e.1) {
        for (m, _) in y.iter().enumerate().filter(|e| *e.1) {
            phi += p[(k, m)] - delta * c[(k, m)];
        }
    }
    phi
}

/// Indices of the `n` largest entries of `vals` among `cands` (index tie-break).
fn top_n(cands: &[usize], vals: impl Fn(usize) -> f64, n: usize) -> Vec<usize> {
    let mut sorted = cands.to_vec();
    sorted.sort_by(|&a, &b| vals(b).total_cmp(&vals(a)).then(a.cmp(&b)));
    sorted.truncate(n);
    sorted
}

/// One round of the three-stage selection. Returns the matched edges via the
/// round's `z`.
pub fn greedy_round(state: &mut RoundState, cfg: &GreedyConfig) -> RoundSolution {
    let (k_n, m_n) = state.t_tilde.shape();

    // Stage 1: UEs sharing a dominant RRH compete; only the strongest stays.
    let mask = argmax_mask(&state.b_tilde);
    for m in 0..m_n {
        let competitors: Vec<usize> = (0..k_n).filter(|&k| mask[(k, m)] && state.t_tilde.row(k).iter().any(|&e| e)).collect();
        if competitors.len() > 1 {
            let keep = top_n(&competitors, |k| state.b_tilde[(k, m)], 1)[0];
            for &k in competitors.iter().filter(|&&k| k != keep) {
                state.clear_row(k);
            }
            state.refresh();
        }
    }

    // Stage 2: at most kappa_u RRHs per UE.
    for k in 0..k_n {
        let rrhs: Vec<usize> = (0..m_n).filter(|&m| state.y[m] && state.t_tilde[(k, m)]).collect();
        if rrhs.len() > cfg.kappa_u {
            let keep = top_n(&rrhs, |m| state.b_tilde[(k, m)], cfg.kappa_u);
            for m in rrhs.into_iter().filter(|m| !keep.contains(m)) {
                state.t_tilde[(k, m)] = false;
            }
        }
    }
    state.refresh();

    // Stage 3: resolve per-RRH cap violations.
    while let Some(m) = (0..m_n).find(|&m| state.load(m) > cfg.kappa) {
        let ues: Vec<usize> = (0..k_n).filter(|&k| state.x[k] && state.t_tilde[(k, m)]).collect();
        let top = top_n(&ues, |k| state.b_tilde[(k, m)], cfg.kappa);
        let mut y_b = state.y.clone();
        y_b[m] = false;
        let phi_b = evaluate_phi(&state.x, &y_b, &state.profit, &state.cost, cfg.delta);
        let mut x_u = state.x.clone();
        for &k in ues.iter().filter(|k| !top.contains(k)) {
            x_u[k] = false;
        }
        let phi_u = evaluate_phi(&x_u, &state.y, &state.profit, &state.cost, cfg.delta);
        if phi_b > phi_u {
            state.y[m] = false;
            state.clear_col(m);
        } else {
            for &k in ues.iter().filter(|k| !top.contains(k)) {
                state.x[k] = false;
                state.clear_row(k);
            }
        }
        state.refresh();
    }

    let mut z = DMatrix::zeros(k_n, m_n);
    let mut weight = 0.0;
    for k in 0..k_n {
        for m in 0..m_n {
            if state.x[k] && state.y[m] && state.t_tilde[(k, m)] {
                z[(k, m)] = 1.0;
                weight += state.b_tilde[(k, m)];
            }
        }
    }
    let x: Vec<bool> = (0..k_n).map(|k| z.row(k).iter().any(|&v| v > 0.0)).collect();
    let y: Vec<bool> = (0..m_n).map(|m| z.column(m).iter().any(|&v| v > 0.0)).collect();
    RoundSolution {
        x,
        y,
        z,
        objective: weight,
        weight,
        cuts_used: 0,
        converged: true,
    }
}

/// Runs rounds until `T_max` pilots are used, no edge is left, or a round
/// selects nothing. Every UE gets at most one pilot.
pub fn greedy_assign(topo: &Topology, cfg: &GreedyConfig) -> Result<SequentialResult> {
    cfg.validate(topo.num_rrh())?;
    let (k_n, m_n) = (topo.num_ue(), topo.num_rrh());
    let mut current = DMatrix::from_fn(k_n, m_n, |k, m| topo.has_edge(k, m));
    let mut rounds = Vec::new();
    let mut trace = Vec::new();
    for round in 0..cfg.t_max {
        if !current.iter().any(|&e| e) {
            break;
        }
        let start = Instant::now();
        let mut state = RoundState::new(current.clone(), topo.weights());
        let sol = greedy_round(&mut state, cfg);
        if sol.matched().is_empty() {
            break;
        }
        trace.push(RoundTrace {
            round: round + 1,
            objective: sol.objective,
            cuts: 0,
            runtime_secs: start.elapsed().as_secs_f64(),
        });
        for k in (0..k_n).filter(|&k| sol.x[k]) {
            for m in 0..m_n {
                current[(k, m)] = false;
            }
        }
        rounds.push(sol);
    }
    Ok(SequentialResult::from_rounds(k_n, m_n, rounds, trace))
}

/// Exact optimum of the round's many-to-many matching (at most `kappa` UEs
/// per RRH, `kappa_u` RRHs per UE) on the edges of `t`, one binary per edge.
pub fn solve_gmap_exact(t: &DMatrix<bool>, b: &DMatrix<f64>, kappa: usize, kappa_u: usize, guard: usize) -> Result<f64> {
    let (k_n, m_n) = t.shape();
    let edges: Vec<(usize, usize)> = (0..k_n).flat_map(|k| (0..m_n).map(move |m| (k, m))).filter(|&e| t[e]).collect();
    if edges.len() > guard {
        return Err(Error::SizeGuard {
            binaries: edges.len(),
            guard,
        });
    }
    if edges.is_empty() {
        return Ok(0.0);
    }
    let mut lp = Lp::new(edges.len());
    for (e, &(k, m)) in edges.iter().enumerate() {
        lp.c[e] = b[(k, m)];
    }
    for m in 0..m_n {
        let terms: Vec<(usize, f64)> = edges.iter().enumerate().filter(|p| p.1 .1 == m).map(|p| (p.0, 1.0)).collect();
        if !terms.is_empty() {
            lp.add_le(&terms, kappa as f64);
        }
    }
    for k in 0..k_n {
        let terms: Vec<(usize, f64)> = edges.iter().enumerate().filter(|p| p.1 .0 == k).map(|p| (p.0, 1.0)).collect();
        if !terms.is_empty() {
            lp.add_le(&terms, kappa_u as f64);
        }
    }
    let sol = branch_and_bound(&lp, &vec![true; edges.len()]).ok_or_else(|| Error::Contract("matching program infeasible".into()))?;
    Ok(sol.value)
}
