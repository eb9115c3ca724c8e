//! Sequential maximum-weight induced matching.
//!
//! Each pilot round solves a maximum-weight induced matching on the edges
//! that are still unassigned. A round is solved by Benders decomposition:
//! the master picks UE and RRH activity `(x, y)`, the slave computes the
//! matched weight in closed form and returns an optimality cut. Matched
//! edges leave the topology before the next round.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::milp::{branch_and_bound, Lp};
use crate::topo::{PilotAssignment, Topology};

/// One round of the matching problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MwimInstance {
    /// Remaining adjacency `T^(t)`, K x M.
    pub current: DMatrix<bool>,
    /// Original adjacency `T^(0)`, used by the induced-matching cap.
    pub original: DMatrix<bool>,
    /// Edge weights, zero outside `current`.
    pub weights: DMatrix<f64>,
    pub kappa: usize,
}

impl MwimInstance {
    pub fn new(current: DMatrix<bool>, original: DMatrix<bool>, weights: DMatrix<f64>, kappa: usize) -> Result<Self> {
        if current.shape() != original.shape() || weights.shape() != current.shape() {
            return Err(Error::Shape("instance matrices must share one K x M shape".into()));
        }
        if kappa == 0 {
            return Err(Error::InvalidConfig("kappa must be at least 1".into()));
        }
        for k in 0..current.nrows() {
            for m in 0..current.ncols() {
                if current[(k, m)] && !original[(k, m)] {
                    return Err(Error::Contract(format!("edge ({k},{m}) is current but not original")));
                }
                let w = weights[(k, m)];
                if !(w >= 0.0 && w.is_finite()) || (!current[(k, m)] && w != 0.0) {
                    return Err(Error::Contract(format!("weight at ({k},{m}) must be non-negative and supported on the topology")));
                }
            }
        }
        Ok(Self {
            current,
            original,
            weights,
            kappa,
        })
    }

    /// First-round instance of a topology with its own weights.
    pub fn from_topology(topo: &Topology, kappa: usize) -> Result<Self> {
        let adj = DMatrix::from_fn(topo.num_ue(), topo.num_rrh(), |k, m| topo.has_edge(k, m));
        Self::new(adj.clone(), adj, topo.weights().clone(), kappa)
    }

    pub fn num_ue(&self) -> usize {
        self.current.nrows()
    }

    pub fn num_rrh(&self) -> usize {
        self.current.ncols()
    }

    /// `‖B‖_1`.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn has_edges(&self) -> bool {
        self.current.iter().any(|&e| e)
    }

    /// Text dump: `K M kappa` header, then `ue rrh current beta` per original edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.num_ue(), self.num_rrh(), self.kappa);
        for k in 0..self.num_ue() {
            for m in 0..self.num_rrh() {
                if self.original[(k, m)] {
                    writeln!(out, "{k} {m} {} {:e}", u8::from(self.current[(k, m)]), self.weights[(k, m)]).unwrap();
                }
            }
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "missing `K M kappa` header"))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::parse(path, hl + 1, format!("bad integer `{t}`"))))
            .collect::<Result<_>>()?;
        let [k_n, m_n, kappa] = head[..] else {
            return Err(Error::parse(path, hl + 1, "header must be `K M kappa`"));
        };
        let mut current = DMatrix::from_element(k_n, m_n, false);
        let mut original = DMatrix::from_element(k_n, m_n, false);
        let mut weights = DMatrix::zeros(k_n, m_n);
        for (i, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = |what: &str| Error::parse(path, i + 1, what.to_string());
            if f.len() != 4 {
                return Err(bad("expected `ue rrh current beta`"));
            }
            let k: usize = f[0].parse().map_err(|_| bad("bad ue index"))?;
            let m: usize = f[1].parse().map_err(|_| bad("bad rrh index"))?;
            if k >= k_n || m >= m_n {
                return Err(bad("edge out of range"));
            }
            original[(k, m)] = true;
            current[(k, m)] = match f[2] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("current flag must be 0 or 1")),
            };
            weights[(k, m)] = f[3].parse().map_err(|_| bad("bad weight"))?;
        }
        Self::new(current, original, weights, kappa)
    }
}

/// Affine upper bound `L ≤ Σ_k xc_k x_k + Σ_m yc_m y_m + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub x_coef: Vec<f64>,
    pub y_coef: Vec<f64>,
    pub constant: f64,
}

impl Cut {
    pub fn eval(&self, x: &[bool], y: &[bool]) -> f64 {
        let xs: f64 = x.iter().zip(&self.x_coef).filter(|p| *p.0).map(|p| p.1).sum();
        let ys: f64 = y.iter().zip(&self.y_coef).filter(|p| *p.0).map(|p| p.1).sum();
        xs + ys + self.constant
    }

    fn eval_mask(&self, x: u64, y: &[bool]) -> f64 {
        let mut s = self.constant;
        let mut bits = x;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            s += self.x_coef[k];
            bits &= bits - 1;
        }
        for (m, &on) in y.iter().enumerate() {
            if on {
                s += self.y_coef[m];
            }
        }
        s
    }
}

/// Slave primal and dual at a fixed `(x̂, ŷ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaveDual {
    /// `z_km = x̂_k ŷ_m` on current edges.
    pub z: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub primal: f64,
    pub dual: f64,
}

impl SlaveDual {
    /// `a + b + c ≥ β`, `a, b ≥ 0`, `c ≤ 0` on every current edge.
    pub fn is_dual_feasible(&self, inst: &MwimInstance) -> bool {
        (0..inst.num_ue()).all(|k| {
            (0..inst.num_rrh()).all(|m| {
                !inst.current[(k, m)]
                    || (self.a[(k, m)] + self.b[(k, m)] + self.c[(k, m)] >= inst.weights[(k, m)]
                        && self.a[(k, m)] >= 0.0
                        && self.b[(k, m)] >= 0.0
                        && self.c[(k, m)] <= 0.0)
            })
        })
    }

    /// The Benders cut generated by this dual.
    pub fn cut(&self) -> Cut {
        let (k_n, m_n) = self.a.shape();
        let mut x_coef = vec![0.0; k_n];
        let mut y_coef = vec![0.0; m_n];
        let mut constant = 0.0;
        for k in 0..k_n {
            for m in 0..m_n {
                x_coef[k] += self.a[(k, m)] + self.c[(k, m)];
                y_coef[m] += self.b[(k, m)] + self.c[(k, m)];
                constant -= self.c[(k, m)];
            }
        }
        Cut { x_coef, y_coef, constant }
    }
}

/// Closed-form slave solution: dual `(β, 0, 0)` where `x̂ ≤ ŷ`, else `(0, β, 0)`.
pub fn solve_slave_dual(x: &[bool], y: &[bool], inst: &MwimInstance) -> SlaveDual {
    let (k_n, m_n) = (inst.num_ue(), inst.num_rrh());
    let mut z = DMatrix::zeros(k_n, m_n);
    let mut a = DMatrix::zeros(k_n, m_n);
    let mut b = DMatrix::zeros(k_n, m_n);
    let c = DMatrix::zeros(k_n, m_n);
    let mut primal = 0.0;
    let mut dual = 0.0;
    for k in 0..k_n {
        for m in 0..m_n {
            if !inst.current[(k, m)] {
                continue;
            }
            let w = inst.weights[(k, m)];
            if x[k] && y[m] {
                z[(k, m)] = 1.0;
                primal += w;
            }
            if u8::from(x[k]) <= u8::from(y[m]) {
                a[(k, m)] = w;
                if x[k] {
                    dual += w;
                }
            } else {
                b[(k, m)] = w;
                if y[m] {
                    dual += w;
                }
            }
        }
    }
    SlaveDual { z, a, b, c, primal, dual }
}

/// Settings shared by the Benders loop and the exact oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct BendersOptions {
    /// Relative gap at which a round stops.
    pub eps: f64,
    pub max_iters: usize,
    /// Weight of the active-RRH count in the master objective.
    pub rrh_weight: f64,
}

impl Default for BendersOptions {
    fn default() -> Self {
        Self {
            eps: 1e-9,
            max_iters: 50,
            rrh_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    pub x: Vec<bool>,
    pub y: Vec<bool>,
    pub l: f64,
    pub objective: f64,
    pub nodes: usize,
}

/// Largest K handled by the bitmask master.
pub const MASTER_MAX_UE: usize = 64;

struct Master<'a> {
    k_n: usize,
    cur_mask: Vec<u64>,
    t0_mask: Vec<u64>,
    ue_rrhs: Vec<Vec<usize>>,
    kappa: u32,
    rrh_weight: f64,
    lmax: f64,
    cuts: &'a [Cut],
    order: Vec<usize>,
    best_val: f64,
    best_x: u64,
    nodes: usize,
    tol: f64,
}

impl Master<'_> {
    fn load_ok(&self, ones: u64, m: usize) -> bool {
        (ones & self.t0_mask[m]).count_ones() <= self.kappa
    }

    fn feasible(&self, ones: u64) -> bool {
        let mut bits = ones;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            if !self.ue_rrhs[k].iter().any(|&m| self.load_ok(ones, m)) {
                return false;
            }
            bits &= bits - 1;
        }
        true
    }

    /// Largest `y` compatible with `x_lo` (forced ones) and `x_hi` (possible ones).
    fn activity(&self, x_lo: u64, x_hi: u64) -> Vec<bool> {
        (0..self.cur_mask.len()).map(|m| self.load_ok(x_lo, m) && self.cur_mask[m] & x_hi != 0).collect()
    }

    fn score(&self, x: u64, y: &[bool]) -> (f64, f64) {
        let l = self.cuts.iter().map(|c| c.eval_mask(x, y)).fold(self.lmax, f64::min);
        let count = y.iter().filter(|&&v| v).count() as f64;
        (self.rrh_weight * count + l, l)
    }

    fn dfs(&mut self, depth: usize, ones: u64, free: u64, fresh: bool) {
        self.nodes += 1;
        let y_hi = self.activity(ones, ones | free);
        let (bound, _) = self.score(ones | free, &y_hi);
        if bound <= self.best_val + self.tol {
            return;
        }
        if fresh {
            let y = self.activity(ones, ones);
            let (val, _) = self.score(ones, &y);
            if val > self.best_val + self.tol {
                self.best_val = val;
                self.best_x = ones;
            }
        }
        if depth == self.k_n {
            return;
        }
        let k = self.order[depth];
        let rest = free & !(1u64 << k);
        let with = ones | (1u64 << k);
        if self.feasible(with) {
            self.dfs(depth + 1, with, rest, true);
        }
        self.dfs(depth + 1, ones, rest, false);
    }
}

/// Exact master problem by depth-first branch-and-bound over `x`.
///
/// For fixed `x` the best `y` activates every RRH that has a selected
/// current neighbor and at most `κ` selected original neighbors, because the
/// objective and every cut are non-decreasing in `y`. The search therefore
/// enumerates `x` only, bounding with the optimistic activity of the
/// undecided UEs.
pub fn solve_master(inst: &MwimInstance, cuts: &[Cut], rrh_weight: f64) -> Result<MasterSolution> {
    let (k_n, m_n) = (inst.num_ue(), inst.num_rrh());
    if k_n > MASTER_MAX_UE {
        return Err(Error::SizeGuard {
            binaries: k_n,
            guard: MASTER_MAX_UE,
        });
    }
    let mask = |adj: &DMatrix<bool>, m: usize| (0..k_n).filter(|&k| adj[(k, m)]).fold(0u64, |acc, k| acc | 1 << k);
    let cur_mask: Vec<u64> = (0..m_n).map(|m| mask(&inst.current, m)).collect();
    let t0_mask: Vec<u64> = (0..m_n).map(|m| mask(&inst.original, m)).collect();
    let ue_rrhs: Vec<Vec<usize>> = (0..k_n).map(|k| (0..m_n).filter(|&m| inst.current[(k, m)]).collect()).collect();
    let row_weight: Vec<f64> = (0..k_n).map(|k| inst.weights.row(k).sum()).collect();
    let mut order: Vec<usize> = (0..k_n).filter(|&k| !ue_rrhs[k].is_empty()).collect();
    order.sort_by(|&a, &b| row_weight[b].total_cmp(&row_weight[a]).then(a.cmp(&b)));
    let free = order.iter().fold(0u64, |acc, &k| acc | 1 << k);
    let lmax = inst.total_weight();
    let scale = (rrh_weight.abs() * m_n as f64 + lmax).max(1e-300);
    let mut master = Master {
        k_n: order.len(),
        cur_mask,
        t0_mask,
        ue_rrhs,
        kappa: inst.kappa.min(u32::MAX as usize) as u32,
        rrh_weight,
        lmax,
        cuts,
        order,
        best_val: f64::NEG_INFINITY,
        best_x: 0,
        nodes: 0,
        tol: 1e-12 * scale,
    };
    master.dfs(0, 0, free, true);
    let y = master.activity(master.best_x, master.best_x);
    let (objective, l) = master.score(master.best_x, &y);
    let x = (0..k_n).map(|k| master.best_x >> k & 1 == 1).collect();
    Ok(MasterSolution {
        x,
        y,
        l,
        objective,
        nodes: master.nodes,
    })
}

/// One pilot round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSolution {
    pub x: Vec<bool>,
    pub y: Vec<bool>,
    /// `z_km = x_k y_m` on current edges, K x M.
    pub z: DMatrix<f64>,
    /// `rrh_weight · Σ y + Σ β z`.
    pub objective: f64,
    /// `Σ β z`.
    pub weight: f64,
    pub cuts_used: usize,
    pub converged: bool,
}

impl RoundSolution {
    fn from_xy(inst: &MwimInstance, x: Vec<bool>, y: Vec<bool>, rrh_weight: f64, cuts_used: usize, converged: bool) -> Self {
        let slave = solve_slave_dual(&x, &y, inst);
        let active = y.iter().filter(|&&v| v).count() as f64;
        Self {
            objective: rrh_weight * active + slave.primal,
            weight: slave.primal,
            z: slave.z,
            x,
            y,
            cuts_used,
            converged,
        }
    }

    /// Matched edges `(ue, rrh)`.
    pub fn matched(&self) -> Vec<(usize, usize)> {
        let (k_n, m_n) = self.z.shape();
        (0..k_n).flat_map(|k| (0..m_n).map(move |m| (k, m))).filter(|&e| self.z[e] > 0.5).collect()
    }

    /// Constraint check against the instance: linking, activity and cap.
    pub fn satisfies_constraints(&self, inst: &MwimInstance) -> bool {
        let (k_n, m_n) = (inst.num_ue(), inst.num_rrh());
        let ue_ok = (0..k_n).all(|k| !self.x[k] || (0..m_n).any(|m| inst.current[(k, m)] && self.y[m]));
        let rrh_ok = (0..m_n).all(|m| !self.y[m] || (0..k_n).any(|k| inst.current[(k, m)] && self.x[k]));
        let cap_ok = (0..m_n).all(|m| {
            let load = (0..k_n).filter(|&k| inst.original[(k, m)] && self.x[k]).count();
            !self.y[m] || load <= inst.kappa
        });
        let z_ok = (0..k_n).all(|k| {
            (0..m_n).all(|m| {
                let want = if inst.current[(k, m)] && self.x[k] && self.y[m] { 1.0 } else { 0.0 };
                self.z[(k, m)] == want
            })
        });
        ue_ok && rrh_ok && cap_ok && z_ok
    }
}

/// Benders decomposition of one round.
///
/// Stops when the master bound and the best slave-evaluated solution agree
/// within `eps` (relative), i.e. when the latest cut no longer moves `L`.
pub fn benders_round(inst: &MwimInstance, opts: &BendersOptions) -> Result<RoundSolution> {
    if !(opts.eps > 0.0) {
        return Err(Error::InvalidConfig("eps must be positive".into()));
    }
    let w = opts.rrh_weight;
    let mut cuts: Vec<Cut> = Vec::new();
    let mut best: Option<(f64, Vec<bool>, Vec<bool>)> = None;
    for _ in 0..opts.max_iters.max(1) {
        let master = solve_master(inst, &cuts, w)?;
        let slave = solve_slave_dual(&master.x, &master.y, inst);
        let value = w * master.y.iter().filter(|&&v| v).count() as f64 + slave.primal;
        if best.as_ref().is_none_or(|b| value > b.0) {
            best = Some((value, master.x.clone(), master.y.clone()));
        }
        let incumbent = best.as_ref().unwrap().0;
        if master.objective - incumbent <= opts.eps * master.objective.abs().max(1.0) {
            let (_, x, y) = best.unwrap();
            return Ok(RoundSolution::from_xy(inst, x, y, w, cuts.len(), true));
        }
        cuts.push(slave.cut());
    }
    let (_, x, y) = best.unwrap();
    log::warn!("Benders round hit the iteration cap of {}", opts.max_iters);
    Ok(RoundSolution::from_xy(inst, x, y, w, cuts.len(), false))
}

/// Default binary budget of [`solve_exact_milp`].
pub const EXACT_GUARD: usize = 24;

/// Solves the linearized round problem directly by LP-based branch-and-bound.
pub fn solve_exact_milp(inst: &MwimInstance, rrh_weight: f64, guard: usize) -> Result<RoundSolution> {
    let (k_n, m_n) = (inst.num_ue(), inst.num_rrh());
    if k_n + m_n > guard {
        return Err(Error::SizeGuard {
            binaries: k_n + m_n,
            guard,
        });
    }
    let edges: Vec<(usize, usize)> = (0..k_n).flat_map(|k| (0..m_n).map(move |m| (k, m))).filter(|&e| inst.current[e]).collect();
    let xv = |k: usize| k;
    let yv = |m: usize| k_n + m;
    let zv = |e: usize| k_n + m_n + e;
    let mut lp = Lp::new(k_n + m_n + edges.len());
    for m in 0..m_n {
        lp.c[yv(m)] = rrh_weight;
    }
    for (e, &(k, m)) in edges.iter().enumerate() {
        lp.c[zv(e)] = inst.weights[(k, m)];
        lp.upper[zv(e)] = 1.0;
        lp.add_le(&[(zv(e), 1.0), (xv(k), -1.0)], 0.0);
        lp.add_le(&[(zv(e), 1.0), (yv(m), -1.0)], 0.0);
        lp.add_le(&[(xv(k), 1.0), (yv(m), 1.0), (zv(e), -1.0)], 1.0);
    }
    for k in 0..k_n {
        let mut terms = vec![(xv(k), 1.0)];
        terms.extend(edges.iter().filter(|e| e.0 == k).map(|e| (yv(e.1), -1.0)));
        lp.add_le(&terms, 0.0);
    }
    for m in 0..m_n {
        let mut terms = vec![(yv(m), 1.0)];
        terms.extend(edges.iter().filter(|e| e.1 == m).map(|e| (xv(e.0), -1.0)));
        lp.add_le(&terms, 0.0);
        let mut cap: Vec<(usize, f64)> = (0..k_n).filter(|&k| inst.original[(k, m)]).map(|k| (xv(k), 1.0)).collect();
        cap.push((yv(m), (k_n as f64) - inst.kappa as f64));
        lp.add_le(&cap, k_n as f64);
    }
    let binary: Vec<bool> = (0..lp.num_vars()).map(|j| j < k_n + m_n).collect();
    let sol = branch_and_bound(&lp, &binary).ok_or_else(|| Error::Contract("round problem reported infeasible".into()))?;
    let x = (0..k_n).map(|k| sol.x[xv(k)] > 0.5).collect();
    let y = (0..m_n).map(|m| sol.x[yv(m)] > 0.5).collect();
    Ok(RoundSolution::from_xy(inst, x, y, rrh_weight, 0, true))
}

/// Per-round diagnostics; the runtime makes this non-deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    pub round: usize,
    pub objective: f64,
    pub cuts: usize,
    pub runtime_secs: f64,
}

/// Output of the sequential procedures (sMWIM and the greedy).
#[derive(Debug, Clone, PartialEq)]
pub struct SequentialResult {
    pub rounds: Vec<RoundSolution>,
    /// K x T.
    pub x: DMatrix<f64>,
    /// M x T.
    pub y: DMatrix<f64>,
    /// `T_E,m` per RRH, sorted.
    pub serving: Vec<Vec<usize>>,
    pub converged: bool,
    pub trace: Vec<RoundTrace>,
}

impl SequentialResult {
    pub(crate) fn from_rounds(num_ue: usize, num_rrh: usize, rounds: Vec<RoundSolution>, trace: Vec<RoundTrace>) -> Self {
        let t = rounds.len();
        let x = DMatrix::from_fn(num_ue, t, |k, r| if rounds[r].x[k] { 1.0 } else { 0.0 });
        let y = DMatrix::from_fn(num_rrh, t, |m, r| if rounds[r].y[m] { 1.0 } else { 0.0 });
        let mut serving = vec![Vec::new(); num_rrh];
        for round in &rounds {
            for (k, m) in round.matched() {
                serving[m].push(k);
            }
        }
        for s in &mut serving {
            s.sort_unstable();
            s.dedup();
        }
        Self {
            converged: rounds.iter().all(|r| r.converged),
            rounds,
            x,
            y,
            serving,
            trace,
        }
    }

    pub fn pilot_dim(&self) -> usize {
        self.rounds.len()
    }

    /// Assignment restricted to the first `budget` rounds and padded with
    /// unused pilots up to `budget`.
    pub fn assignment(&self, scheme: &str, budget: usize) -> PilotAssignment {
        let used = budget.min(self.rounds.len());
        let prefix = Self::from_rounds(self.x.nrows(), self.y.nrows(), self.rounds[..used].to_vec(), Vec::new());
        let flagged_ues = (0..prefix.x.nrows()).filter(|&k| prefix.x.row(k).iter().all(|&v| v == 0.0)).collect();
        PilotAssignment {
            scheme: scheme.to_string(),
            x: prefix.x,
            y: Some(prefix.y),
            serving: prefix.serving,
            seed: None,
            flagged_ues,
        }
        .with_pilot_dim(budget)
    }

    /// Per-round trace as CSV (`round,objective,cuts,runtime_secs`).
    pub fn write_trace(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "round,objective,cuts,runtime_secs")?;
        for t in &self.trace {
            writeln!(f, "{},{},{},{}", t.round, t.objective, t.cuts, t.runtime_secs)?;
        }
        Ok(())
    }
}

/// Runs rounds until `t_max` pilots are used or no edge is left.
///
/// Weights are the topology's β divided by the largest β, so the RRH-count
/// term and the matched weight live on comparable scales. Results are
/// prefix-consistent: the first `t` rounds do not depend on `t_max`.
pub fn sequential_assign(topo: &Topology, t_max: usize, kappa: usize, opts: &BendersOptions) -> Result<SequentialResult> {
    if t_max == 0 {
        return Err(Error::InvalidConfig("T_max must be at least 1".into()));
    }
    let (k_n, m_n) = (topo.num_ue(), topo.num_rrh());
    let original = DMatrix::from_fn(k_n, m_n, |k, m| topo.has_edge(k, m));
    let scale = topo.weights().max();
    let base = if scale > 0.0 { topo.weights() / scale } else { topo.weights().clone() };
    let mut current = original.clone();
    let mut rounds = Vec::new();
    let mut trace = Vec::new();
    for round in 0..t_max {
        if !current.iter().any(|&e| e) {
            break;
        }
        let weights = DMatrix::from_fn(k_n, m_n, |k, m| if current[(k, m)] { base[(k, m)] } else { 0.0 });
        let inst = MwimInstance::new(current.clone(), original.clone(), weights, kappa)?;
        let start = Instant::now();
        let sol = benders_round(&inst, opts)?;
        trace.push(RoundTrace {
            round: round + 1,
            objective: sol.objective,
            cuts: sol.cuts_used,
            runtime_secs: start.elapsed().as_secs_f64(),
        });
        for (k, m) in sol.matched() {
            current[(k, m)] = false;
        }
        rounds.push(sol);
    }
    Ok(SequentialResult::from_rounds(k_n, m_n, rounds, trace))
}
