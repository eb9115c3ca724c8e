//! UE–RRH topologies, estimation patterns, conflict graphs, the two
//! interference-management-derived assignment schemes (vertex coloring and
//! MDS coded multicast) and the universal feasibility check.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::netgen::NetworkRealization;

/// Bipartite UE–RRH connectivity graph with edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    num_ue: usize,
    num_rrh: usize,
    adj: Vec<bool>,
    /// K x M, equal to beta on edges and zero elsewhere.
    weights: DMatrix<f64>,
}

impl Topology {
    /// Builds a topology from `(ue, rrh, weight)` triples. Weights must be positive.
    pub fn from_edges(num_ue: usize, num_rrh: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj = vec![false; num_ue * num_rrh];
        let mut weights = DMatrix::zeros(num_ue, num_rrh);
        for &(k, m, w) in edges {
            if k >= num_ue || m >= num_rrh {
                return Err(Error::Shape(format!("edge ({k},{m}) outside {num_ue}x{num_rrh}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Domain(format!("edge ({k},{m}) has non-positive weight {w}")));
            }
            adj[k * num_rrh + m] = true;
            weights[(k, m)] = w;
        }
        Ok(Self { num_ue, num_rrh, adj, weights })
    }

    /// Topology keeping the entries of `beta` where `keep` is true.
    pub fn from_mask(beta: &DMatrix<f64>, keep: impl Fn(usize, usize) -> bool) -> Self {
        let (num_ue, num_rrh) = beta.shape();
        let mut adj = vec![false; num_ue * num_rrh];
        let mut weights = DMatrix::zeros(num_ue, num_rrh);
        for k in 0..num_ue {
            for m in 0..num_rrh {
                if keep(k, m) {
                    adj[k * num_rrh + m] = true;
                    weights[(k, m)] = beta[(k, m)];
                }
            }
        }
        Self { num_ue, num_rrh, adj, weights }
    }

    pub fn num_ue(&self) -> usize {
        self.num_ue
    }

    pub fn num_rrh(&self) -> usize {
        self.num_rrh
    }

    pub fn has_edge(&self, k: usize, m: usize) -> bool {
        self.adj[k * self.num_rrh + m]
    }

    pub fn weight(&self, k: usize, m: usize) -> f64 {
        self.weights[(k, m)]
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// K x M 0/1 adjacency as floats.
    pub fn adjacency(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.num_ue, self.num_rrh, |k, m| if self.has_edge(k, m) { 1.0 } else { 0.0 })
    }

    /// Edges in lexicographic `(ue, rrh)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_ue).flat_map(move |k| (0..self.num_rrh).filter(move |&m| self.has_edge(k, m)).map(move |m| (k, m)))
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().filter(|&&a| a).count()
    }

    /// `T_m`: UEs connected to RRH `m`.
    pub fn rrh_neighbors(&self, m: usize) -> Vec<usize> {
        (0..self.num_ue).filter(|&k| self.has_edge(k, m)).collect()
    }

    /// `R_k`: RRHs connected to UE `k`.
    pub fn ue_neighbors(&self, k: usize) -> Vec<usize> {
        (0..self.num_rrh).filter(|&m| self.has_edge(k, m)).collect()
    }

    /// UEs without any connected RRH.
    pub fn isolated_ues(&self) -> Vec<usize> {
        (0..self.num_ue).filter(|&k| !(0..self.num_rrh).any(|m| self.has_edge(k, m))).collect()
    }

    pub fn has_isolated_ue(&self) -> bool {
        !self.isolated_ues().is_empty()
    }

    pub fn max_rrh_degree(&self) -> usize {
        (0..self.num_rrh).map(|m| self.rrh_neighbors(m).len()).max().unwrap_or(0)
    }
}

/// `adj_km = 1` iff `beta_mk >= delta_beta`.
pub fn sparsify_threshold(net: &NetworkRealization, delta_beta: f64) -> Result<Topology> {
    if !(delta_beta > 0.0) {
        return Err(Error::Domain(format!("threshold must be positive, got {delta_beta}")));
    }
    let topo = Topology::from_mask(&net.beta, |k, m| net.beta[(k, m)] >= delta_beta);
    if topo.has_isolated_ue() {
        log::warn!("threshold {delta_beta:e} leaves {} isolated UE(s)", topo.isolated_ues().len());
    }
    Ok(topo)
}

/// Keeps the `ceil(q K M)` strongest links, ties broken by `(ue, rrh)` order.
pub fn sparsify_top_fraction(net: &NetworkRealization, q: f64) -> Result<Topology> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Domain(format!("fraction must lie in (0, 1], got {q}")));
    }
    let (k_n, m_n) = net.beta.shape();
    let total = k_n * m_n;
    let keep = (((q * total as f64) - 1e-9).ceil() as usize).clamp(1, total);
    let mut order: Vec<(usize, usize)> = (0..k_n).flat_map(|k| (0..m_n).map(move |m| (k, m))).collect();
    order.sort_by(|a, b| net.beta[*b].total_cmp(&net.beta[*a]).then(a.cmp(b)));
    let chosen: BTreeSet<(usize, usize)> = order.into_iter().take(keep).collect();
    let topo = Topology::from_mask(&net.beta, |k, m| chosen.contains(&(k, m)));
    if topo.has_isolated_ue() {
        log::warn!("top-{q} sparsification leaves {} isolated UE(s)", topo.isolated_ues().len());
    }
    Ok(topo)
}

/// The sub-pattern `E_E` of channels to be estimated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EstimationPattern {
    num_ue: usize,
    num_rrh: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl EstimationPattern {
    /// Validates `edges ⊆ E(topo)`.
    pub fn new(topo: &Topology, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let edges: BTreeSet<_> = edges.into_iter().collect();
        if let Some(&(k, m)) = edges.iter().find(|&&(k, m)| k >= topo.num_ue() || m >= topo.num_rrh() || !topo.has_edge(k, m)) {
            return Err(Error::Contract(format!("pattern edge ({k},{m}) is not a topology edge")));
        }
        Ok(Self {
            num_ue: topo.num_ue(),
            num_rrh: topo.num_rrh(),
            edges,
        })
    }

    pub fn contains(&self, k: usize, m: usize) -> bool {
        self.edges.contains(&(k, m))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn num_ue(&self) -> usize {
        self.num_ue
    }

    pub fn num_rrh(&self) -> usize {
        self.num_rrh
    }

    /// `T_E,m`.
    pub fn served_by(&self, m: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.1 == m).map(|e| e.0).collect()
    }

    /// `T_E,m` for every RRH.
    pub fn serving_sets(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.num_rrh];
        for &(k, m) in &self.edges {
            sets[m].push(k);
        }
        sets
    }
}

/// Estimate every captured channel (`G_E = G`).
pub fn default_estimation_pattern(topo: &Topology) -> EstimationPattern {
    EstimationPattern {
        num_ue: topo.num_ue(),
        num_rrh: topo.num_rrh(),
        edges: topo.edges().collect(),
    }
}

/// Conflict graph on the edges of `E_E`.
#[derive(Debug, Clone)]
pub struct ConflictGraph {
    /// Vertex `i` is the channel `(ue, rrh)`.
    pub vertices: Vec<(usize, usize)>,
    /// Sorted neighbor lists.
    pub neighbors: Vec<Vec<usize>>,
    pub num_ue: usize,
    /// UEs without any topology edge.
    pub isolated: Vec<usize>,
}

impl ConflictGraph {
    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn vertex_index(&self, k: usize, m: usize) -> Option<usize> {
        self.vertices.iter().position(|&v| v == (k, m))
    }
}

/// Two channels `(k,m)`, `(k',m')` conflict iff `k != k'` and either UE
/// reaches the other's RRH in the topology.
pub fn build_conflict_graph(topo: &Topology, pat: &EstimationPattern) -> ConflictGraph {
    let vertices: Vec<(usize, usize)> = pat.edges().collect();
    let n = vertices.len();
    let mut neighbors = vec![Vec::new(); n];
    for i in 0..n {
        let (k, m) = vertices[i];
        for j in (i + 1)..n {
            let (k2, m2) = vertices[j];
            if k != k2 && (topo.has_edge(k, m2) || topo.has_edge(k2, m)) {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }
    ConflictGraph {
        vertices,
        neighbors,
        num_ue: topo.num_ue(),
        isolated: topo.isolated_ues(),
    }
}

/// DSATUR greedy coloring; returns one color per vertex.
pub fn dsatur(cg: &ConflictGraph) -> Vec<usize> {
    let n = cg.vertices.len();
    let mut color: Vec<Option<usize>> = vec![None; n];
    let mut neighbor_colors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| color[v].is_none())
            .max_by(|&a, &b| {
                neighbor_colors[a]
                    .len()
                    .cmp(&neighbor_colors[b].len())
                    .then(cg.neighbors[a].len().cmp(&cg.neighbors[b].len()))
                    .then(b.cmp(&a))
            })
            .expect("uncolored vertex remains");
        let c = (0..).find(|c| !neighbor_colors[v].contains(c)).unwrap();
        color[v] = Some(c);
        for &u in &cg.neighbors[v] {
            neighbor_colors[u].insert(c);
        }
    }
    color.into_iter().map(|c| c.unwrap()).collect()
}

/// A pilot assignment with its serving sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotAssignment {
    pub scheme: String,
    /// K x T pilot coefficients (binary for combinatorial schemes).
    #[serde(skip)]
    pub x: DMatrix<f64>,
    /// M x T RRH activity, present for round-based schemes.
    #[serde(skip)]
    pub y: Option<DMatrix<f64>>,
    /// `T_E,m` per RRH, sorted.
    pub serving: Vec<Vec<usize>>,
    pub seed: Option<u64>,
    /// UEs left without a pilot (or assigned one only by convention).
    pub flagged_ues: Vec<usize>,
}

impl PilotAssignment {
    pub fn pilot_dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn num_ue(&self) -> usize {
        self.x.nrows()
    }

    /// Pilot vector of UE `k`.
    pub fn pilot_of(&self, k: usize) -> Vec<f64> {
        self.x.row(k).iter().copied().collect()
    }

    /// Serving sets as an estimation pattern over `topo` (errors if not a sub-pattern).
    pub fn pattern(&self, topo: &Topology) -> Result<EstimationPattern> {
        EstimationPattern::new(
            topo,
            self.serving.iter().enumerate().flat_map(|(m, ks)| ks.iter().map(move |&k| (k, m))),
        )
    }

    /// Same pilots with `T` widened to `t` zero columns on the right.
    pub fn with_pilot_dim(mut self, t: usize) -> Self {
        if t > self.x.ncols() {
            let (k, old) = self.x.shape();
            self.x = self.x.resize(k, t, 0.0);
            if let Some(y) = self.y.take() {
                let m = y.nrows();
                self.y = Some(y.resize(m, t, 0.0));
            }
            debug_assert_eq!(self.x.ncols(), t.max(old));
        }
        self
    }
}

/// Colors the conflict graph and turns colors into pilots.
///
/// Isolated UEs (no topology edge) get pilot 0 by convention and are flagged.
pub fn color_assignment(cg: &ConflictGraph) -> Result<PilotAssignment> {
    if cg.vertices.is_empty() {
        return Err(Error::Contract("conflict graph has no vertices".into()));
    }
    let colors = dsatur(cg);
    let t = colors.iter().max().map_or(1, |c| c + 1);
    let num_rrh = cg.vertices.iter().map(|v| v.1 + 1).max().unwrap_or(0);
    let mut x = DMatrix::zeros(cg.num_ue, t);
    let mut serving = vec![Vec::new(); num_rrh];
    for (&(k, m), &c) in cg.vertices.iter().zip(&colors) {
        x[(k, c)] = 1.0;
        serving[m].push(k);
    }
    for &k in &cg.isolated {
        x[(k, 0)] = 1.0;
    }
    for s in &mut serving {
        s.sort_unstable();
        s.dedup();
    }
    Ok(PilotAssignment {
        scheme: "coloring".into(),
        x,
        y: None,
        serving,
        seed: None,
        flagged_ues: cg.isolated.clone(),
    })
}

/// Vandermonde (MDS) pilots with `T = max_m |T_m|`; every RRH estimates all
/// of its connected UEs.
pub fn coded_multicast_assignment(topo: &Topology) -> Result<PilotAssignment> {
    let t = topo.max_rrh_degree();
    if t == 0 {
        return Err(Error::Contract("coded multicast needs a non-empty topology".into()));
    }
    let k_n = topo.num_ue();
    let mut x = DMatrix::zeros(k_n, t);
    for k in 0..k_n {
        let node = (k + 1) as f64;
        let row: Vec<f64> = (0..t).map(|p| node.powi(p as i32)).collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (p, v) in row.into_iter().enumerate() {
            x[(k, p)] = v / norm;
        }
    }
    let serving = (0..topo.num_rrh()).map(|m| topo.rrh_neighbors(m)).collect();
    Ok(PilotAssignment {
        scheme: "coded-multicast".into(),
        x,
        y: None,
        serving,
        seed: None,
        flagged_ues: topo.isolated_ues(),
    })
}

/// Per-RRH outcome of [`verify_assignment`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RrhCheck {
    pub rrh: usize,
    pub desired: usize,
    pub rank_interference: usize,
    pub rank_joint: usize,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub feasible: bool,
    pub per_rrh: Vec<RrhCheck>,
}

impl Verification {
    pub fn failing_rrhs(&self) -> Vec<usize> {
        self.per_rrh.iter().filter(|c| !c.ok).map(|c| c.rrh).collect()
    }
}

/// Checks that at every RRH the desired pilots stay linearly independent
/// after zero-forcing the significant (captured, not desired) interferers:
/// `rank([D | I]) = rank(I) + |T_E,m|`.
pub fn verify_assignment(x: &DMatrix<f64>, topo: &Topology, pat: &EstimationPattern) -> Result<Verification> {
    if x.nrows() != topo.num_ue() {
        return Err(Error::Shape(format!("X has {} rows, topology has {} UEs", x.nrows(), topo.num_ue())));
    }
    if pat.num_ue() != topo.num_ue() || pat.num_rrh() != topo.num_rrh() {
        return Err(Error::Shape("pattern and topology dimensions differ".into()));
    }
    let t = x.ncols();
    let col = |k: usize| -> Vec<f64> { x.row(k).iter().copied().collect() };
    let mut per_rrh = Vec::with_capacity(topo.num_rrh());
    for m in 0..topo.num_rrh() {
        let connected = topo.rrh_neighbors(m);
        let (desired, interferers): (Vec<usize>, Vec<usize>) = connected.iter().partition(|&&k| pat.contains(k, m));
        let interf_cols: Vec<Vec<f64>> = interferers.iter().map(|&k| col(k)).collect();
        let mut joint_cols: Vec<Vec<f64>> = desired.iter().map(|&k| col(k)).collect();
        joint_cols.extend(interf_cols.iter().cloned());
        let rank_interference = linalg::rank(&linalg::from_columns(t, &interf_cols));
        let rank_joint = linalg::rank(&linalg::from_columns(t, &joint_cols));
        per_rrh.push(RrhCheck {
            rrh: m,
            desired: desired.len(),
            rank_interference,
            rank_joint,
            ok: rank_joint == rank_interference + desired.len(),
        });
    }
    Ok(Verification {
        feasible: per_rrh.iter().all(|c| c.ok),
        per_rrh,
    })
}

/// Small 4-UE / 8-RRH network used in examples and tests.
///
/// Estimated channels: UE1–{1,2}, UE2–{2,3,5}, UE3–{3,5}, UE4–{4,6,7,8};
/// interference-only links: UE2–1, UE1–4, UE3–4, UE2–7 (all 1-based).
/// Indices returned are 0-based.
pub fn four_ue_example() -> (Topology, EstimationPattern) {
    let estimated = [(1, 1), (1, 2), (2, 2), (2, 3), (2, 5), (3, 3), (3, 5), (4, 4), (4, 6), (4, 7), (4, 8)];
    let interference = [(2, 1), (1, 4), (3, 4), (2, 7)];
    let edges: Vec<(usize, usize, f64)> = estimated
        .iter()
        .map(|&(k, m)| (k - 1, m - 1, 1.0))
        .chain(interference.iter().map(|&(k, m)| (k - 1, m - 1, 0.1)))
        .collect();
    let topo = Topology::from_edges(4, 8, &edges).expect("fixture is valid");
    let pat = EstimationPattern::new(&topo, estimated.iter().map(|&(k, m)| (k - 1, m - 1))).expect("fixture is valid");
    (topo, pat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net2x2() -> NetworkRealization {
        NetworkRealization::from_beta(DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 2.0, 4.0]), -90.0).unwrap()
    }

    #[test]
    fn threshold_sparsification() {
        let topo = sparsify_threshold(&net2x2(), 2.0).unwrap();
        assert_eq!(topo.adjacency(), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]));
        let full = sparsify_threshold(&net2x2(), 1.0).unwrap();
        assert_eq!(full.num_edges(), 4);
        let empty = sparsify_threshold(&net2x2(), 5.0).unwrap();
        assert_eq!(empty.num_edges(), 0);
        assert_eq!(empty.isolated_ues(), vec![0, 1]);
        assert!(sparsify_threshold(&net2x2(), 0.0).is_err());
    }

    #[test]
    fn top_fraction_sparsification() {
        let topo = sparsify_top_fraction(&net2x2(), 0.5).unwrap();
        let edges: Vec<_> = topo.edges().collect();
        assert_eq!(edges, vec![(0, 0), (1, 1)]);
        assert_eq!(sparsify_top_fraction(&net2x2(), 1.0).unwrap().num_edges(), 4);
        let big = NetworkRealization::from_beta(DMatrix::from_fn(40, 100, |k, m| 1.0 + (k * 100 + m) as f64), 0.0).unwrap();
        assert_eq!(sparsify_top_fraction(&big, 0.75).unwrap().num_edges(), 3000);
        assert_eq!(sparsify_top_fraction(&big, 0.3).unwrap().num_edges(), 1200);
        assert!(sparsify_top_fraction(&big, 0.0).is_err());
    }

    #[test]
    fn top_fraction_ties_break_lexicographically() {
        let net = NetworkRealization::from_beta(DMatrix::from_element(2, 2, 1.0), 0.0).unwrap();
        let edges: Vec<_> = sparsify_top_fraction(&net, 0.5).unwrap().edges().collect();
        assert_eq!(edges, vec![(0, 0), (0, 1)]);
    }

    #[test]
    fn pattern_must_be_subset() {
        let topo = sparsify_threshold(&net2x2(), 2.0).unwrap();
        assert!(EstimationPattern::new(&topo, [(0, 1)]).is_err());
        assert!(EstimationPattern::new(&topo, [(1, 1)]).is_ok());
        assert_eq!(default_estimation_pattern(&topo).len(), topo.num_edges());
        let empty = sparsify_threshold(&net2x2(), 9.0).unwrap();
        assert!(default_estimation_pattern(&empty).is_empty());
    }

    #[test]
    fn conflict_rules_from_four_ue() {
        let (topo, pat) = four_ue_example();
        let cg = build_conflict_graph(&topo, &pat);
        let v = |k: usize, m: usize| cg.vertex_index(k - 1, m - 1).unwrap();
        assert!(!cg.is_adjacent(v(1, 1), v(1, 2)));
        // UE-2 reaches RRH-1.
        assert!(cg.is_adjacent(v(1, 1), v(2, 2)));
        assert!(cg.is_adjacent(v(1, 1), v(2, 3)));
        // UE-1 reaches RRH-4.
        assert!(cg.is_adjacent(v(1, 1), v(4, 4)));
        // Shared RRH.
        assert!(cg.is_adjacent(v(2, 3), v(3, 3)));
        for i in 0..cg.vertices.len() {
            assert!(!cg.is_adjacent(i, i));
            for &j in &cg.neighbors[i] {
                assert!(cg.is_adjacent(j, i));
            }
        }
    }

    #[test]
    fn disjoint_ues_do_not_conflict() {
        let topo = Topology::from_edges(2, 2, &[(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let cg = build_conflict_graph(&topo, &default_estimation_pattern(&topo));
        assert_eq!(cg.num_edges(), 0);
        let a = color_assignment(&cg).unwrap();
        assert_eq!(a.pilot_dim(), 1);
        assert_eq!(a.x, DMatrix::from_element(2, 1, 1.0));
    }

    #[test]
    fn clique_needs_n_colors() {
        // Every UE hits RRH 0.
        let edges: Vec<_> = (0..5).map(|k| (k, 0, 1.0)).collect();
        let topo = Topology::from_edges(5, 1, &edges).unwrap();
        let cg = build_conflict_graph(&topo, &default_estimation_pattern(&topo));
        assert_eq!(cg.num_edges(), 10);
        assert_eq!(color_assignment(&cg).unwrap().pilot_dim(), 5);
    }

    #[test]
    fn four_ue_coloring_uses_two_pilots() {
        let (topo, pat) = four_ue_example();
        let a = color_assignment(&build_conflict_graph(&topo, &pat)).unwrap();
        assert_eq!(a.pilot_dim(), 2);
        assert!(verify_assignment(&a.x, &topo, &pat).unwrap().feasible);
        // UE-4 ends up with both pilots, the others with one.
        let ones: Vec<usize> = (0..4).map(|k| a.pilot_of(k).iter().filter(|&&v| v == 1.0).count()).collect();
        assert_eq!(ones, vec![1, 1, 1, 2]);
    }

    #[test]
    fn four_ue_hand_assignment_is_feasible() {
        let (topo, pat) = four_ue_example();
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        assert!(verify_assignment(&x, &topo, &pat).unwrap().feasible);
    }

    #[test]
    fn shared_pilot_at_common_rrh_is_rejected() {
        let (topo, pat) = four_ue_example();
        // UE-1 and UE-2 are both estimated at RRH-2.
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let v = verify_assignment(&x, &topo, &pat).unwrap();
        assert!(!v.feasible);
        assert!(v.failing_rrhs().contains(&1));
    }

    #[test]
    fn identity_pilots_always_feasible() {
        let (topo, pat) = four_ue_example();
        assert!(verify_assignment(&DMatrix::identity(4, 4), &topo, &pat).unwrap().feasible);
        assert!(verify_assignment(&DMatrix::identity(3, 3), &topo, &pat).is_err());
    }

    #[test]
    fn coded_multicast_on_four_ue() {
        let (topo, _) = four_ue_example();
        let a = coded_multicast_assignment(&topo).unwrap();
        assert_eq!(a.pilot_dim(), 3);
        let pat = default_estimation_pattern(&topo);
        assert!(verify_assignment(&a.x, &topo, &pat).unwrap().feasible);
        // Any 3 pilots are independent.
        for c in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
            let cols: Vec<Vec<f64>> = c.iter().map(|&k| a.pilot_of(k)).collect();
            assert_eq!(linalg::rank(&linalg::from_columns(3, &cols)), 3);
        }
    }

    #[test]
    fn coded_multicast_single_ue_per_rrh() {
        let topo = Topology::from_edges(3, 3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]).unwrap();
        assert_eq!(coded_multicast_assignment(&topo).unwrap().pilot_dim(), 1);
    }
}
