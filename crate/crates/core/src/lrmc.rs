//! Pilot dimension minimization for a known estimation pattern.
//!
//! The pilot dimension is the rank of a partially specified matrix `A`
//! with one row block per RRH. Inside block `m` the columns of captured but
//! not estimated UEs are forced to zero and the first `r_m = |T_E,m|` rows
//! restricted to the estimated UEs are forced to the identity. Alternating
//! projection between the rank set and this affine set finds a completion;
//! the returned `T` is an upper bound on the minimum rank.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{rng_from_seed, split_seed, standard_normal};
use crate::topo::{verify_assignment, EstimationPattern, Topology};

/// Rows of `A` belonging to one RRH.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowBlock {
    pub rrh: usize,
    /// First row of the block in `A`.
    pub start: usize,
    /// `T_m`, sorted. The block has `|T_m|` rows.
    pub connected: Vec<usize>,
    /// `T_E,m`, sorted.
    pub estimated: Vec<usize>,
    /// `T_m \ T_E,m`, sorted; these columns are zero inside the block.
    pub interferers: Vec<usize>,
}

impl RowBlock {
    pub fn height(&self) -> usize {
        self.connected.len()
    }

    pub fn rows(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.height()
    }
}

/// The structured completion problem derived from `(G, G_E)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionProblem {
    pub num_ue: usize,
    pub num_rrh: usize,
    /// One block per RRH with at least one connected UE.
    pub blocks: Vec<RowBlock>,
}

impl CompletionProblem {
    pub fn new(topo: &Topology, pat: &EstimationPattern) -> Result<Self> {
        if pat.num_ue() != topo.num_ue() || pat.num_rrh() != topo.num_rrh() {
            return Err(Error::Shape("pattern and topology dimensions differ".into()));
        }
        let mut blocks = Vec::new();
        let mut start = 0;
        for m in 0..topo.num_rrh() {
            let connected = topo.rrh_neighbors(m);
            if connected.is_empty() {
                continue;
            }
            let (estimated, interferers) = connected.iter().partition(|&&k| pat.contains(k, m));
            let height = connected.len();
            blocks.push(RowBlock {
                rrh: m,
                start,
                connected,
                estimated,
                interferers,
            });
            start += height;
        }
        Ok(Self {
            num_ue: topo.num_ue(),
            num_rrh: topo.num_rrh(),
            blocks,
        })
    }

    /// `M̄ = Σ_m |T_m|`.
    pub fn num_rows(&self) -> usize {
        self.blocks.iter().map(RowBlock::height).sum()
    }

    /// `max_m r_m`, a lower bound on any feasible rank.
    pub fn rank_lower_bound(&self) -> usize {
        self.blocks.iter().map(|b| b.estimated.len()).max().unwrap_or(0)
    }

    /// Rebuilds topology (unit weights) and pattern.
    pub fn to_graphs(&self) -> Result<(Topology, EstimationPattern)> {
        let edges: Vec<(usize, usize, f64)> = self
            .blocks
            .iter()
            .flat_map(|b| b.connected.iter().map(move |&k| (k, b.rrh, 1.0)))
            .collect();
        let topo = Topology::from_edges(self.num_ue, self.num_rrh, &edges)?;
        let pat = EstimationPattern::new(&topo, self.blocks.iter().flat_map(|b| b.estimated.iter().map(move |&k| (k, b.rrh))))?;
        Ok((topo, pat))
    }

    /// Index-list text: a `K M` header, then one `ue rrh e|i` line per edge
    /// (`e` = estimated, `i` = interference only).
    pub fn to_index_list(&self) -> String {
        let mut out = format!("{} {}\n", self.num_ue, self.num_rrh);
        for b in &self.blocks {
            for &k in &b.connected {
                let tag = if b.estimated.contains(&k) { 'e' } else { 'i' };
                writeln!(out, "{k} {} {tag}", b.rrh).unwrap();
            }
        }
        out
    }

    pub fn from_index_list(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "missing `K M` header"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::parse(path, hline + 1, format!("bad integer `{t}`"))))
            .collect::<Result<_>>()?;
        let [k_n, m_n] = dims[..] else {
            return Err(Error::parse(path, hline + 1, "header must be `K M`"));
        };
        let mut edges = Vec::new();
        let mut estimated = Vec::new();
        for (i, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::parse(path, i + 1, "expected `ue rrh e|i`"));
            }
            let k: usize = f[0].parse().map_err(|_| Error::parse(path, i + 1, "bad ue index"))?;
            let m: usize = f[1].parse().map_err(|_| Error::parse(path, i + 1, "bad rrh index"))?;
            if k >= k_n || m >= m_n {
                return Err(Error::parse(path, i + 1, format!("edge ({k},{m}) out of range")));
            }
            match f[2] {
                "e" => estimated.push((k, m)),
                "i" => {}
                other => return Err(Error::parse(path, i + 1, format!("unknown edge tag `{other}`"))),
            }
            edges.push((k, m, 1.0));
        }
        let topo = Topology::from_edges(k_n, m_n, &edges)?;
        let pat = EstimationPattern::new(&topo, estimated)?;
        Self::new(&topo, &pat)
    }
}

/// Tuning of [`complete`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionOptions {
    /// Convergence threshold on `‖A − B‖_F`.
    pub eps: f64,
    pub it_max: usize,
    pub restarts: usize,
    /// Window and relative decrease used to declare a stall.
    pub stall_window: usize,
    pub stall_rel: f64,
}

impl Default for CompletionOptions {
    fn default() -> Self {
        Self {
            eps: 1e-5,
            it_max: 2000,
            restarts: 3,
            stall_window: 100,
            stall_rel: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    /// Achieved rank, i.e. the pilot dimension.
    pub t: usize,
    pub a: DMatrix<f64>,
    pub converged: bool,
    pub iterations_used: usize,
    pub residual: f64,
}

/// Best rank-`r` approximation (truncated SVD).
pub fn project_rank(a: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if r >= rows.min(cols) {
        return a.clone();
    }
    if r == 0 {
        return DMatrix::zeros(rows, cols);
    }
    let svd = a.clone().svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let mut out = DMatrix::zeros(rows, cols);
    for &i in order.iter().take(r) {
        out += svd.singular_values[i] * u.column(i) * vt.row(i);
    }
    out
}

/// Rank projection for tall matrices through the `K x K` Gram matrix.
///
/// Projects the rows onto the dominant `r`-dimensional right singular
/// subspace, which equals the truncated SVD whenever `σ_r > σ_{r+1}`.
fn project_rank_gram(a: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let cols = a.ncols();
    if r >= a.nrows().min(cols) {
        return a.clone();
    }
    let eig = SymmetricEigen::new(a.transpose() * a);
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let v = DMatrix::from_fn(cols, r, |i, j| eig.eigenvectors[(i, order[j])]);
    let av = a * &v;
    av * v.transpose()
}

/// Zero-forced entries set to 0 and the identity blocks enforced; all other
/// entries copied.
pub fn project_affine(b: &DMatrix<f64>, prob: &CompletionProblem) -> DMatrix<f64> {
    let mut a = b.clone();
    for blk in &prob.blocks {
        for row in blk.rows() {
            for &k in &blk.interferers {
                a[(row, k)] = 0.0;
            }
        }
        for (j, &k) in blk.estimated.iter().enumerate() {
            for i in 0..blk.estimated.len() {
                a[(blk.start + i, k)] = if i == j { 1.0 } else { 0.0 };
            }
        }
    }
    a
}

struct Attempt {
    b: DMatrix<f64>,
    converged: bool,
    iterations: usize,
    gap: f64,
}

fn attempt(prob: &CompletionProblem, r: usize, opts: &CompletionOptions, seed: u64) -> Attempt {
    let mut rng = rng_from_seed(seed);
    let (rows, cols) = (prob.num_rows(), prob.num_ue);
    let start = DMatrix::from_fn(rows, cols, |_, _| standard_normal(&mut rng));
    let mut a = project_affine(&start, prob);
    let mut history: Vec<f64> = Vec::new();
    let mut b = a.clone();
    let mut gap = f64::INFINITY;
    for it in 0..opts.it_max {
        b = project_rank_gram(&a, r);
        gap = (&a - &b).norm();
        if gap <= opts.eps {
            return Attempt { b, converged: true, iterations: it + 1, gap };
        }
        history.push(gap);
        if history.len() > opts.stall_window {
            let old = history[history.len() - 1 - opts.stall_window];
            if gap > old * (1.0 - opts.stall_rel) {
                return Attempt { b, converged: false, iterations: it + 1, gap };
            }
        }
        a = project_affine(&b, prob);
    }
    Attempt {
        b,
        converged: false,
        iterations: opts.it_max,
        gap,
    }
}

/// Scans `r = K, K−1, …` down to the block lower bound and keeps the
/// smallest rank at which alternating projection converged.
pub fn complete(prob: &CompletionProblem, opts: &CompletionOptions, seed: u64) -> CompletionResult {
    let k_n = prob.num_ue;
    let lower = prob.rank_lower_bound().max(1);
    let mut best: Option<CompletionResult> = None;
    let mut total_iters = 0;
    for r in (lower..=k_n).rev() {
        let mut found = None;
        for restart in 0..opts.restarts.max(1) {
            let s = split_seed(seed, (r as u64) << 16 | restart as u64);
            let att = attempt(prob, r, opts, s);
            total_iters += att.iterations;
            if att.converged {
                found = Some(att);
                break;
            }
        }
        match found {
            Some(att) => {
                best = Some(CompletionResult {
                    t: r,
                    a: att.b,
                    converged: true,
                    iterations_used: total_iters,
                    residual: att.gap,
                });
            }
            None => break,
        }
    }
    best.unwrap_or_else(|| CompletionResult {
        t: k_n,
        a: dedicated_completion(prob),
        converged: false,
        iterations_used: total_iters,
        residual: f64::NAN,
    })
}

/// The completion induced by dedicated pilots `X = I_K`: inside block `m`,
/// estimated UE `T_E,m[i]` maps to row `i`.
pub fn dedicated_completion(prob: &CompletionProblem) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(prob.num_rows(), prob.num_ue);
    for blk in &prob.blocks {
        for (i, &k) in blk.estimated.iter().enumerate() {
            a[(blk.start + i, k)] = 1.0;
        }
    }
    a
}

/// Outcome of the structural checks on a completion.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionCheck {
    /// `σ_{T+1} / σ_1`.
    pub rank_ratio: f64,
    pub max_omega_entry: f64,
    pub max_identity_error: f64,
    /// Every `[A]_{I_m, T_E,m}` has full column rank.
    pub blocks_full_rank: bool,
}

impl CompletionCheck {
    pub fn passes(&self, rank_tol: f64, entry_tol: f64) -> bool {
        self.rank_ratio < rank_tol && self.max_omega_entry < entry_tol && self.max_identity_error < entry_tol && self.blocks_full_rank
    }
}

pub fn check_completion(prob: &CompletionProblem, a: &DMatrix<f64>, t: usize) -> CompletionCheck {
    let sv = linalg::singular_values(a);
    let rank_ratio = match (sv.first(), sv.get(t)) {
        (Some(&s0), Some(&st)) if s0 > 0.0 => st / s0,
        _ => 0.0,
    };
    let mut max_omega_entry: f64 = 0.0;
    let mut max_identity_error: f64 = 0.0;
    let mut blocks_full_rank = true;
    for blk in &prob.blocks {
        for row in blk.rows() {
            for &k in &blk.interferers {
                max_omega_entry = max_omega_entry.max(a[(row, k)].abs());
            }
        }
        let r_m = blk.estimated.len();
        for (j, &k) in blk.estimated.iter().enumerate() {
            for i in 0..r_m {
                let target = if i == j { 1.0 } else { 0.0 };
                max_identity_error = max_identity_error.max((a[(blk.start + i, k)] - target).abs());
            }
        }
        let sub = DMatrix::from_fn(blk.height(), r_m, |i, j| a[(blk.start + i, blk.estimated[j])]);
        if linalg::rank_with_tol(&sub, 1e-6) != r_m {
            blocks_full_rank = false;
        }
    }
    CompletionCheck {
        rank_ratio,
        max_omega_entry,
        max_identity_error,
        blocks_full_rank,
    }
}

/// `A ≈ C Xᵀ` with binary `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryFactorization {
    /// K x T, entries in {0, 1}.
    pub x: DMatrix<f64>,
    /// M̄ x T; rows of block `m` form the per-RRH combiner `C_m`.
    pub c: DMatrix<f64>,
    pub relative_residual: f64,
    pub restart: usize,
}

/// Relative residual accepted as an exact factorization.
pub const BMF_RESIDUAL_TOL: f64 = 1e-6;
/// Above this pilot dimension the binary step rounds instead of enumerating.
pub const BMF_ENUMERATION_LIMIT: usize = 10;
const BMF_SWEEPS: usize = 100;

/// Factors `A = C Xᵀ` with `X ∈ {0,1}^{K x T}` by alternating least squares.
///
/// The `C` step is an ordinary least-squares fit; the `X` step picks, per
/// UE, the binary vector minimizing the column residual (exhaustively for
/// small `T`, by rounding otherwise). A result is returned only if the
/// residual is negligible and the pilots pass [`verify_assignment`].
pub fn factorize_binary(
    a: &DMatrix<f64>,
    t: usize,
    topo: &Topology,
    pat: &EstimationPattern,
    restarts: usize,
    seed: u64,
) -> Result<BinaryFactorization> {
    let k_n = a.ncols();
    if k_n != topo.num_ue() {
        return Err(Error::Shape(format!("A has {k_n} columns, topology has {} UEs", topo.num_ue())));
    }
    if t == 0 {
        return Err(Error::Contract("pilot dimension must be positive".into()));
    }
    let scale = a.norm().max(f64::MIN_POSITIVE);
    for restart in 0..restarts {
        let mut rng = rng_from_seed(split_seed(seed, restart as u64));
        let mut x = DMatrix::from_fn(k_n, t, |_, _| if rng.random::<bool>() { 1.0 } else { 0.0 });
        for k in 0..k_n {
            if x.row(k).iter().all(|&v| v == 0.0) {
                x[(k, rng.random_range(0..t))] = 1.0;
            }
        }
        for _ in 0..BMF_SWEEPS {
            let c = fit_combiner(a, &x);
            let next = fit_binary(a, &c);
            if next == x {
                break;
            }
            x = next;
        }
        let c = fit_combiner(a, &x);
        let rel = (a - &c * x.transpose()).norm() / scale;
        if rel <= BMF_RESIDUAL_TOL && verify_assignment(&x, topo, pat)?.feasible {
            return Ok(BinaryFactorization {
                x,
                c,
                relative_residual: rel,
                restart,
            });
        }
    }
    Err(Error::FactorizationFailed { restarts })
}

/// `C = A X (XᵀX)⁺`.
fn fit_combiner(a: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = x.transpose() * x;
    let pinv = gram.pseudo_inverse(1e-12).expect("non-negative tolerance");
    a * x * pinv
}

fn fit_binary(a: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let (k_n, t) = (a.ncols(), c.ncols());
    let mut x = DMatrix::zeros(k_n, t);
    if t <= BMF_ENUMERATION_LIMIT {
        let candidates: Vec<(u32, DMatrix<f64>)> = (0u32..1 << t)
            .map(|mask| {
                let v = DMatrix::from_fn(t, 1, |i, _| f64::from((mask >> i) & 1));
                (mask, c * v)
            })
            .collect();
        for k in 0..k_n {
            let col = a.column(k);
            let best = candidates
                .iter()
                .map(|(mask, cv)| (*mask, (cv - col).norm_squared()))
                .min_by(|p, q| p.1.total_cmp(&q.1).then(p.0.cmp(&q.0)))
                .map(|p| p.0)
                .unwrap();
            for i in 0..t {
                x[(k, i)] = f64::from((best >> i) & 1);
            }
        }
    } else {
        let pinv = c.clone().pseudo_inverse(1e-12).expect("non-negative tolerance");
        for k in 0..k_n {
            let ls = &pinv * a.column(k);
            for i in 0..t {
                x[(k, i)] = if ls[i] >= 0.5 { 1.0 } else { 0.0 };
            }
        }
    }
    x
}
