//! A small dense LP solver and a binary branch-and-bound on top of it.
//!
//! Meant as an exact oracle for instances with a few dozen variables, not as
//! a general purpose MILP engine.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const TOL: f64 = 1e-9;

/// `max cᵀx  s.t.  a_i·x ≤ b_i,  0 ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lp {
    pub c: Vec<f64>,
    pub rows: Vec<(Vec<f64>, f64)>,
    pub upper: Vec<f64>,
}

impl Lp {
    pub fn new(num_vars: usize) -> Self {
        Self {
            c: vec![0.0; num_vars],
            rows: Vec::new(),
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    /// Adds `Σ coef·x_var ≤ rhs`.
    pub fn add_le(&mut self, terms: &[(usize, f64)], rhs: f64) {
        let mut row = vec![0.0; self.num_vars()];
        for &(j, v) in terms {
            row[j] += v;
        }
        self.rows.push((row, rhs));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        self.basis[r] = c;
    }

    /// Primal simplex with Bland's rule; maximizes `obj` using only columns
    /// flagged in `allowed`. Returns false if unbounded.
    fn maximize(&mut self, obj: &[f64], allowed: &[bool]) -> bool {
        loop {
            let mut entering = None;
            for j in 0..self.ncols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let d = obj[j] - self.basis.iter().enumerate().map(|(i, &b)| obj[b] * self.rows[i][j]).sum::<f64>();
                if d > TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > TOL {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => ratio < lr - TOL || (ratio <= lr + TOL && self.basis[i] < self.basis[li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

/// Two-phase simplex.
pub fn solve_lp(lp: &Lp) -> LpOutcome {
    let n = lp.num_vars();
    let mut rows: Vec<(Vec<f64>, f64)> = lp.rows.clone();
    for (j, &u) in lp.upper.iter().enumerate() {
        if u.is_finite() {
            let mut row = vec![0.0; n];
            row[j] = 1.0;
            rows.push((row, u));
        }
    }
    let m = rows.len();
    let n_art = rows.iter().filter(|r| r.1 < 0.0).count();
    let ncols = n + m + n_art;
    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        ncols,
    };
    let mut art = n + m;
    for (i, (a, b)) in rows.iter().enumerate() {
        let mut row = vec![0.0; ncols + 1];
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = sign * a[j];
        }
        row[n + i] = sign;
        row[ncols] = sign * b;
        if *b < 0.0 {
            row[art] = 1.0;
            tab.basis.push(art);
            art += 1;
        } else {
            tab.basis.push(n + i);
        }
        tab.rows.push(row);
    }

    if n_art > 0 {
        let mut phase1 = vec![0.0; ncols];
        for v in phase1.iter_mut().skip(n + m) {
            *v = -1.0;
        }
        tab.maximize(&phase1, &vec![true; ncols]);
        let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= n + m).map(|i| tab.rhs(i)).sum();
        if infeas > 1e-7 {
            return LpOutcome::Infeasible;
        }
        // Drive zero-level artificials out of the basis.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= n + m {
                match (0..n + m).find(|&j| tab.rows[i][j].abs() > TOL) {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut obj = vec![0.0; ncols];
    obj[..n].copy_from_slice(&lp.c);
    let allowed: Vec<bool> = (0..ncols).map(|j| j < n + m).collect();
    if !tab.maximize(&obj, &allowed) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs(i);
        }
    }
    let value = lp.c.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpOutcome::Optimal { x, value }
}

/// Result of [`branch_and_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct BnbSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub nodes: usize,
}

struct Node {
    bound: f64,
    seq: usize,
    fixed: Vec<(usize, bool)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then(other.seq.cmp(&self.seq))
    }
}

/// Maximizes `lp` with the variables flagged in `binary` restricted to {0, 1}.
///
/// Best-bound node selection, branching on the most fractional variable
/// (lowest index on ties). Returns `None` if the program is infeasible.
pub fn branch_and_bound(lp: &Lp, binary: &[bool]) -> Option<BnbSolution> {
    let mut base = lp.clone();
    for (j, &b) in binary.iter().enumerate() {
        if b {
            base.upper[j] = base.upper[j].min(1.0);
        }
    }
    let relax = |fixed: &[(usize, bool)]| -> LpOutcome {
        let mut sub = base.clone();
        for &(j, one) in fixed {
            if one {
                sub.add_le(&[(j, -1.0)], -1.0);
            } else {
                sub.upper[j] = 0.0;
            }
        }
        solve_lp(&sub)
    };

    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    let mut nodes = 0;
    let mut best: Option<BnbSolution> = None;
    heap.push(Node {
        bound: f64::INFINITY,
        seq,
        fixed: Vec::new(),
    });
    while let Some(node) = heap.pop() {
        if let Some(b) = &best {
            if node.bound <= b.value + TOL {
                break;
            }
        }
        nodes += 1;
        let LpOutcome::Optimal { x, value } = relax(&node.fixed) else { continue };
        if best.as_ref().is_some_and(|b| value <= b.value + TOL) {
            continue;
        }
        let branch = binary
            .iter()
            .enumerate()
            .filter(|(j, &b)| b && (x[*j] - x[*j].round()).abs() > 1e-7)
            .map(|(j, _)| (j, (x[j] - 0.5).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        match branch {
            None => {
                let mut xi = x;
                for (j, &b) in binary.iter().enumerate() {
                    if b {
                        xi[j] = xi[j].round();
                    }
                }
                best = Some(BnbSolution { x: xi, value, nodes });
            }
            Some((j, _)) => {
                for one in [true, false] {
                    seq += 1;
                    let mut fixed = node.fixed.clone();
                    fixed.push((j, one));
                    heap.push(Node { bound: value, seq, fixed });
                }
            }
        }
    }
    best.map(|mut b| {
        b.nodes = nodes;
        b
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(out: LpOutcome) -> (Vec<f64>, f64) {
        match out {
            LpOutcome::Optimal { x, value } => (x, value),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_lp() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 -> (2, 6), 36.
        let mut lp = Lp::new(2);
        lp.c = vec![3.0, 5.0];
        lp.add_le(&[(0, 1.0)], 4.0);
        lp.add_le(&[(1, 2.0)], 12.0);
        lp.add_le(&[(0, 3.0), (1, 2.0)], 18.0);
        let (x, v) = optimal(solve_lp(&lp));
        assert!((v - 36.0).abs() < 1e-9);
        assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn lower_bounds_need_phase_one() {
        // max -x - y, x + y ≥ 2, x ≤ 1.5 -> value -2.
        let mut lp = Lp::new(2);
        lp.c = vec![-1.0, -1.0];
        lp.add_le(&[(0, -1.0), (1, -1.0)], -2.0);
        lp.upper[0] = 1.5;
        let (x, v) = optimal(solve_lp(&lp));
        assert!((v + 2.0).abs() < 1e-9);
        assert!(x[0] <= 1.5 + 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = Lp::new(1);
        lp.add_le(&[(0, 1.0)], 1.0);
        lp.add_le(&[(0, -1.0)], -2.0);
        assert_eq!(solve_lp(&lp), LpOutcome::Infeasible);
        let mut lp = Lp::new(1);
        lp.c = vec![1.0];
        assert_eq!(solve_lp(&lp), LpOutcome::Unbounded);
    }

    #[test]
    fn knapsack_by_branch_and_bound() {
        // Weights 5, 4, 3; values 10, 40, 30; capacity 7 -> items 1 and 2, 70.
        let mut lp = Lp::new(3);
        lp.c = vec![10.0, 40.0, 30.0];
        lp.add_le(&[(0, 5.0), (1, 4.0), (2, 3.0)], 7.0);
        let sol = branch_and_bound(&lp, &[true; 3]).unwrap();
        assert_eq!(sol.x, vec![0.0, 1.0, 1.0]);
        assert!((sol.value - 70.0).abs() < 1e-9);
    }

    #[test]
    fn exhaustive_agreement_on_small_programs() {
        use crate::rng::rng_from_seed;
        use rand::Rng;
        let mut rng = rng_from_seed(9);
        for _ in 0..40 {
            let n = rng.random_range(2..7);
            let mut lp = Lp::new(n);
            lp.c = (0..n).map(|_| rng.random_range(-2.0..5.0)).collect();
            for _ in 0..rng.random_range(1..4) {
                let terms: Vec<(usize, f64)> = (0..n).map(|j| (j, rng.random_range(-1.0..3.0))).collect();
                lp.add_le(&terms, rng.random_range(0.0..4.0));
            }
            let brute = (0u32..1 << n)
                .filter_map(|mask| {
                    let x: Vec<f64> = (0..n).map(|j| f64::from((mask >> j) & 1)).collect();
                    let ok = lp.rows.iter().all(|(a, b)| a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-12);
                    ok.then(|| lp.c.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>())
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let sol = branch_and_bound(&lp, &vec![true; n]).unwrap();
            assert!((sol.value - brute).abs() < 1e-7, "{} vs {brute}", sol.value);
        }
    }
}
