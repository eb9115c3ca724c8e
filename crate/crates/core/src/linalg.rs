//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

/// Relative singular-value tolerance used by all rank decisions.
pub const RANK_RTOL: f64 = 1e-9;

pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Numerical rank: number of singular values above `rtol * sigma_max`.
pub fn rank_with_tol(a: &DMatrix<f64>, rtol: f64) -> usize {
    let sv = singular_values(a);
    match sv.first() {
        None => 0,
        Some(&s0) if s0 <= f64::MIN_POSITIVE => 0,
        Some(&s0) => sv.iter().filter(|&&s| s > rtol * s0).count(),
    }
}

pub fn rank(a: &DMatrix<f64>) -> usize {
    rank_with_tol(a, RANK_RTOL)
}

/// Matrix built from the given columns (each of length `nrows`).
pub fn from_columns(nrows: usize, cols: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(nrows, cols.len(), |i, j| cols[j][i])
}

/// Pairwise (cascade) summation; result does not depend on thread layout.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
