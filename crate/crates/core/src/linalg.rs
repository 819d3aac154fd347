//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;

/// Singular values in decreasing order. Empty for a matrix with a zero dimension.
pub fn singular_values(matrix: &DMatrix<f64>) -> Vec<f64> {
    if matrix.nrows() == 0 || matrix.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = matrix
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values greater than `tol * σ_max`.
pub fn numerical_rank(matrix: &DMatrix<f64>, tol: f64) -> usize {
    assert!(tol > 0.0, "rank tolerance must be positive");
    rank_from_singular_values(&singular_values(matrix), tol)
}

pub fn rank_from_singular_values(sv: &[f64], tol: f64) -> usize {
    let Some(&max) = sv.first() else {
        return 0;
    };
    if max == 0.0 {
        return 0;
    }
    let cutoff = tol * max;
    sv.iter().filter(|s| **s > cutoff).count()
}

/// Smallest eigenvalue of a symmetric matrix; `None` when the matrix is empty.
pub fn min_symmetric_eigenvalue(matrix: &DMatrix<f64>) -> Option<f64> {
    if matrix.nrows() == 0 {
        return None;
    }
    let sym = (matrix + matrix.transpose()) * 0.5;
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .reduce(f64::min)
}
