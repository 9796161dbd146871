use nalgebra::{DMatrix, SymmetricEigen};

use crate::Vector;

/// Eigenvalues below this fraction of the largest one are treated as zero.
pub(crate) const RELATIVE_RANK_TOL: f64 = 1e-10;

/// Moore–Penrose inverse of a symmetric positive semidefinite matrix.
pub fn pseudo_inverse_sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let mut out = DMatrix::zeros(n, n);
    if max_eig <= 0.0 {
        return out;
    }
    let cutoff = max_eig * RELATIVE_RANK_TOL;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / lambda;
        }
    }
    out
}

/// Orthonormal basis (as columns) of the span of `vectors`.
pub(crate) fn span_basis(vectors: &[Vector], dim: usize) -> DMatrix<f64> {
    let mut scatter = DMatrix::zeros(dim, dim);
    for v in vectors {
        scatter += v * v.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    if max_eig <= 0.0 {
        return DMatrix::zeros(dim, 0);
    }
    let cutoff = max_eig * RELATIVE_RANK_TOL;
    let keep: Vec<usize> = (0..dim).filter(|&k| eig.eigenvalues[k] > cutoff).collect();
    let mut basis = DMatrix::zeros(dim, keep.len());
    for (col, &k) in keep.iter().enumerate() {
        basis.set_column(col, &eig.eigenvectors.column(k));
    }
    basis
}

/// `log log d` with a floor, read as `max(1, log2 log2 max(d, 4))`.
///
/// The raw expression is undefined or negative for `d <= 3`.
pub fn log_log_guard(d: usize) -> f64 {
    let d = d.max(4) as f64;
    d.log2().log2().max(1.0)
}
