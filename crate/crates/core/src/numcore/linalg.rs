//! Small dense linear-algebra helpers backed by nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

/// Eigen-decomposition of a symmetric `n x n` row-major matrix.
///
/// Returns eigenvalues in descending order and the matching unit eigenvectors
/// (each as a length-`n` vector).
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(matrix.len(), n * n);
    let m = DMatrix::from_row_slice(n, n, matrix);
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}

/// Lower Cholesky factor of a symmetric positive-definite `n x n` matrix.
pub fn cholesky(matrix: &[f64], n: usize) -> Option<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, matrix);
    let l = m.cholesky()?.l();
    Some(
        (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| l[(r, c)])
            .collect(),
    )
}

/// Inverse of an `n x n` row-major matrix.
pub fn inverse(matrix: &[f64], n: usize) -> Option<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, matrix);
    let inv = m.try_inverse()?;
    Some(
        (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| inv[(r, c)])
            .collect(),
    )
}

/// Ratio of largest to smallest singular value of an `n x n` matrix (infinite when singular).
pub fn condition_number(matrix: &[f64], n: usize) -> f64 {
    let m = DMatrix::from_row_slice(n, n, matrix);
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_descending() {
        let (vals, vecs) = symmetric_eigen(&[1.0, 0.0, 0.0, 4.0], 2);
        assert!((vals[0] - 4.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
        assert!(vecs[0][0].abs() < 1e-12 && (vecs[0][1].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = [4.0, 2.0, 0.4, 2.0, 2.0, 0.5, 0.4, 0.5, 3.0];
        let l = cholesky(&a, 3).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let v: f64 = (0..3).map(|k| l[r * 3 + k] * l[c * 3 + k]).sum();
                assert!((v - a[r * 3 + c]).abs() < 1e-12);
            }
        }
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }
}
