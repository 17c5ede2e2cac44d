//! Cyclic Jacobi eigensolver for dense real symmetric matrices.
//!
//! Each step applies a plane rotation that annihilates one off-diagonal entry.
//! Sweeps visit all pairs `p < q` in row order until the off-diagonal
//! Frobenius norm falls below `tol * ||A||_F`. The method is slower than
//! tridiagonal QR but is deterministic, self-contained and computes small
//! eigenvalues to high absolute accuracy.

use thiserror::Error;

use crate::numeric::{neumaier_sum, Matrix};

pub const DEFAULT_TOL: f64 = 1e-15;
pub const DEFAULT_MAX_SWEEPS: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JacobiError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max |a_ij - a_ji| = {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("Jacobi sweeps did not converge: off-diagonal norm {off_norm:.3e} after {sweeps} sweeps (matrix norm {norm:.3e})")]
    NoConvergence { sweeps: usize, off_norm: f64, norm: f64 },
}

/// Eigenpairs of a symmetric matrix. Row `k` of `vectors` is the unit
/// eigenvector for `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
    pub sweeps: usize,
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    neumaier_sum((0..n).flat_map(|i| {
        let row = a.row(i);
        (0..n).filter(move |&j| j != i).map(move |j| row[j] * row[j])
    }))
    .sqrt()
}

/// Full eigendecomposition with default tolerance and sweep limit.
pub fn eigh(matrix: &Matrix) -> Result<SymmetricEigen, JacobiError> {
    eigh_with(matrix, DEFAULT_TOL, DEFAULT_MAX_SWEEPS)
}

pub fn eigh_with(matrix: &Matrix, tol: f64, max_sweeps: usize) -> Result<SymmetricEigen, JacobiError> {
    if !matrix.is_square() {
        return Err(JacobiError::NotSquare {
            rows: matrix.rows(),
            cols: matrix.cols(),
        });
    }
    if matrix.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(JacobiError::NonFinite);
    }
    let norm = matrix.frobenius_norm();
    let asym = matrix.asymmetry();
    if asym > 1e-12 * norm.max(f64::MIN_POSITIVE) {
        return Err(JacobiError::NotSymmetric(asym));
    }

    let n = matrix.rows();
    let mut a = matrix.clone();
    // Rows of `v` are the accumulated eigenvectors.
    let mut v = Matrix::identity(n);
    let target = tol * norm;
    // Entries this small cannot move the off-norm above target.
    let skip = target / (n.max(1) as f64);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= target || norm == 0.0 {
            break;
        }
        if sweeps == max_sweeps {
            return Err(JacobiError::NoConvergence {
                sweeps,
                off_norm: off,
                norm,
            });
        }
        sweeps += 1;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= skip {
                    continue;
                }
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let values = (0..n).map(|i| a[(i, i)]).collect();
    Ok(SymmetricEigen { values, vectors: v, sweeps })
}

/// Applies the rotation zeroing `a[p][q]`, keeping `a` symmetric.
#[inline]
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let n = a.rows();
    let apq = a[(p, q)];
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    {
        // Rows p and q are contiguous; columns are mirrored afterwards.
        let (lo, hi) = split_rows(a, p, q);
        for k in 0..n {
            let x = lo[k];
            let y = hi[k];
            lo[k] = c * x - s * y;
            hi[k] = s * x + c * y;
        }
    }
    for k in 0..n {
        if k != p && k != q {
            let x = a[(p, k)];
            let y = a[(q, k)];
            a[(k, p)] = x;
            a[(k, q)] = y;
        }
    }
    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;

    let (lo, hi) = split_rows(v, p, q);
    for k in 0..n {
        let x = lo[k];
        let y = hi[k];
        lo[k] = c * x - s * y;
        hi[k] = s * x + c * y;
    }
}

/// Mutable views of rows `p < q`.
fn split_rows(m: &mut Matrix, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let cols = m.cols();
    let (head, tail) = m.data_mut().split_at_mut(q * cols);
    (&mut head[p * cols..(p + 1) * cols], &mut tail[..cols])
}

impl SymmetricEigen {
    /// Reorders eigenpairs by decreasing `|lambda|` (ties by decreasing
    /// value) and fixes each vector's sign so that its largest-magnitude entry
    /// is positive.
    pub fn sorted_by_magnitude(mut self) -> Self {
        let n = self.values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            let (a, b) = (self.values[i], self.values[j]);
            b.abs()
                .total_cmp(&a.abs())
                .then(b.total_cmp(&a))
                .then(i.cmp(&j))
        });
        let values = order.iter().map(|&i| self.values[i]).collect();
        let mut vectors = Matrix::zeros(n, self.vectors.cols());
        for (dst, &src) in order.iter().enumerate() {
            let row = vectors.row_mut(dst);
            row.copy_from_slice(self.vectors.row(src));
            fix_sign(row);
        }
        self.values = values;
        self.vectors = vectors;
        self
    }

    /// `max_k ||A v_k - lambda_k v_k||`.
    pub fn max_residual(&self, matrix: &Matrix) -> f64 {
        (0..self.values.len())
            .map(|k| {
                let vk = self.vectors.row(k);
                let av = matrix.mul_vec(vk);
                av.iter()
                    .zip(vk)
                    .map(|(x, y)| (x - self.values[k] * y).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Makes the entry of largest magnitude positive (first one on ties).
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym_test_matrix(n: usize) -> Matrix {
        Matrix::from_fn(n, n, |i, j| {
            let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
            (-(x - y).powi(2) * 3.0).exp() + if i == j { 0.1 * x } else { 0.0 }
        })
    }

    #[test]
    fn diagonalizes_two_by_two() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let e = eigh(&m).unwrap().sorted_by_magnitude();
        assert!((e.values[0] - 3.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[(0, 0)] - r).abs() < 1e-15);
        assert!((e.vectors[(0, 1)] - r).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix_needs_no_sweeps() {
        let e = eigh(&Matrix::zeros(5, 5)).unwrap();
        assert_eq!(e.sweeps, 0);
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn residual_and_orthonormality() {
        let m = sym_test_matrix(40);
        let e = eigh(&m).unwrap().sorted_by_magnitude();
        assert!(e.max_residual(&m) < 1e-12 * m.frobenius_norm());
        for i in 0..40 {
            for j in 0..40 {
                let dot: f64 = e.vectors.row(i).iter().zip(e.vectors.row(j)).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-13);
            }
        }
        for w in e.values.windows(2) {
            assert!(w[0].abs() >= w[1].abs());
        }
    }

    #[test]
    fn matches_nalgebra_reference() {
        let m = sym_test_matrix(30);
        let mut ours = eigh(&m).unwrap().values;
        let dm = nalgebra::DMatrix::from_fn(30, 30, |i, j| m[(i, j)]);
        let mut theirs: Vec<f64> = nalgebra::SymmetricEigen::new(dm).eigenvalues.iter().copied().collect();
        ours.sort_by(f64::total_cmp);
        theirs.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn indefinite_spectrum() {
        let m = Matrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.5],
        ]);
        let e = eigh(&m).unwrap().sorted_by_magnitude();
        assert_eq!(e.values.len(), 3);
        assert!((e.values[0] - 1.0).abs() < 1e-15);
        assert!((e.values[1] + 1.0).abs() < 1e-15);
        assert!((e.values[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_asymmetric_and_non_square() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(matches!(eigh(&m), Err(JacobiError::NotSymmetric(_))));
        assert!(matches!(eigh(&Matrix::zeros(2, 3)), Err(JacobiError::NotSquare { .. })));
        let mut bad = Matrix::identity(2);
        bad[(0, 0)] = f64::NAN;
        assert!(matches!(eigh(&bad), Err(JacobiError::NonFinite)));
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
    }
}
