//! Minimal dense linear algebra for small symmetric positive-definite
//! matrices (dimensions here are P2 <= 20).
//!
//! Only what the covariance models need: a Cholesky factorization, a
//! triangular solver built on it, and the trace of A * B^-1 computed
//! column by column without forming the inverse.

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    dim: usize,
    /// Row-major lower triangle, including the diagonal.
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factors `matrix` as L * L^T. Returns `None` when the matrix is not
    /// numerically positive definite (non-positive or non-finite pivot).
    pub(crate) fn factor(matrix: &[Vec<f64>]) -> Option<Self> {
        let dim = matrix.len();
        let mut lower = vec![0.0f64; dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let mut acc = matrix[i][j];
                for k in 0..j {
                    acc -= lower[i * dim + k] * lower[j * dim + k];
                }
                if i == j {
                    if acc <= 0.0 || !acc.is_finite() {
                        return None;
                    }
                    lower[i * dim + i] = acc.sqrt();
                } else {
                    lower[i * dim + j] = acc / lower[j * dim + j];
                }
            }
        }
        Some(Self { dim, lower })
    }

    /// Solves (L L^T) x = b in place via forward and back substitution.
    #[allow(clippy::needless_range_loop)] // triangular access patterns
    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let mut acc = b[i];
            for k in 0..i {
                acc -= self.lower[i * n + k] * b[k];
            }
            b[i] = acc / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for k in i + 1..n {
                acc -= self.lower[k * n + i] * b[k];
            }
            b[i] = acc / self.lower[i * n + i];
        }
    }
}

/// tr(A * B^-1) for symmetric A and positive-definite B, given B's factor:
/// solve B x_j = a_j for each column a_j of A and accumulate x_j[j].
pub(crate) fn trace_product_inverse(a: &[Vec<f64>], b: &Cholesky) -> f64 {
    let dim = a.len();
    let mut trace = 0.0;
    let mut column = vec![0.0f64; dim];
    for j in 0..dim {
        for (i, row) in a.iter().enumerate() {
            column[i] = row[j];
        }
        b.solve_in_place(&mut column);
        trace += column[j];
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-10;

    fn identity(dim: usize) -> Vec<Vec<f64>> {
        (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    #[test]
    fn factor_identity() {
        let chol = Cholesky::factor(&identity(4)).unwrap();
        for i in 0..4 {
            for j in 0..=i {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((chol.lower[i * 4 + j] - expected).abs() < EPS);
            }
        }
    }

    #[test]
    fn factor_known_2x2() {
        // [[4, 2], [2, 3]] = L L^T with L = [[2, 0], [1, sqrt(2)]].
        let m = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let chol = Cholesky::factor(&m).unwrap();
        assert!((chol.lower[0] - 2.0).abs() < EPS);
        assert!((chol.lower[2] - 1.0).abs() < EPS);
        assert!((chol.lower[3] - 2.0f64.sqrt()).abs() < EPS);
    }

    #[test]
    fn factor_rejects_indefinite() {
        assert!(Cholesky::factor(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_none());
        assert!(Cholesky::factor(&[vec![0.0]]).is_none());
        assert!(Cholesky::factor(&[vec![-1.0]]).is_none());
    }

    #[test]
    fn solve_reproduces_rhs() {
        let m = vec![
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ];
        let chol = Cholesky::factor(&m).unwrap();
        let x_true = [1.0, -2.0, 0.5];
        let mut b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| m[i][j] * x_true[j]).sum())
            .collect();
        chol.solve_in_place(&mut b);
        for (got, want) in b.iter().zip(&x_true) {
            assert!((got - want).abs() < EPS);
        }
    }

    #[test]
    fn trace_of_self_product_is_dimension() {
        let m = vec![
            vec![2.0, 0.3, 0.1],
            vec![0.3, 1.5, 0.2],
            vec![0.1, 0.2, 1.0],
        ];
        let chol = Cholesky::factor(&m).unwrap();
        assert!((trace_product_inverse(&m, &chol) - 3.0).abs() < EPS);
    }

    #[test]
    fn trace_against_diagonal_case() {
        // A = diag(1, 2), B = I: tr(A B^-1) = 3.
        let a = vec![vec![1.0, 0.0], vec![0.0, 2.0]];
        let b = Cholesky::factor(&identity(2)).unwrap();
        assert!((trace_product_inverse(&a, &b) - 3.0).abs() < EPS);
    }
}
