//! Small dense linear algebra for symmetric matrices.
//!
//! Everything here operates on row-major `n x n` matrices stored as flat
//! `Vec<f64>`. The matrices in this crate are tiny (Gram matrices of size
//! m <= 4, moderate-deviation covariance blocks of size k + m(m+1)/2), so a
//! cyclic Jacobi iteration and an unblocked Cholesky are all that is needed.

/// Result of a symmetric eigendecomposition `A = Q diag(values) Q^T`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Column `j` of `Q` (row-major) is the eigenvector for `values[j]`.
    pub vectors: Vec<f64>,
    pub n: usize,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Sweeps rotate away off-diagonal entries until their largest magnitude
/// drops below `1e-14` times the largest diagonal scale. Convergence is
/// quadratic; a handful of sweeps suffices for the sizes used here.
pub fn sym_eigen(matrix: &[f64], n: usize) -> SymEigen {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    if n > 1 {
        let scale = (0..n)
            .map(|i| a[i * n + i].abs())
            .fold(f64::MIN_POSITIVE, f64::max);
        let tol = 1e-14 * scale;
        for _sweep in 0..64 {
            let mut off = 0.0f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off.max(a[i * n + j].abs());
                }
            }
            if off <= tol {
                break;
            }
            for p in 0..n {
                for r in (p + 1)..n {
                    let apr = a[p * n + r];
                    if apr.abs() <= tol * 1e-2 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let arr = a[r * n + r];
                    let theta = (arr - app) / (2.0 * apr);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akr = a[k * n + r];
                        a[k * n + p] = c * akp - s * akr;
                        a[k * n + r] = s * akp + c * akr;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let ark = a[r * n + k];
                        a[p * n + k] = c * apk - s * ark;
                        a[r * n + k] = s * apk + c * ark;
                    }
                    for k in 0..n {
                        let qkp = q[k * n + p];
                        let qkr = q[k * n + r];
                        q[k * n + p] = c * qkp - s * qkr;
                        q[k * n + r] = s * qkp + c * qkr;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_j, &old_j) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + new_j] = q[k * n + old_j];
        }
    }
    SymEigen { values, vectors, n }
}

impl SymEigen {
    /// Reassemble `Q f(diag) Q^T` for a scalar spectral map `f`.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.vectors[i * n + k] * f(self.values[k]) * self.vectors[j * n + k];
                }
                out[i * n + j] = acc;
            }
        }
        out
    }
}

/// Cholesky factorization `A = L L^T` of a symmetric positive definite matrix.
///
/// Returns `None` when a pivot is not strictly positive.
pub fn cholesky(matrix: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = matrix[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solve `A x = b` given the Cholesky factor `L` of `A`.
pub fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    x
}

/// Pairwise (cascade) summation.
///
/// The reduction tree depends only on the slice layout, so results are
/// bit-identical no matter how many threads produced the inputs, and the
/// rounding error grows like O(log n) instead of O(n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BASE: usize = 32;
    if xs.len() <= BASE {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean via pairwise summation.
pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance via pairwise summation of centered squares.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|&x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (n - 1) as f64
}

/// Sample skewness m3 / m2^(3/2) with biased central moments.
pub fn sample_skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|&x| (x - m) * (x - m)).collect();
    let cu: Vec<f64> = xs.iter().map(|&x| (x - m) * (x - m) * (x - m)).collect();
    let m2 = pairwise_sum(&sq) / n;
    let m3 = pairwise_sum(&cu) / n;
    m3 / m2.powf(1.5)
}
