//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub const MAX_SWEEPS: usize = 30;
const OFF_TOL: f64 = 1e-13;
const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues sorted by decreasing `|λ|` and the matching orthonormal
/// eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SymmetricEig {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// `M = V diag(λ) V^T` for a symmetric `M`.
///
/// Sweeps over all `(p, q)` pairs in row-cyclic order until the off-diagonal
/// Frobenius norm drops below `1e-13 * ||M||_F`.
pub fn symmetric_eig(m: &DenseMatrix) -> Result<SymmetricEig> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigensolver needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let residual = m.symmetry_residual();
    let tolerance = SYMMETRY_TOL * m.max_abs();
    if residual > tolerance {
        return Err(Error::SymmetryViolation {
            class: "symmetric",
            residual,
            tolerance,
        });
    }
    let n = m.rows();
    // work on the exactly symmetrized copy
    let mut a = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let mut v = DenseMatrix::identity(n);
    let target = OFF_TOL * a.frobenius_norm();

    let mut converged = false;
    let mut off = off_norm(&a);
    for _ in 0..MAX_SWEEPS {
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
        off = off_norm(&a);
    }
    if !converged && off > target {
        return Err(Error::NoConvergence {
            sweeps: MAX_SWEEPS,
            off_norm: off,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].abs().total_cmp(&a[(i, i)].abs()));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.col_mut(dst).copy_from_slice(v.col(src));
    }
    Ok(SymmetricEig { values, vectors })
}

fn off_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Applies `J^T A J` to the off-diagonal parts of rows/columns `p`, `q` and
/// accumulates `V J`.
fn rotate(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        let np = c * akp - s * akq;
        let nq = s * akp + c * akq;
        a[(k, p)] = np;
        a[(p, k)] = np;
        a[(k, q)] = nq;
        a[(q, k)] = nq;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
