//! Centrosymmetric matrices (`A = A^T = E A E`, `E` the exchange permutation).
//!
//! For `n = 2m` the orthogonal `Q_E = [Q+ | Q-]` with
//! `Q± = [I_m; ±E_m] / √2` block diagonalizes `A` into
//! `A± = A11 ± A12 E_m`. Each half is factored with pivoted Cholesky and the
//! rank-1 terms `y± y±^T` are centrosymmetric individually.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::index::DEFAULT_STRUCTURE_TOL;
use crate::matrix::DenseMatrix;
use crate::pschol::{add_outer_products, check_trunc, pivoted_cholesky_dense, CholFactor};

#[derive(Clone, Debug)]
pub struct CentroRep {
    pub m: usize,
    pub plus: CholFactor,
    pub minus: CholFactor,
    pub delta: f64,
    /// Flops of both half factorizations plus block setup.
    pub flops: u64,
}

impl CentroRep {
    pub fn rplus(&self) -> usize {
        self.plus.rank
    }

    pub fn rminus(&self) -> usize {
        self.minus.rank
    }

    pub fn n(&self) -> usize {
        2 * self.m
    }
}

/// `max(|A - A^T|, |A - E A E|)`.
pub fn centro_residual(a: &DenseMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "centrosymmetry needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut r = a.symmetry_residual();
    for j in 0..n {
        for i in 0..n {
            r = r.max((a[(i, j)] - a[(n - 1 - i, n - 1 - j)]).abs());
        }
    }
    Ok(r)
}

pub fn is_centrosymmetric(a: &DenseMatrix, tol: f64) -> Result<bool> {
    Ok(centro_residual(a)? <= tol * a.max_abs())
}

fn check_input(a: &DenseMatrix) -> Result<usize> {
    let residual = centro_residual(a)?;
    if a.rows() % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "only even orders are supported, got n = {}",
            a.rows()
        )));
    }
    let tolerance = DEFAULT_STRUCTURE_TOL * a.max_abs();
    if residual > tolerance {
        return Err(Error::SymmetryViolation {
            class: "centrosymmetric",
            residual,
            tolerance,
        });
    }
    Ok(a.rows() / 2)
}

/// `(A11 + A12 E_m, A11 - A12 E_m)`.
pub fn centro_blocks(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let m = check_input(a)?;
    let n = 2 * m;
    let plus = DenseMatrix::from_fn(m, m, |i, j| a[(i, j)] + a[(i, n - 1 - j)]);
    let minus = DenseMatrix::from_fn(m, m, |i, j| a[(i, j)] - a[(i, n - 1 - j)]);
    Ok((plus, minus))
}

pub fn centro_factor(a: &DenseMatrix, delta: f64) -> Result<CentroRep> {
    centro_factor_with(a, delta, false)
}

/// As [`centro_factor`]; with `concurrent` the two halves run on separate
/// threads. The result does not depend on the flag.
pub fn centro_factor_with(a: &DenseMatrix, delta: f64, concurrent: bool) -> Result<CentroRep> {
    let (ap, am) = centro_blocks(a)?;
    let m = ap.rows();
    let (plus, minus) = if concurrent {
        std::thread::scope(|s| {
            let hp = s.spawn(|| pivoted_cholesky_dense(&ap, delta));
            let fm = pivoted_cholesky_dense(&am, delta);
            (hp.join().expect("factor thread panicked"), fm)
        })
    } else {
        (
            pivoted_cholesky_dense(&ap, delta),
            pivoted_cholesky_dense(&am, delta),
        )
    };
    let (plus, minus) = (plus?, minus?);
    let setup = 2 * (m * m) as u64;
    Ok(CentroRep {
        m,
        flops: plus.flops + minus.flops + setup,
        plus,
        minus,
        delta,
    })
}

/// `Y+ = Q+ P+^T L+` (first `k` columns); `sign = -1` gives `Y-`.
fn expand(f: &CholFactor, k: usize, sign: f64) -> DenseMatrix {
    let m = f.n;
    let mut y = DenseMatrix::zeros(2 * m, k);
    for c in 0..k {
        let z = f.y_column(c);
        let col = y.col_mut(c);
        for i in 0..m {
            let v = z[i] * FRAC_1_SQRT_2;
            col[i] = v;
            col[2 * m - 1 - i] = sign * v;
        }
    }
    y
}

/// Columns of `Y+` and `Y-` truncated to the given ranks.
pub fn centro_factors(
    rep: &CentroRep,
    rplus: usize,
    rminus: usize,
) -> Result<(DenseMatrix, DenseMatrix)> {
    check_trunc(rplus, rep.rplus())?;
    check_trunc(rminus, rep.rminus())?;
    Ok((
        expand(&rep.plus, rplus, 1.0),
        expand(&rep.minus, rminus, -1.0),
    ))
}

/// `sum y+ y+^T + sum y- y-^T` over the leading `rplus` / `rminus` columns.
pub fn centro_reconstruct(rep: &CentroRep, rplus: usize, rminus: usize) -> Result<DenseMatrix> {
    let (yp, ym) = centro_factors(rep, rplus, rminus)?;
    let n = rep.n();
    let mut out = DenseMatrix::zeros(n, n);
    add_outer_products(&mut out, &yp);
    add_outer_products(&mut out, &ym);
    Ok(out)
}
