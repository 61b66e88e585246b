//! Permutations and index vectors: the perfect shuffle `Π_nn`, the exchange
//! permutation, and the sym/skew index vectors with their `Δ` scaling.
//!
//! Permutations are stored 0-based. [`Permutation::one_based`] and
//! [`Permutation::from_one_based`] convert to and from the 1-based index
//! vectors used in file formats.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Default relative tolerance for structure checks.
pub const DEFAULT_STRUCTURE_TOL: f64 = 1e-12;

/// A permutation of `0..len`, viewed as the index vector `p` of `P = I(p, :)`.
///
/// [`Permutation::gather`] computes `P x` (`y[k] = x[p[k]]`) and
/// [`Permutation::scatter`] computes `P^T x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    indices: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
        }
    }

    pub fn from_zero_based(indices: Vec<usize>) -> Result<Self> {
        let n = indices.len();
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n || seen[i] {
                return Err(Error::InvalidArgument(format!(
                    "index vector is not a permutation of 0..{n}"
                )));
            }
            seen[i] = true;
        }
        Ok(Self { indices })
    }

    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::InvalidArgument(
                "1-based index vector contains 0".into(),
            ));
        }
        Self::from_zero_based(indices.iter().map(|&i| i - 1).collect())
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|&i| i + 1).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (k, &i) in self.indices.iter().enumerate() {
            inv[i] = k;
        }
        Self { indices: inv }
    }

    /// `(self ∘ other)[k] = self[other[k]]`.
    pub fn compose(&self, other: &Permutation) -> Self {
        Self {
            indices: other.indices.iter().map(|&k| self.indices[k]).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.indices.iter().enumerate().all(|(k, &i)| k == i)
    }

    pub fn gather(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.len());
        self.indices.iter().map(|&i| x[i]).collect()
    }

    pub fn scatter(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.len());
        let mut y = vec![0.0; x.len()];
        for (k, &i) in self.indices.iter().enumerate() {
            y[i] = x[k];
        }
        y
    }

    /// Dense `P = I(p, :)`. Tests only.
    pub fn to_matrix(&self) -> DenseMatrix {
        let n = self.len();
        let mut m = DenseMatrix::zeros(n, n);
        for (k, &i) in self.indices.iter().enumerate() {
            m[(k, i)] = 1.0;
        }
        m
    }
}

/// Position of `vec(S^T)(a)` inside `vec(S)` for an `n x n` matrix `S`.
#[inline]
pub fn shuffle_index(a: usize, n: usize) -> usize {
    (a % n) * n + a / n
}

/// The perfect shuffle `Π_nn = I(:, p)` with `p = [1:n:n² | 2:n:n² | … | n:n:n²]`.
pub fn perfect_shuffle(n: usize) -> Result<Permutation> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "perfect shuffle needs n >= 1".into(),
        ));
    }
    let indices = (0..n * n).map(|a| shuffle_index(a, n)).collect();
    Ok(Permutation { indices })
}

/// `y = Π_nn x`, i.e. `reshape(y, n, n) = reshape(x, n, n)^T`, by index gathering.
pub fn apply_shuffle(x: &[f64], n: usize) -> Result<Vec<f64>> {
    if x.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "shuffle of order {n} needs length {}, got {}",
            n * n,
            x.len()
        )));
    }
    Ok((0..n * n).map(|a| x[shuffle_index(a, n)]).collect())
}

/// The exchange permutation `E_n = I(:, n:-1:1)`.
pub fn exchange_perm(n: usize) -> Result<Permutation> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "exchange permutation needs n >= 1".into(),
        ));
    }
    Ok(Permutation {
        indices: (0..n).rev().collect(),
    })
}

/// Index vectors selecting the lower triangle (`sym`) and strict lower
/// triangle (`skew`) of `reshape(x, n, n)`, plus the `Δ^(sym)` scaling.
///
/// Together they describe the orthogonal `Q_nn = [Q^(sym) | Q^(skew)]`
/// without materializing it: column `k` of `Q^(sym)` is `e_u` when `u = sym[k]`
/// is a diagonal position and `(e_u + e_{Πu}) / √2` otherwise; column `k` of
/// `Q^(skew)` is `(e_v - e_{Πv}) / √2` with `v = skew[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymBlockBasis {
    n: usize,
    sym: Vec<usize>,
    skew: Vec<usize>,
    delta_sym: Vec<f64>,
}

impl SymBlockBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sym/skew basis needs n >= 1".into()));
        }
        let mut sym = Vec::with_capacity(n * (n + 1) / 2);
        let mut delta_sym = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for i in j..n {
                sym.push(i + j * n);
                delta_sym.push(if i == j { 1.0 } else { SQRT_2 });
            }
        }
        let mut skew = Vec::with_capacity(n * (n - 1) / 2);
        for j in 0..n {
            for i in j + 1..n {
                skew.push(i + j * n);
            }
        }
        Ok(Self {
            n,
            sym,
            skew,
            delta_sym,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_sym(&self) -> usize {
        self.sym.len()
    }

    pub fn n_skew(&self) -> usize {
        self.skew.len()
    }

    /// 0-based positions of the sym index vector.
    pub fn sym_positions(&self) -> &[usize] {
        &self.sym
    }

    /// 0-based positions of the skew index vector.
    pub fn skew_positions(&self) -> &[usize] {
        &self.skew
    }

    pub fn sym_indices(&self) -> Vec<usize> {
        self.sym.iter().map(|&i| i + 1).collect()
    }

    pub fn skew_indices(&self) -> Vec<usize> {
        self.skew.iter().map(|&i| i + 1).collect()
    }

    pub fn delta_sym(&self) -> &[f64] {
        &self.delta_sym
    }

    #[inline]
    pub fn is_diagonal(&self, k: usize) -> bool {
        let u = self.sym[k];
        u % self.n == u / self.n
    }

    /// `Δ_k Δ_l` without rounding: 1, √2 or exactly 2.
    #[inline]
    pub fn pair_scale(&self, k: usize, l: usize) -> f64 {
        match (self.is_diagonal(k), self.is_diagonal(l)) {
            (true, true) => 1.0,
            (false, false) => 2.0,
            _ => SQRT_2,
        }
    }

    /// Sym index of the unordered pair `{i, j}` (0-based).
    #[inline]
    pub fn sym_index_of(&self, i: usize, j: usize) -> usize {
        lower_packed_index(i, j, self.n)
    }

    /// `y = Q^(sym) z`, scattering each coefficient through the basis.
    pub fn expand_sym(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.n_sym());
        let mut y = vec![0.0; self.n * self.n];
        for (k, &u) in self.sym.iter().enumerate() {
            if self.is_diagonal(k) {
                y[u] += z[k];
            } else {
                let v = z[k] * FRAC_1_SQRT_2;
                y[u] += v;
                y[shuffle_index(u, self.n)] += v;
            }
        }
        y
    }

    /// `y = Q^(skew) z`.
    pub fn expand_skew(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.n_skew());
        let mut y = vec![0.0; self.n * self.n];
        for (k, &v) in self.skew.iter().enumerate() {
            let w = z[k] * FRAC_1_SQRT_2;
            y[v] += w;
            y[shuffle_index(v, self.n)] -= w;
        }
        y
    }

    /// `Q^(sym)^T x`.
    pub fn project_sym(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n * self.n);
        self.sym
            .iter()
            .enumerate()
            .map(|(k, &u)| {
                if self.is_diagonal(k) {
                    x[u]
                } else {
                    (x[u] + x[shuffle_index(u, self.n)]) * FRAC_1_SQRT_2
                }
            })
            .collect()
    }

    /// `Q^(skew)^T x`.
    pub fn project_skew(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n * self.n);
        self.skew
            .iter()
            .map(|&v| (x[v] - x[shuffle_index(v, self.n)]) * FRAC_1_SQRT_2)
            .collect()
    }
}

/// Position of entry `(i, j)` of an `m x m` lower triangle stored column by
/// column (`(i, j)` and `(j, i)` share a slot).
#[inline]
pub fn lower_packed_index(i: usize, j: usize, m: usize) -> usize {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    lo * m - lo * lo.saturating_sub(1) / 2 + (hi - lo)
}

/// `T^(sym) x = (x + Πx) / 2`, the projection onto vecs of symmetric matrices.
pub fn sym_part(x: &[f64], n: usize) -> Result<Vec<f64>> {
    let px = apply_shuffle(x, n)?;
    Ok(x.iter().zip(&px).map(|(a, b)| (a + b) / 2.0).collect())
}

/// `T^(skew) x = (x - Πx) / 2`.
pub fn skew_part(x: &[f64], n: usize) -> Result<Vec<f64>> {
    let px = apply_shuffle(x, n)?;
    Ok(x.iter().zip(&px).map(|(a, b)| (a - b) / 2.0).collect())
}

pub fn sym_skew_basis(n: usize) -> Result<SymBlockBasis> {
    SymBlockBasis::new(n)
}

/// Dense `Q_nn = [Q^(sym) | Q^(skew)]` with columns in construction order.
/// Intended for tests and small `n`.
pub fn build_q(n: usize) -> Result<DenseMatrix> {
    let basis = SymBlockBasis::new(n)?;
    let n2 = n * n;
    let mut q = DenseMatrix::zeros(n2, n2);
    let mut e = vec![0.0; basis.n_sym()];
    for k in 0..basis.n_sym() {
        e[k] = 1.0;
        q.col_mut(k).copy_from_slice(&basis.expand_sym(&e));
        e[k] = 0.0;
    }
    let mut e = vec![0.0; basis.n_skew()];
    for k in 0..basis.n_skew() {
        e[k] = 1.0;
        q.col_mut(basis.n_sym() + k)
            .copy_from_slice(&basis.expand_skew(&e));
        e[k] = 0.0;
    }
    Ok(q)
}

fn check_square_of(a: &DenseMatrix, n: usize) -> Result<()> {
    if a.rows() != n * n || a.cols() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "expected {0}x{0} matrix for n = {n}, got {1}x{2}",
            n * n,
            a.rows(),
            a.cols()
        )));
    }
    Ok(())
}

/// `max |A - Π A Π|` computed by index gathering.
pub fn shuffle_invariance_residual(a: &DenseMatrix, n: usize) -> Result<f64> {
    check_square_of(a, n)?;
    let n2 = n * n;
    let mut r: f64 = 0.0;
    for j in 0..n2 {
        let pj = shuffle_index(j, n);
        for i in 0..n2 {
            r = r.max((a[(i, j)] - a[(shuffle_index(i, n), pj)]).abs());
        }
    }
    Ok(r)
}

/// `max(|ΠA - A|, |AΠ - A|)`, the two extra conditions of a
/// ((1,2),(3,4))-symmetric matrix on top of plain symmetry.
pub fn one_sided_shuffle_residual(a: &DenseMatrix, n: usize) -> Result<f64> {
    check_square_of(a, n)?;
    let n2 = n * n;
    let mut r: f64 = 0.0;
    for j in 0..n2 {
        let pj = shuffle_index(j, n);
        for i in 0..n2 {
            let v = a[(i, j)];
            r = r
                .max((a[(shuffle_index(i, n), j)] - v).abs())
                .max((a[(i, pj)] - v).abs());
        }
    }
    Ok(r)
}

/// `A = A^T` and `A = Π A Π`, both within `tol * max|A|`.
pub fn is_ps_symmetric(a: &DenseMatrix, n: usize, tol: f64) -> Result<bool> {
    let scale = tol * a.max_abs();
    let shuffle = shuffle_invariance_residual(a, n)?;
    Ok(a.symmetry_residual() <= scale && shuffle <= scale)
}

/// `A = A^T`, `ΠA = A` and `AΠ = A`, all within `tol * max|A|`.
pub fn is_1234_symmetric_matrix(a: &DenseMatrix, n: usize, tol: f64) -> Result<bool> {
    let scale = tol * a.max_abs();
    let one_sided = one_sided_shuffle_residual(a, n)?;
    Ok(a.symmetry_residual() <= scale && one_sided <= scale)
}
