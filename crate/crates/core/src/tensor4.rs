//! Order-4 tensors with equal mode sizes.
//!
//! Entry `(i1, i2, i3, i4)` (0-based) sits at `i1 + i2 n + i3 n² + i4 n³`, so
//! the `[1,2]x[3,4]` unfolding `A(i1 + i2 n, i3 + i4 n)` is the same buffer
//! read as an `n² x n²` matrix.

use crate::error::{Error, Result};
use crate::index::{lower_packed_index, SymBlockBasis, DEFAULT_STRUCTURE_TOL};
use crate::matrix::DenseMatrix;
use crate::psym::KronTerm;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n.pow(4)],
        }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n.pow(4) {
            return Err(Error::DimensionMismatch(format!(
                "order-4 tensor with n = {n} needs {} values, got {}",
                n.pow(4),
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n.pow(4));
        for i4 in 0..n {
            for i3 in 0..n {
                for i2 in 0..n {
                    for i1 in 0..n {
                        data.push(f(i1, i2, i3, i4));
                    }
                }
            }
        }
        Self { n, data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, i1: usize, i2: usize, i3: usize, i4: usize) -> usize {
        let n = self.n;
        i1 + n * (i2 + n * (i3 + n * i4))
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize, i3: usize, i4: usize) -> f64 {
        self.data[self.offset(i1, i2, i3, i4)]
    }

    #[inline]
    pub fn set(&mut self, i1: usize, i2: usize, i3: usize, i4: usize, v: f64) {
        let o = self.offset(i1, i2, i3, i4);
        self.data[o] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor4) -> f64 {
        assert_eq!(self.n, other.n, "max_abs_diff size mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// `A(i1 + i2 n, i3 + i4 n) = T(i1, i2, i3, i4)`.
pub fn unfold_12_34(t: &Tensor4) -> DenseMatrix {
    let n2 = t.n * t.n;
    DenseMatrix::from_col_major(n2, n2, t.data.clone()).expect("n^4 buffer")
}

pub fn fold_12_34(a: &DenseMatrix, n: usize) -> Result<Tensor4> {
    check_unfolding(a, n)?;
    Tensor4::from_vec(n, a.as_slice().to_vec())
}

/// `A(i1 + i3 n, i2 + i4 n) = T(i1, i2, i3, i4)`.
pub fn unfold_13_24(t: &Tensor4) -> DenseMatrix {
    let n = t.n;
    let mut a = DenseMatrix::zeros(n * n, n * n);
    for i4 in 0..n {
        for i3 in 0..n {
            for i2 in 0..n {
                for i1 in 0..n {
                    a[(i1 + i3 * n, i2 + i4 * n)] = t.get(i1, i2, i3, i4);
                }
            }
        }
    }
    a
}

pub fn fold_13_24(a: &DenseMatrix, n: usize) -> Result<Tensor4> {
    check_unfolding(a, n)?;
    Ok(Tensor4::from_fn(n, |i1, i2, i3, i4| {
        a[(i1 + i3 * n, i2 + i4 * n)]
    }))
}

fn check_unfolding(a: &DenseMatrix, n: usize) -> Result<()> {
    let n2 = n * n;
    if a.rows() != n2 || a.cols() != n2 {
        return Err(Error::DimensionMismatch(format!(
            "expected {n2}x{n2} unfolding for n = {n}, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(())
}

/// Largest violation of the three generating symmetries
/// `(i2,i1,i3,i4)`, `(i1,i2,i4,i3)` and `(i3,i4,i1,i2)`.
pub fn residual_1234(t: &Tensor4) -> f64 {
    let n = t.n;
    let mut r: f64 = 0.0;
    for i4 in 0..n {
        for i3 in 0..n {
            for i2 in 0..n {
                for i1 in 0..n {
                    let v = t.get(i1, i2, i3, i4);
                    r = r
                        .max((v - t.get(i2, i1, i3, i4)).abs())
                        .max((v - t.get(i1, i2, i4, i3)).abs())
                        .max((v - t.get(i3, i4, i1, i2)).abs());
                }
            }
        }
    }
    r
}

pub fn is_1234_symmetric(t: &Tensor4, tol: f64) -> bool {
    residual_1234(t) <= tol * t.max_abs()
}

/// Mean over the eight images under the ((1,2),(3,4)) symmetry group.
///
/// The images are summed in a canonical order, so the result is exactly
/// symmetric.
pub fn symmetrize(t: &Tensor4) -> Tensor4 {
    Tensor4::from_fn(t.n, |a, b, c, d| {
        let mut images = [
            (a, b, c, d),
            (b, a, c, d),
            (a, b, d, c),
            (b, a, d, c),
            (c, d, a, b),
            (d, c, a, b),
            (c, d, b, a),
            (d, c, b, a),
        ];
        images.sort_unstable();
        images
            .iter()
            .map(|&(p, q, r, s)| t.get(p, q, r, s))
            .sum::<f64>()
            / 8.0
    })
}

/// `B = A x_1 X1 x_2 X2 x_3 X3 x_4 X4`, i.e.
/// `B(i) = Σ_j A(j) X1(i1,j1) X2(i2,j2) X3(i3,j3) X4(i4,j4)`,
/// as four single-mode contractions (`O(n⁵)`).
pub fn multilinear_product_brute(a: &Tensor4, xs: [&DenseMatrix; 4]) -> Result<Tensor4> {
    let n = a.n;
    for (k, x) in xs.iter().enumerate() {
        if x.rows() != n || x.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "factor {} is {}x{}, expected {n}x{n}",
                k + 1,
                x.rows(),
                x.cols()
            )));
        }
    }
    let mut cur = a.clone();
    for (mode, x) in xs.iter().enumerate() {
        cur = mode_product(&cur, x, mode);
    }
    Ok(cur)
}

/// Contracts index `mode` of `t` with the second index of `x`.
fn mode_product(t: &Tensor4, x: &DenseMatrix, mode: usize) -> Tensor4 {
    let n = t.n;
    let stride = n.pow(mode as u32);
    let mut out = Tensor4::zeros(n);
    for pos in 0..t.data.len() {
        let i = (pos / stride) % n;
        let base = pos - i * stride;
        let mut s = 0.0;
        for j in 0..n {
            s += x[(i, j)] * t.data[base + j * stride];
        }
        out.data[pos] = s;
    }
    out
}

/// `D_i = X C_i X^T` for every term; returns the terms and the flop count
/// (each add and multiply counted once).
pub fn multilinear_product_structured(
    terms: &[KronTerm],
    x: &DenseMatrix,
) -> Result<(Vec<KronTerm>, u64)> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "transform must be square, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let n = x.rows();
    let mut flops = 0u64;
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        if t.c.rows() != n || t.c.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "term is {}x{}, transform is {n}x{n}",
                t.c.rows(),
                t.c.cols()
            )));
        }
        let xc = x.matmul(&t.c)?;
        // only the lower triangle of (XC) X^T; D is symmetric
        let mut d = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += xc[(i, k)] * x[(j, k)];
                }
                d[(i, j)] = s;
                d[(j, i)] = s;
            }
        }
        let n3 = (n * n * n) as u64;
        flops += 2 * n3 + (n * n * (n + 1)) as u64;
        out.push(KronTerm {
            sigma: t.sigma,
            c: d,
        });
    }
    Ok((out, flops))
}

/// `Σ σ_i C_i ⊗ C_i`, the `[1,3]x[2,4]` unfolding of the represented tensor.
pub fn assemble_kron_terms(terms: &[KronTerm], n: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(n * n, n * n);
    for t in terms {
        let k = t.c.kron(&t.c);
        for (o, v) in out.as_mut_slice().iter_mut().zip(k.as_slice()) {
            *o += t.sigma * v;
        }
    }
    out
}

/// `(n⁴ + 2n³ + 3n² + 2n) / 8`, the number of free values of a
/// ((1,2),(3,4))-symmetric tensor.
pub fn packed_len(n: usize) -> usize {
    (n.pow(4) + 2 * n.pow(3) + 3 * n * n + 2 * n) / 8
}

/// Lower triangle of `A(u, u)` (column by column), with `A` the
/// `[1,2]x[3,4]` unfolding and `u` the sym index vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PackedSymTensor4 {
    pub n: usize,
    pub packed: Vec<f64>,
}

pub fn pack(t: &Tensor4) -> Result<PackedSymTensor4> {
    let residual = residual_1234(t);
    let tolerance = DEFAULT_STRUCTURE_TOL * t.max_abs();
    if residual > tolerance {
        return Err(Error::SymmetryViolation {
            class: "((1,2),(3,4))-symmetric",
            residual,
            tolerance,
        });
    }
    let n = t.n;
    if n == 0 {
        return Ok(PackedSymTensor4 { n, packed: vec![] });
    }
    let basis = SymBlockBasis::new(n)?;
    let u = basis.sym_positions();
    let a = t.as_slice();
    let n2 = n * n;
    let mut packed = Vec::with_capacity(packed_len(n));
    for l in 0..u.len() {
        for &uk in &u[l..] {
            packed.push(a[uk + u[l] * n2]);
        }
    }
    Ok(PackedSymTensor4 { n, packed })
}

pub fn unpack(p: &PackedSymTensor4) -> Result<Tensor4> {
    let n = p.n;
    if p.packed.len() != packed_len(n) {
        return Err(Error::DimensionMismatch(format!(
            "packed tensor with n = {n} needs {} values, got {}",
            packed_len(n),
            p.packed.len()
        )));
    }
    let ns = n * (n + 1) / 2;
    Ok(Tensor4::from_fn(n, |i1, i2, i3, i4| {
        let k = lower_packed_index(i1, i2, n);
        let l = lower_packed_index(i3, i4, n);
        p.packed[lower_packed_index(k, l, ns)]
    }))
}

#[cfg(test)]
pub(crate) fn multilinear_product_literal(a: &Tensor4, xs: [&DenseMatrix; 4]) -> Tensor4 {
    let n = a.n;
    Tensor4::from_fn(n, |i1, i2, i3, i4| {
        let mut s = 0.0;
        for j4 in 0..n {
            for j3 in 0..n {
                for j2 in 0..n {
                    for j1 in 0..n {
                        s += a.get(j1, j2, j3, j4)
                            * xs[0][(i1, j1)]
                            * xs[1][(i2, j2)]
                            * xs[2][(i3, j3)]
                            * xs[3][(i4, j4)];
                    }
                }
            }
        }
        s
    })
}
