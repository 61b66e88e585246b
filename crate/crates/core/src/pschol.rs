//! Diagonally pivoted Cholesky factorization `P M P^T = L L^T`.
//!
//! Two drivers share one pivoting scheme:
//!
//! * [`pivoted_cholesky_dense`] is right-looking on a materialized matrix.
//! * [`pivoted_cholesky_lazy`] is left-looking and pulls entries from an
//!   [`EntryOracle`]: it needs the diagonal up front and afterwards only the
//!   not-yet-pivoted rows of each pivot column.
//!
//! Both swap rows physically (LAPACK `pstrf` style), pick the largest updated
//! diagonal with ties going to the lowest original index, and apply the
//! column updates in ascending order of the earlier columns. The two drivers
//! therefore return bit-identical `P`, `L` and rank.
//!
//! Flops are counted as one per multiply-add pair (a square root or a
//! division also counts as one).
//!
//! With `D = diag(L(k,k))^2` and `L1 = L D^{-1/2}` the same data gives the
//! `P M P^T = L1 D L1^T` form.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::index::Permutation;
use crate::matrix::DenseMatrix;

/// Default stopping threshold for "full rank" factorizations.
pub const DEFAULT_DELTA: f64 = 1e-12;

/// Panel width of the delayed trailing update in the dense driver.
const PANEL: usize = 32;

/// Read access to a symmetric matrix, one entry at a time (0-based indices).
///
/// Implementations must be pure: the same `(i, j)` always yields the same
/// value and `entry(i, j) == entry(j, i)`.
pub trait EntryOracle: Sync {
    fn size(&self) -> usize;
    fn entry(&self, i: usize, j: usize) -> f64;
}

impl<T: EntryOracle + ?Sized> EntryOracle for &T {
    fn size(&self) -> usize {
        (**self).size()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        (**self).entry(i, j)
    }
}

/// A dense matrix read through its lower triangle.
impl EntryOracle for DenseMatrix {
    fn size(&self) -> usize {
        self.rows()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            self[(i, j)]
        } else {
            self[(j, i)]
        }
    }
}

/// Wraps an oracle and counts every call to [`EntryOracle::entry`].
pub struct CountingOracle<O> {
    inner: O,
    count: AtomicU64,
}

impl<O: EntryOracle> CountingOracle<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: EntryOracle> EntryOracle for CountingOracle<O> {
    fn size(&self) -> usize {
        self.inner.size()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.entry(i, j)
    }
}

/// Output of a pivoted Cholesky run.
#[derive(Clone, Debug, PartialEq)]
pub struct CholFactor {
    pub n: usize,
    pub rank: usize,
    /// `N x rank`, lower trapezoidal.
    pub l: DenseMatrix,
    pub perm: Permutation,
    pub delta: f64,
    /// Largest initial diagonal entry (the reference for `delta`).
    pub max_initial_diag: f64,
    /// Largest remaining updated diagonal entry at exit.
    pub max_remaining_diag: f64,
    /// Floating-point operations; each add, multiply, divide and square
    /// root counts once.
    pub flops: u64,
    /// Oracle evaluations; zero for the dense driver.
    pub evals: u64,
    /// Words of working storage.
    pub storage: u64,
}

impl CholFactor {
    /// Empty factor of an `n x n` matrix (rank zero, identity pivots).
    pub fn empty(n: usize, delta: f64) -> Self {
        Self {
            n,
            rank: 0,
            l: DenseMatrix::zeros(n, 0),
            perm: Permutation::identity(n),
            delta,
            max_initial_diag: 0.0,
            max_remaining_diag: 0.0,
            flops: 0,
            evals: 0,
            storage: 0,
        }
    }

    /// Column `k` of `Y = P^T L`.
    pub fn y_column(&self, k: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        let p = self.perm.as_slice();
        for (row, &v) in self.l.col(k).iter().enumerate() {
            y[p[row]] = v;
        }
        y
    }

    /// `Y = P^T L` restricted to its first `k` columns.
    pub fn y(&self, k: usize) -> Result<DenseMatrix> {
        check_trunc(k, self.rank)?;
        let mut y = DenseMatrix::zeros(self.n, k);
        for c in 0..k {
            y.col_mut(c).copy_from_slice(&self.y_column(c));
        }
        Ok(y)
    }
}

pub(crate) fn check_trunc(requested: usize, available: usize) -> Result<()> {
    if requested > available {
        return Err(Error::Truncation {
            requested,
            available,
        });
    }
    Ok(())
}

/// `sum_{i<k} y_i y_i^T` with `Y = P^T L`.
pub fn chol_reconstruct(f: &CholFactor, k: usize) -> Result<DenseMatrix> {
    let y = f.y(k)?;
    let mut out = DenseMatrix::zeros(f.n, f.n);
    add_outer_products(&mut out, &y);
    Ok(out)
}

/// `out += Y Y^T`.
pub(crate) fn add_outer_products(out: &mut DenseMatrix, y: &DenseMatrix) {
    let n = y.rows();
    for c in 0..y.cols() {
        let col = y.col(c);
        for j in 0..n {
            let b = col[j];
            if b == 0.0 {
                continue;
            }
            for (o, &a) in out.col_mut(j).iter_mut().zip(col) {
                *o += a * b;
            }
        }
    }
}

/// Tracks the pivot schedule shared by both drivers.
struct Pivoting {
    d: Vec<f64>,
    perm: Vec<usize>,
    init: f64,
    threshold: f64,
    neg_floor: f64,
}

enum Step {
    Pivot(usize),
    Stop(f64),
}

impl Pivoting {
    fn new(d: Vec<f64>, delta: f64) -> Self {
        let init = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let init = if d.is_empty() { 0.0 } else { init };
        Self {
            perm: (0..d.len()).collect(),
            d,
            init,
            threshold: delta * init,
            neg_floor: -delta * init.max(0.0),
        }
    }

    /// Validates the remaining diagonal and picks the next pivot position.
    fn next(&self, k: usize, evals: u64) -> Result<Step> {
        let mut best = k;
        for q in k..self.d.len() {
            let v = self.d[q];
            if v < self.neg_floor {
                return Err(Error::NotPositiveSemidefinite {
                    index: self.perm[q],
                    step: k,
                    value: v,
                    evals,
                });
            }
            let b = self.d[best];
            if v > b || (v == b && self.perm[q] < self.perm[best]) {
                best = q;
            }
        }
        let dmax = self.d[best];
        if !(dmax > self.threshold) || dmax <= 0.0 {
            return Ok(Step::Stop(dmax));
        }
        Ok(Step::Pivot(best))
    }

    fn swap(&mut self, k: usize, q: usize) {
        self.d.swap(k, q);
        self.perm.swap(k, q);
    }

    fn remaining_max(&self, k: usize) -> f64 {
        self.d[k..].iter().copied().fold(0.0, f64::max)
    }
}

/// Right-looking pivoted Cholesky of a symmetric matrix (lower triangle read).
///
/// Stops once the largest updated diagonal entry is at most
/// `delta * max(diag(M))`. A remaining diagonal entry below
/// `-delta * max(diag(M))` is reported as [`Error::NotPositiveSemidefinite`].
pub fn pivoted_cholesky_dense(m: &DenseMatrix, delta: f64) -> Result<CholFactor> {
    check_delta(delta)?;
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "pivoted Cholesky needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    for j in 0..n {
        for i in j..n {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite {
                    row: i,
                    col: j,
                    evals: 0,
                });
            }
        }
    }
    let mut w = m.as_slice().to_vec();
    let at = |i: usize, j: usize| i + j * n;
    let mut piv = Pivoting::new((0..n).map(|i| w[at(i, i)]).collect(), delta);
    let mut flops = 0u64;
    let mut rank = n;
    let mut remaining = 0.0;

    'panels: for k0 in (0..n).step_by(PANEL) {
        let kend = (k0 + PANEL).min(n);
        for k in k0..kend {
            let q = match piv.next(k, 0)? {
                Step::Pivot(q) => q,
                Step::Stop(dmax) => {
                    rank = k;
                    remaining = dmax.max(0.0);
                    break 'panels;
                }
            };
            if q != k {
                piv.swap(k, q);
                for s in 0..k {
                    w.swap(at(k, s), at(q, s));
                }
                for t in k + 1..q {
                    w.swap(at(t, k), at(q, t));
                }
                for t in q + 1..n {
                    w.swap(at(t, k), at(t, q));
                }
            }
            // pending updates from earlier columns of this panel
            for s in k0..k {
                let lks = w[at(k, s)];
                for i in k + 1..n {
                    w[at(i, k)] -= w[at(i, s)] * lks;
                }
            }
            let ljj = piv.d[k].sqrt();
            w[at(k, k)] = ljj;
            for i in k + 1..n {
                let v = w[at(i, k)] / ljj;
                w[at(i, k)] = v;
                piv.d[i] -= v * v;
            }
            let mm = (n - k - 1) as u64;
            flops += 1 + mm + mm * (mm + 1);
        }
        // delayed update of the trailing columns with the whole panel
        for j in kend..n {
            let (head, tail) = w.split_at_mut(j * n);
            let col = &mut tail[j + 1..n];
            for s in k0..kend {
                let ljs = head[at(j, s)];
                let src = &head[at(j + 1, s)..at(n, s)];
                for (c, &l) in col.iter_mut().zip(src) {
                    *c -= l * ljs;
                }
            }
        }
    }
    if rank == n {
        remaining = 0.0;
    }

    let mut l = DenseMatrix::zeros(n, rank);
    for k in 0..rank {
        let col = l.col_mut(k);
        col[k..n].copy_from_slice(&w[at(k, k)..at(n, k)]);
    }
    Ok(CholFactor {
        n,
        rank,
        l,
        perm: Permutation::from_zero_based(piv.perm.clone())?,
        delta,
        max_initial_diag: piv.init.max(0.0),
        max_remaining_diag: remaining,
        flops,
        evals: 0,
        storage: (n * n) as u64,
    })
}

/// Options for [`pivoted_cholesky_lazy_with`].
#[derive(Clone, Debug, Default)]
pub struct LazyOptions {
    pub max_rank: Option<usize>,
    /// Worker threads for column fetches; values below 2 mean sequential.
    pub threads: usize,
}

/// Left-looking pivoted Cholesky that evaluates oracle entries on demand.
///
/// Uses `N` evaluations for the diagonal and `N - k - 1` for pivot step `k`,
/// so at most `N (r + 1)` in total.
pub fn pivoted_cholesky_lazy<O: EntryOracle + ?Sized>(
    oracle: &O,
    delta: f64,
    max_rank: Option<usize>,
) -> Result<CholFactor> {
    pivoted_cholesky_lazy_with(
        oracle,
        delta,
        &LazyOptions {
            max_rank,
            threads: 1,
        },
    )
}

pub fn pivoted_cholesky_lazy_with<O: EntryOracle + ?Sized>(
    oracle: &O,
    delta: f64,
    opts: &LazyOptions,
) -> Result<CholFactor> {
    check_delta(delta)?;
    let n = oracle.size();
    let mut evals = 0u64;
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let v = oracle.entry(i, i);
        evals += 1;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                row: i,
                col: i,
                evals,
            });
        }
        diag.push(v);
    }
    let mut piv = Pivoting::new(diag, delta);
    let limit = opts.max_rank.unwrap_or(n).min(n);
    // column k holds positions k..n
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(limit);
    let mut flops = 0u64;
    let mut remaining = 0.0;
    let mut rank = limit;
    let mut fetched = Vec::with_capacity(n);

    for k in 0..limit {
        let q = match piv.next(k, evals)? {
            Step::Pivot(q) => q,
            Step::Stop(dmax) => {
                rank = k;
                remaining = dmax.max(0.0);
                break;
            }
        };
        if q != k {
            piv.swap(k, q);
            for (s, col) in cols.iter_mut().enumerate() {
                col.swap(k - s, q - s);
            }
        }
        let pk = piv.perm[k];
        fetch_column(oracle, &piv.perm[k + 1..], pk, opts.threads, &mut fetched);
        evals += fetched.len() as u64;
        if let Some(off) = fetched.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: piv.perm[k + 1 + off],
                col: pk,
                evals,
            });
        }
        for (s, col) in cols.iter().enumerate() {
            let lks = col[k - s];
            let src = &col[k + 1 - s..];
            for (v, &l) in fetched.iter_mut().zip(src) {
                *v -= l * lks;
            }
        }
        let ljj = piv.d[k].sqrt();
        let mut col = Vec::with_capacity(n - k);
        col.push(ljj);
        for (off, &a) in fetched.iter().enumerate() {
            let v = a / ljj;
            col.push(v);
            piv.d[k + 1 + off] -= v * v;
        }
        cols.push(col);
        let mm = (n - k - 1) as u64;
        flops += 1 + 2 * mm * k as u64 + 3 * mm;
    }
    if rank == limit && limit < n {
        remaining = piv.remaining_max(limit);
    }

    let mut l = DenseMatrix::zeros(n, rank);
    let mut storage = n as u64;
    for (k, col) in cols.iter().enumerate() {
        l.col_mut(k)[k..].copy_from_slice(col);
        storage += col.len() as u64;
    }
    Ok(CholFactor {
        n,
        rank,
        l,
        perm: Permutation::from_zero_based(piv.perm)?,
        delta,
        max_initial_diag: piv.init.max(0.0),
        max_remaining_diag: remaining,
        flops,
        evals,
        storage,
    })
}

fn fetch_column<O: EntryOracle + ?Sized>(
    oracle: &O,
    rows: &[usize],
    col: usize,
    threads: usize,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.resize(rows.len(), 0.0);
    if threads < 2 || rows.len() < 2 * threads {
        for (o, &r) in out.iter_mut().zip(rows) {
            *o = oracle.entry(r, col);
        }
        return;
    }
    let chunk = rows.len().div_ceil(threads);
    std::thread::scope(|scope| {
        for (dst, src) in out.chunks_mut(chunk).zip(rows.chunks(chunk)) {
            scope.spawn(move || {
                for (o, &r) in dst.iter_mut().zip(src) {
                    *o = oracle.entry(r, col);
                }
            });
        }
    });
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "threshold must be finite and non-negative, got {delta}"
        )));
    }
    Ok(())
}
