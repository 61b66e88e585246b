//! PS-symmetric matrices (`A = A^T = Π A Π`): block diagonalization through
//! the implicit `Q_nn`, the structured Cholesky representation, the
//! ((1,2),(3,4)) single-block shortcut, structured Schur and KPSVD.
//!
//! Block entries are gathered straight from `A`:
//!
//! ```text
//! Asym(k, l)  = Δ_k Δ_l (A(u_k, u_l) + A(u_k, Π u_l)) / 2
//! Askew(k, l) = A(v_k, v_l) - A(v_k, Π v_l)
//! ```
//!
//! and when `ΠA = A` as well, `Asym(k, l) = Δ_k Δ_l A(u_k, u_l)`.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::eig::symmetric_eig;
use crate::error::{Error, Result};
use crate::index::{
    is_ps_symmetric, one_sided_shuffle_residual, shuffle_index, shuffle_invariance_residual,
    SymBlockBasis, DEFAULT_STRUCTURE_TOL,
};
use crate::matrix::DenseMatrix;
use crate::pschol::{
    add_outer_products, check_trunc, pivoted_cholesky_dense, pivoted_cholesky_lazy_with,
    CholFactor, EntryOracle, LazyOptions,
};

/// `Asym(k, l)` for the general PS-symmetric case.
#[inline]
fn sym_entry(basis: &SymBlockBasis, get: &impl Fn(usize, usize) -> f64, k: usize, l: usize) -> f64 {
    let u = basis.sym_positions();
    let (uk, ul) = (u[k], u[l]);
    let s = basis.pair_scale(k, l);
    if basis.is_diagonal(l) {
        s * get(uk, ul)
    } else {
        s * ((get(uk, ul) + get(uk, shuffle_index(ul, basis.n()))) / 2.0)
    }
}

/// `Asym(k, l)` when `ΠA = A = AΠ`.
#[inline]
fn sym_entry_1234(
    basis: &SymBlockBasis,
    get: &impl Fn(usize, usize) -> f64,
    k: usize,
    l: usize,
) -> f64 {
    let u = basis.sym_positions();
    basis.pair_scale(k, l) * get(u[k], u[l])
}

#[inline]
fn skew_entry(
    basis: &SymBlockBasis,
    get: &impl Fn(usize, usize) -> f64,
    k: usize,
    l: usize,
) -> f64 {
    let v = basis.skew_positions();
    let (vk, vl) = (v[k], v[l]);
    get(vk, vl) - get(vk, shuffle_index(vl, basis.n()))
}

/// Fills the lower triangle with `f` and mirrors it.
fn symmetric_from_lower(n: usize, f: impl Fn(usize, usize) -> f64) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let v = f(i, j);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn check_basis(a: &DenseMatrix, basis: &SymBlockBasis) -> Result<()> {
    let n2 = basis.n() * basis.n();
    if a.rows() != n2 || a.cols() != n2 {
        return Err(Error::DimensionMismatch(format!(
            "basis of order {} needs a {n2}x{n2} matrix, got {}x{}",
            basis.n(),
            a.rows(),
            a.cols()
        )));
    }
    Ok(())
}

fn require_ps_symmetric(a: &DenseMatrix, n: usize) -> Result<()> {
    if !is_ps_symmetric(a, n, DEFAULT_STRUCTURE_TOL)? {
        let residual = a
            .symmetry_residual()
            .max(shuffle_invariance_residual(a, n)?);
        return Err(Error::SymmetryViolation {
            class: "PS-symmetric",
            residual,
            tolerance: DEFAULT_STRUCTURE_TOL * a.max_abs(),
        });
    }
    Ok(())
}

fn require_1234(a: &DenseMatrix, n: usize) -> Result<()> {
    let residual = a.symmetry_residual().max(one_sided_shuffle_residual(a, n)?);
    let tolerance = DEFAULT_STRUCTURE_TOL * a.max_abs();
    if residual > tolerance {
        return Err(Error::SymmetryViolation {
            class: "((1,2),(3,4))-symmetric",
            residual,
            tolerance,
        });
    }
    Ok(())
}

/// `(Asym, Askew)`, the diagonal blocks of `Q^T A Q`.
pub fn form_blocks(a: &DenseMatrix, basis: &SymBlockBasis) -> Result<(DenseMatrix, DenseMatrix)> {
    check_basis(a, basis)?;
    require_ps_symmetric(a, basis.n())?;
    let get = |i: usize, j: usize| a[(i, j)];
    let asym = symmetric_from_lower(basis.n_sym(), |k, l| sym_entry(basis, &get, k, l));
    let askew = symmetric_from_lower(basis.n_skew(), |k, l| skew_entry(basis, &get, k, l));
    Ok((asym, askew))
}

/// `Asym = Δ A(u, u) Δ` for a ((1,2),(3,4))-symmetric matrix.
pub fn form_sym_block_1234(a: &DenseMatrix, basis: &SymBlockBasis) -> Result<DenseMatrix> {
    check_basis(a, basis)?;
    require_1234(a, basis.n())?;
    let get = |i: usize, j: usize| a[(i, j)];
    Ok(symmetric_from_lower(basis.n_sym(), |k, l| {
        sym_entry_1234(basis, &get, k, l)
    }))
}

/// Which block an oracle exposes, and how its entries are gathered.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Sym,
    Sym1234,
    Skew,
}

/// Lazily evaluated `Asym` or `Askew` over an oracle for `A`.
///
/// Counts the evaluations of the underlying `A` entries.
pub struct BlockOracle<'a, O: ?Sized> {
    source: &'a O,
    basis: &'a SymBlockBasis,
    kind: BlockKind,
    evals: AtomicU64,
}

impl<'a, O: EntryOracle + ?Sized> BlockOracle<'a, O> {
    pub fn new(source: &'a O, basis: &'a SymBlockBasis, kind: BlockKind) -> Result<Self> {
        let n2 = basis.n() * basis.n();
        if source.size() != n2 {
            return Err(Error::DimensionMismatch(format!(
                "basis of order {} needs an oracle of size {n2}, got {}",
                basis.n(),
                source.size()
            )));
        }
        Ok(Self {
            source,
            basis,
            kind,
            evals: AtomicU64::new(0),
        })
    }

    /// Evaluations of `A` so far.
    pub fn source_evals(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }
}

impl<O: EntryOracle + ?Sized> EntryOracle for BlockOracle<'_, O> {
    fn size(&self) -> usize {
        match self.kind {
            BlockKind::Sym | BlockKind::Sym1234 => self.basis.n_sym(),
            BlockKind::Skew => self.basis.n_skew(),
        }
    }

    fn entry(&self, k: usize, l: usize) -> f64 {
        // read the lower triangle, like the dense block formation
        let (k, l) = if k >= l { (k, l) } else { (l, k) };
        let get = |i: usize, j: usize| {
            self.evals.fetch_add(1, Ordering::Relaxed);
            self.source.entry(i, j)
        };
        match self.kind {
            BlockKind::Sym => sym_entry(self.basis, &get, k, l),
            BlockKind::Sym1234 => sym_entry_1234(self.basis, &get, k, l),
            BlockKind::Skew => skew_entry(self.basis, &get, k, l),
        }
    }
}

/// Where the entries of `A` come from.
pub enum Source<'a> {
    Dense(&'a DenseMatrix),
    Oracle(&'a dyn EntryOracle),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Dense,
    Lazy,
}

#[derive(Clone, Debug)]
pub struct PsFactorOptions {
    pub delta: f64,
    /// The input is ((1,2),(3,4))-symmetric: use the single-block shortcut
    /// and skip the (zero) skew block.
    pub skip_skew: bool,
    pub engine: Engine,
    /// Rank cap for each block (lazy engine only).
    pub max_rank: Option<usize>,
    /// Values above 1 allow the two blocks (and lazy column fetches) to run
    /// on worker threads. Results do not depend on it.
    pub threads: usize,
}

impl Default for PsFactorOptions {
    fn default() -> Self {
        Self {
            delta: crate::pschol::DEFAULT_DELTA,
            skip_skew: false,
            engine: Engine::Dense,
            max_rank: None,
            threads: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RepCounters {
    /// Flops of the block factorizations.
    pub factor_flops: u64,
    /// Block entries formed before factoring (dense engine).
    pub setup_entries: u64,
    /// Evaluations of entries of `A`.
    pub evals: u64,
    /// Words of working storage of the factorizations.
    pub storage: u64,
}

impl RepCounters {
    /// Factorization flops plus one per formed block entry.
    pub fn total_flops(&self) -> u64 {
        self.factor_flops + self.setup_entries
    }
}

/// `{L^(sym), P^(sym), L^(skew), P^(skew)}` for a PSD PS-symmetric matrix.
#[derive(Clone, Debug)]
pub struct StructuredRep {
    pub n: usize,
    pub basis: SymBlockBasis,
    pub sym: CholFactor,
    /// `None` when the skew block was skipped.
    pub skew: Option<CholFactor>,
    pub delta: f64,
    pub counters: RepCounters,
}

impl StructuredRep {
    pub fn r_sym(&self) -> usize {
        self.sym.rank
    }

    pub fn r_skew(&self) -> usize {
        self.skew.as_ref().map_or(0, |f| f.rank)
    }
}

fn run_blocks<F, G>(
    threads: usize,
    sym: F,
    skew: Option<G>,
) -> (Result<CholFactor>, Option<Result<CholFactor>>)
where
    F: FnOnce() -> Result<CholFactor> + Send,
    G: FnOnce() -> Result<CholFactor> + Send,
{
    match skew {
        Some(skew) if threads > 1 => std::thread::scope(|s| {
            let h = s.spawn(skew);
            let fs = sym();
            (fs, Some(h.join().expect("factor thread panicked")))
        }),
        skew => (sym(), skew.map(|g| g())),
    }
}

/// Pivoted Cholesky of the sym block (and the skew block unless skipped).
pub fn ps_factor(source: Source<'_>, n: usize, opts: &PsFactorOptions) -> Result<StructuredRep> {
    let basis = SymBlockBasis::new(n)?;
    let lazy_opts = LazyOptions {
        max_rank: opts.max_rank,
        threads: opts.threads,
    };
    let sym_kind = if opts.skip_skew {
        BlockKind::Sym1234
    } else {
        BlockKind::Sym
    };
    let delta = opts.delta;

    let (sym, skew, counters) = match source {
        Source::Dense(a) => {
            check_basis(a, &basis)?;
            require_ps_symmetric(a, n)?;
            if opts.skip_skew {
                require_1234(a, n)?;
            }
            match opts.engine {
                Engine::Dense => dense_blocks(a, &basis, sym_kind, opts)?,
                Engine::Lazy => {
                    lazy_blocks(a, &basis, sym_kind, opts.skip_skew, delta, &lazy_opts)?
                }
            }
        }
        Source::Oracle(o) => match opts.engine {
            Engine::Dense => dense_blocks(o, &basis, sym_kind, opts)?,
            Engine::Lazy => lazy_blocks(o, &basis, sym_kind, opts.skip_skew, delta, &lazy_opts)?,
        },
    };
    Ok(StructuredRep {
        n,
        basis,
        sym,
        skew,
        delta,
        counters,
    })
}

type Blocks = (CholFactor, Option<CholFactor>, RepCounters);

fn dense_blocks<O: EntryOracle + ?Sized>(
    source: &O,
    basis: &SymBlockBasis,
    sym_kind: BlockKind,
    opts: &PsFactorOptions,
) -> Result<Blocks> {
    let so = BlockOracle::new(source, basis, sym_kind)?;
    let asym = symmetric_from_lower(basis.n_sym(), |k, l| so.entry(k, l));
    let mut setup = tri(basis.n_sym());
    let mut evals = so.source_evals();
    let askew = if opts.skip_skew {
        None
    } else {
        let ko = BlockOracle::new(source, basis, BlockKind::Skew)?;
        let m = symmetric_from_lower(basis.n_skew(), |k, l| ko.entry(k, l));
        setup += tri(basis.n_skew());
        evals += ko.source_evals();
        Some(m)
    };
    let delta = opts.delta;
    let (fs, fk) = run_blocks(
        opts.threads,
        || pivoted_cholesky_dense(&asym, delta),
        askew
            .as_ref()
            .map(|m| move || pivoted_cholesky_dense(m, delta)),
    );
    let sym = fs?;
    let skew = fk.transpose()?;
    let counters = RepCounters {
        factor_flops: sym.flops + skew.as_ref().map_or(0, |f| f.flops),
        setup_entries: setup,
        evals,
        storage: sym.storage + skew.as_ref().map_or(0, |f| f.storage),
    };
    Ok((sym, skew, counters))
}

fn lazy_blocks<O: EntryOracle + ?Sized>(
    source: &O,
    basis: &SymBlockBasis,
    sym_kind: BlockKind,
    skip_skew: bool,
    delta: f64,
    lazy_opts: &LazyOptions,
) -> Result<Blocks> {
    let so = BlockOracle::new(source, basis, sym_kind)?;
    let ko = if skip_skew {
        None
    } else {
        Some(BlockOracle::new(source, basis, BlockKind::Skew)?)
    };
    let (fs, fk) = run_blocks(
        lazy_opts.threads,
        || pivoted_cholesky_lazy_with(&so, delta, lazy_opts),
        ko.as_ref()
            .map(|o| move || pivoted_cholesky_lazy_with(o, delta, lazy_opts)),
    );
    let sym = fs?;
    let skew = fk.transpose()?;
    let counters = RepCounters {
        factor_flops: sym.flops + skew.as_ref().map_or(0, |f| f.flops),
        setup_entries: 0,
        evals: so.source_evals() + ko.as_ref().map_or(0, |o| o.source_evals()),
        storage: sym.storage + skew.as_ref().map_or(0, |f| f.storage),
    };
    Ok((sym, skew, counters))
}

fn tri(m: usize) -> u64 {
    (m * (m + 1) / 2) as u64
}

/// `(Y^(sym), Y^(skew))` truncated to the given ranks, with
/// `Y^(sym) = Q^(sym) P^(sym)^T L^(sym)` and likewise for the skew part.
pub fn ps_factors(
    rep: &StructuredRep,
    r_sym: usize,
    r_skew: usize,
) -> Result<(DenseMatrix, DenseMatrix)> {
    check_trunc(r_sym, rep.r_sym())?;
    check_trunc(r_skew, rep.r_skew())?;
    let n2 = rep.n * rep.n;
    let mut ys = DenseMatrix::zeros(n2, r_sym);
    for c in 0..r_sym {
        let y = rep.basis.expand_sym(&rep.sym.y_column(c));
        ys.col_mut(c).copy_from_slice(&y);
    }
    let mut yk = DenseMatrix::zeros(n2, r_skew);
    if let Some(f) = &rep.skew {
        for c in 0..r_skew {
            let y = rep.basis.expand_skew(&f.y_column(c));
            yk.col_mut(c).copy_from_slice(&y);
        }
    }
    Ok((ys, yk))
}

/// `sum y^(sym) y^(sym)^T + sum y^(skew) y^(skew)^T` over the leading columns.
pub fn ps_reconstruct(rep: &StructuredRep, r_sym: usize, r_skew: usize) -> Result<DenseMatrix> {
    let (ys, yk) = ps_factors(rep, r_sym, r_skew)?;
    let n2 = rep.n * rep.n;
    let mut out = DenseMatrix::zeros(n2, n2);
    add_outer_products(&mut out, &ys);
    add_outer_products(&mut out, &yk);
    Ok(out)
}

/// One term `σ C ⊗ C` of a symmetric Kronecker expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct KronTerm {
    pub sigma: f64,
    pub c: DenseMatrix,
}

/// `C_i = reshape(y_i^(sym), n, n)` with `σ_i = 1`, for a representation
/// without skew part.
pub fn rep_to_kron_terms(rep: &StructuredRep) -> Result<Vec<KronTerm>> {
    rep_to_kron_terms_truncated(rep, rep.r_sym())
}

pub fn rep_to_kron_terms_truncated(rep: &StructuredRep, r: usize) -> Result<Vec<KronTerm>> {
    if rep.r_skew() > 0 {
        return Err(Error::InvalidArgument(format!(
            "Kronecker terms need an empty skew part, found rank {}",
            rep.r_skew()
        )));
    }
    let (ys, _) = ps_factors(rep, r, 0)?;
    (0..r)
        .map(|c| {
            Ok(KronTerm {
                sigma: 1.0,
                c: DenseMatrix::from_col_major(rep.n, rep.n, ys.col(c).to_vec())?,
            })
        })
        .collect()
}

/// Eigendecompositions of the two diagonal blocks of `Q^T A Q`.
#[derive(Clone, Debug)]
pub struct StructuredEig {
    pub basis: SymBlockBasis,
    pub sym_values: Vec<f64>,
    pub skew_values: Vec<f64>,
    pub u_sym: DenseMatrix,
    pub u_skew: DenseMatrix,
}

impl StructuredEig {
    /// Eigenvalues of `A` as the union of both blocks (sym block first).
    pub fn all_values(&self) -> Vec<f64> {
        let mut v = self.sym_values.clone();
        v.extend_from_slice(&self.skew_values);
        v
    }

    /// Column `k` of `Q^(sym) U^(sym)`.
    pub fn sym_vector(&self, k: usize) -> Vec<f64> {
        self.basis.expand_sym(self.u_sym.col(k))
    }

    /// Column `k` of `Q^(skew) U^(skew)`.
    pub fn skew_vector(&self, k: usize) -> Vec<f64> {
        self.basis.expand_skew(self.u_skew.col(k))
    }

    /// Full eigenvector matrix `Q diag(U^(sym), U^(skew))`, columns ordered
    /// like [`StructuredEig::all_values`].
    pub fn eigenvectors(&self) -> DenseMatrix {
        let n2 = self.basis.n() * self.basis.n();
        let ns = self.basis.n_sym();
        let mut v = DenseMatrix::zeros(n2, n2);
        for k in 0..ns {
            v.col_mut(k).copy_from_slice(&self.sym_vector(k));
        }
        for k in 0..self.basis.n_skew() {
            v.col_mut(ns + k).copy_from_slice(&self.skew_vector(k));
        }
        v
    }
}

pub fn structured_schur(a: &DenseMatrix, n: usize) -> Result<StructuredEig> {
    let basis = SymBlockBasis::new(n)?;
    let (asym, askew) = form_blocks(a, &basis)?;
    let es = symmetric_eig(&asym)?;
    let ek = symmetric_eig(&askew)?;
    Ok(StructuredEig {
        basis,
        sym_values: es.values,
        skew_values: ek.values,
        u_sym: es.vectors,
        u_skew: ek.vectors,
    })
}

/// `Ã(i2 + j2 n, i1 + j1 n) = A(i1 + i2 n, j1 + j2 n)`.
pub fn kpsvd_reshuffle(a: &DenseMatrix, n: usize) -> Result<DenseMatrix> {
    let n2 = n * n;
    if a.rows() != n2 || a.cols() != n2 {
        return Err(Error::DimensionMismatch(format!(
            "expected {n2}x{n2} matrix for n = {n}, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let mut t = DenseMatrix::zeros(n2, n2);
    for j2 in 0..n {
        for j1 in 0..n {
            for i2 in 0..n {
                for i1 in 0..n {
                    t[(i2 + j2 * n, i1 + j1 * n)] = a[(i1 + i2 * n, j1 + j2 * n)];
                }
            }
        }
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermKind {
    Sym,
    Skew,
}

/// One term `λ B ⊗ B`.
#[derive(Clone, Debug)]
pub struct KpsvdTerm {
    pub lambda: f64,
    pub b: DenseMatrix,
    pub kind: TermKind,
}

/// Unnormalized KPSVD `A = Σ λ B ⊗ B` with `B` symmetric (sym terms first)
/// or skew-symmetric; `|λ|` is non-increasing within each group.
pub fn structured_kpsvd(a: &DenseMatrix, n: usize) -> Result<Vec<KpsvdTerm>> {
    let t = kpsvd_reshuffle(a, n)?;
    let eig = structured_schur(&t, n)?;
    let mut terms = Vec::with_capacity(n * n);
    for (k, &lambda) in eig.sym_values.iter().enumerate() {
        terms.push(KpsvdTerm {
            lambda,
            b: DenseMatrix::from_col_major(n, n, eig.sym_vector(k))?,
            kind: TermKind::Sym,
        });
    }
    for (k, &lambda) in eig.skew_values.iter().enumerate() {
        terms.push(KpsvdTerm {
            lambda,
            b: DenseMatrix::from_col_major(n, n, eig.skew_vector(k))?,
            kind: TermKind::Skew,
        });
    }
    Ok(terms)
}

/// `Σ λ B ⊗ B`.
pub fn kpsvd_assemble(terms: &[KpsvdTerm], n: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(n * n, n * n);
    for t in terms {
        let k = t.b.kron(&t.b);
        for (o, v) in out.as_mut_slice().iter_mut().zip(k.as_slice()) {
            *o += t.lambda * v;
        }
    }
    out
}
