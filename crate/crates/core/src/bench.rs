//! Counter-based comparisons of the structured and unstructured paths.
//!
//! Everything here is deterministic: flop, evaluation and storage counts come
//! from the factorization routines, never from a clock.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eri::{random_basis, BasisConfig, EriMatrixOracle, GaussianBasis};
use crate::error::{Error, Result};
use crate::index::shuffle_index;
use crate::matrix::DenseMatrix;
use crate::pschol::{pivoted_cholesky_dense, pivoted_cholesky_lazy, DEFAULT_DELTA};
use crate::psym::{ps_factor, Engine, PsFactorOptions, Source};

pub const BENCH_CSV_HEADER: &str =
    "n,flops_full,flops_structured,setup_entries,evals_full,evals_structured,flop_ratio,eval_ratio";

/// Full-rank PS-symmetric matrix of order `n²`: one uniform value in
/// `[-1, 1]` per orbit `{(a,b), (b,a), (Πa,Πb), (Πb,Πa)}` off the diagonal,
/// and `n²` on the diagonal, so it is strictly diagonally dominant.
pub fn synthetic_ps_matrix(n: usize, seed: u64) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let big = n * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DenseMatrix::zeros(big, big);
    let mut set = vec![false; big * big];
    for j in 0..big {
        let pj = shuffle_index(j, n);
        for i in j..big {
            if set[i + j * big] {
                continue;
            }
            let pi = shuffle_index(i, n);
            let v = if i == j {
                big as f64
            } else {
                rng.gen_range(-1.0..=1.0)
            };
            for (r, c) in [(i, j), (j, i), (pi, pj), (pj, pi)] {
                a[(r, c)] = v;
                set[r + c * big] = true;
            }
        }
    }
    Ok(a)
}

/// Flops of a full factorization against block setup plus the two
/// half-size factorizations, on [`synthetic_ps_matrix`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlopComparison {
    pub flops_full: u64,
    pub flops_structured: u64,
    pub setup_entries: u64,
    pub rank_full: usize,
    pub rank_structured: usize,
}

pub fn flop_comparison(n: usize, seed: u64) -> Result<FlopComparison> {
    let a = synthetic_ps_matrix(n, seed)?;
    let full = pivoted_cholesky_dense(&a, DEFAULT_DELTA)?;
    let rep = ps_factor(Source::Dense(&a), n, &PsFactorOptions::default())?;
    Ok(FlopComparison {
        flops_full: full.flops,
        flops_structured: rep.counters.total_flops(),
        setup_entries: rep.counters.setup_entries,
        rank_full: full.rank,
        rank_structured: rep.r_sym() + rep.r_skew(),
    })
}

/// Oracle evaluations and working storage of the lazy factorization of the
/// full ERI matrix against the lazy single-block factorization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalComparison {
    pub evals_full: u64,
    pub evals_structured: u64,
    pub storage_full: u64,
    pub storage_structured: u64,
    pub rank_full: usize,
    pub rank_structured: usize,
}

pub fn eval_comparison(basis: &GaussianBasis, delta: f64) -> Result<EvalComparison> {
    let oracle = EriMatrixOracle::new(basis);
    let full = pivoted_cholesky_lazy(&oracle, delta, None)?;
    let opts = PsFactorOptions {
        delta,
        skip_skew: true,
        engine: Engine::Lazy,
        ..Default::default()
    };
    let rep = ps_factor(Source::Oracle(&oracle), basis.n(), &opts)?;
    Ok(EvalComparison {
        evals_full: full.evals,
        evals_structured: rep.counters.evals,
        storage_full: full.storage,
        storage_structured: rep.counters.storage,
        rank_full: full.rank,
        rank_structured: rep.r_sym(),
    })
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub seed: u64,
    /// Threshold of the ERI evaluation comparison.
    pub delta: f64,
    pub basis: BasisConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![1, 8, 16, 24],
            seed: 1,
            delta: 1e-6,
            basis: BasisConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub flops: FlopComparison,
    pub evals: EvalComparison,
}

impl BenchRow {
    pub fn flop_ratio(&self) -> f64 {
        self.flops.flops_full as f64 / self.flops.flops_structured as f64
    }

    pub fn eval_ratio(&self) -> f64 {
        self.evals.evals_full as f64 / self.evals.evals_structured as f64
    }

    pub fn storage_ratio(&self) -> f64 {
        self.evals.storage_full as f64 / self.evals.storage_structured as f64
    }
}

pub fn bench_row(n: usize, cfg: &BenchConfig) -> Result<BenchRow> {
    let flops = flop_comparison(n, cfg.seed)?;
    let basis = random_basis(n, cfg.seed, &cfg.basis)?;
    let evals = eval_comparison(&basis, cfg.delta)?;
    Ok(BenchRow { n, flops, evals })
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.sizes.iter().map(|&n| bench_row(n, cfg)).collect()
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = format!("{BENCH_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.6},{:.6}",
            r.n,
            r.flops.flops_full,
            r.flops.flops_structured,
            r.flops.setup_entries,
            r.evals.evals_full,
            r.evals.evals_structured,
            r.flop_ratio(),
            r.eval_ratio()
        );
    }
    out
}
