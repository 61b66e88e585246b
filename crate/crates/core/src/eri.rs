//! Two-electron repulsion integrals over normalized s-type Gaussians
//!
//! ```text
//! φ_k(r) = (2 α_k / π)^{3/4} exp(-α_k |r - r_k|²)
//! (12|34) = ∫∫ φ1(r1) φ2(r1) φ3(r2) φ4(r2) / |r1 - r2| dr1 dr2
//! ```
//!
//! evaluated in closed form through the Boys function `F0`. Every quantity
//! is built from pair-symmetric pieces so the eight index symmetries hold
//! bit for bit.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::pschol::{pivoted_cholesky_dense, EntryOracle};
use crate::psym::{ps_factor, Engine, PsFactorOptions, Source};
use crate::tensor4::Tensor4;

/// Below this argument `F0` switches to its Taylor series.
const BOYS_SERIES_CUTOFF: f64 = 1e-10;

/// `F0(t) = ∫_0^1 exp(-t u²) du`.
pub fn boys_f0(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Boys function argument must be non-negative, got {t}"
        )));
    }
    Ok(boys_f0_unchecked(t))
}

#[inline]
fn boys_f0_unchecked(t: f64) -> f64 {
    if t <= BOYS_SERIES_CUTOFF {
        1.0 - t / 3.0 + t * t / 10.0 - t * t * t / 42.0
    } else {
        let s = t.sqrt();
        0.5 * (PI / t).sqrt() * libm::erf(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianBasis {
    exponents: Vec<f64>,
    centers: Vec<[f64; 3]>,
    norms: Vec<f64>,
}

impl GaussianBasis {
    pub fn new(exponents: Vec<f64>, centers: Vec<[f64; 3]>) -> Result<Self> {
        if exponents.len() != centers.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} exponents but {} centers",
                exponents.len(),
                centers.len()
            )));
        }
        if exponents.is_empty() {
            return Err(Error::InvalidArgument("basis must not be empty".into()));
        }
        if let Some(a) = exponents.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "exponents must be positive and finite, got {a}"
            )));
        }
        if centers.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("centers must be finite".into()));
        }
        let norms = exponents
            .iter()
            .map(|&a| (2.0 * a / PI).powf(0.75))
            .collect();
        Ok(Self {
            exponents,
            centers,
            norms,
        })
    }

    pub fn n(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn centers(&self) -> &[[f64; 3]] {
        &self.centers
    }

    /// Same centers, exponents multiplied by `c`.
    pub fn scaled_exponents(&self, c: f64) -> Result<Self> {
        Self::new(
            self.exponents.iter().map(|a| a * c).collect(),
            self.centers.clone(),
        )
    }

    /// Gaussian product data of the pair `(i, j)`: exponent sum, prefactor
    /// `N_i N_j exp(-α_i α_j / p |r_i - r_j|²)` and the product center.
    #[inline]
    fn pair(&self, i: usize, j: usize) -> (f64, f64, [f64; 3]) {
        let (ai, aj) = (self.exponents[i], self.exponents[j]);
        let (ri, rj) = (&self.centers[i], &self.centers[j]);
        let p = ai + aj;
        let mut d2 = 0.0;
        let mut center = [0.0; 3];
        for k in 0..3 {
            let d = ri[k] - rj[k];
            d2 += d * d;
            center[k] = (ai * ri[k] + aj * rj[k]) / p;
        }
        let pref = (self.norms[i] * self.norms[j]) * (-(ai * aj / p) * d2).exp();
        (p, pref, center)
    }

    #[inline]
    fn eri_unchecked(&self, i1: usize, i2: usize, i3: usize, i4: usize) -> f64 {
        let (p, e12, rp) = self.pair(i1, i2);
        let (q, e34, rq) = self.pair(i3, i4);
        let mut d2 = 0.0;
        for k in 0..3 {
            let d = rp[k] - rq[k];
            d2 += d * d;
        }
        let pq = p * q;
        let s = p + q;
        let c = 2.0 * PI.powf(2.5) / (pq * s.sqrt());
        c * (e12 * e34) * boys_f0_unchecked(pq / s * d2)
    }
}

/// `(i1 i2 | i3 i4)` with 0-based indices.
pub fn eri_entry(basis: &GaussianBasis, i1: usize, i2: usize, i3: usize, i4: usize) -> Result<f64> {
    let n = basis.n();
    if [i1, i2, i3, i4].iter().any(|&i| i >= n) {
        return Err(Error::InvalidArgument(format!(
            "index ({i1}, {i2}, {i3}, {i4}) out of range for a basis of size {n}"
        )));
    }
    Ok(basis.eri_unchecked(i1, i2, i3, i4))
}

/// The `[1,2]x[3,4]` unfolding `A(i1 + i2 n, i3 + i4 n) = (i1 i2 | i3 i4)`
/// as an entry oracle.
pub struct EriMatrixOracle<'a> {
    basis: &'a GaussianBasis,
}

impl<'a> EriMatrixOracle<'a> {
    pub fn new(basis: &'a GaussianBasis) -> Self {
        Self { basis }
    }
}

impl EntryOracle for EriMatrixOracle<'_> {
    fn size(&self) -> usize {
        self.basis.n() * self.basis.n()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        let n = self.basis.n();
        assert!(i < n * n && j < n * n, "entry ({i}, {j}) out of range");
        self.basis.eri_unchecked(i % n, i / n, j % n, j / n)
    }
}

pub fn eri_tensor(basis: &GaussianBasis) -> Tensor4 {
    Tensor4::from_fn(basis.n(), |a, b, c, d| basis.eri_unchecked(a, b, c, d))
}

/// Materialized `[1,2]x[3,4]` unfolding.
pub fn eri_matrix(basis: &GaussianBasis) -> DenseMatrix {
    crate::tensor4::unfold_12_34(&eri_tensor(basis))
}

/// Geometry of [`random_basis`].
#[derive(Clone, Debug, PartialEq)]
pub struct BasisConfig {
    /// Centers are uniform in `[0, box_size)³`.
    pub box_size: f64,
    /// Exponents are log-uniform in this closed range.
    pub exponent_range: (f64, f64),
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            box_size: 10.0,
            exponent_range: (0.2, 5.0),
        }
    }
}

/// Deterministic pseudo-random basis (ChaCha8 stream seeded with `seed`).
pub fn random_basis(n: usize, seed: u64, cfg: &BasisConfig) -> Result<GaussianBasis> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "basis size must be at least 1".into(),
        ));
    }
    let (lo, hi) = cfg.exponent_range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "exponent range [{lo}, {hi}] is empty or not positive"
        )));
    }
    if !(cfg.box_size > 0.0 && cfg.box_size.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "box size must be positive, got {}",
            cfg.box_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut exponents = Vec::with_capacity(n);
    let mut centers = Vec::with_capacity(n);
    for _ in 0..n {
        let e = if lhi > llo {
            rng.gen_range(llo..=lhi).exp()
        } else {
            lo
        };
        exponents.push(e);
        centers.push([
            rng.gen_range(0.0..cfg.box_size),
            rng.gen_range(0.0..cfg.box_size),
            rng.gen_range(0.0..cfg.box_size),
        ]);
    }
    GaussianBasis::new(exponents, centers)
}

/// Input of [`rank_profile`].
pub enum ProfileSource<'a> {
    /// ERI problem; ranks come from the sym block (the skew block is zero).
    Basis(&'a GaussianBasis),
    /// Any symmetric PSD matrix.
    Matrix(&'a DenseMatrix),
}

/// `(p, rank)` where `rank` is where pivoted Cholesky stops with relative
/// threshold `10^-p`.
pub fn rank_profile(source: &ProfileSource<'_>, ps: &[u32]) -> Result<Vec<(u32, usize)>> {
    let mut out = Vec::with_capacity(ps.len());
    for &p in ps {
        if p == 0 {
            return Err(Error::InvalidArgument("p must be positive".into()));
        }
        let delta = 10f64.powi(-(p as i32));
        let rank = match source {
            ProfileSource::Basis(b) => {
                let oracle = EriMatrixOracle::new(b);
                let opts = PsFactorOptions {
                    delta,
                    skip_skew: true,
                    engine: Engine::Lazy,
                    ..Default::default()
                };
                ps_factor(Source::Oracle(&oracle), b.n(), &opts)?.r_sym()
            }
            ProfileSource::Matrix(m) => pivoted_cholesky_dense(m, delta)?.rank,
        };
        out.push((p, rank));
    }
    Ok(out)
}
