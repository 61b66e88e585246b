//! Plain-text file formats.
//!
//! All readers split on arbitrary whitespace. Matrices are stored as a
//! `rows cols` header followed by the values in column-major order; the other
//! formats start with a keyword:
//!
//! ```text
//! perm N            then N one-based indices
//! tensor4 n         then n⁴ values, i1 fastest
//! packed4 n         then (n⁴ + 2n³ + 3n² + 2n)/8 values
//! gbasis n          then n lines "alpha x y z"
//! psrep n delta     then a "sym" and a "skew" section
//! kron n count      then per term: sigma and n² values
//! ```
//!
//! A `psrep` section is `sym <size> <rank>` (or `skew ...`), the one-based
//! pivot vector, then the `size x rank` factor column by column. A skipped
//! skew block is written as `skew none`.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::eri::GaussianBasis;
use crate::error::{Error, Result};
use crate::index::{Permutation, SymBlockBasis};
use crate::matrix::DenseMatrix;
use crate::pschol::CholFactor;
use crate::psym::{KronTerm, RepCounters, StructuredRep};
use crate::tensor4::{packed_len, PackedSymTensor4, Tensor4};

/// Formats `v` so that parsing it back yields the same bits.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub struct Tokens<'a> {
    inner: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    pub fn new(text: &'a str) -> Self {
        Self {
            inner: text.split_whitespace(),
        }
    }

    pub fn next_token(&mut self, what: &str) -> Result<&'a str> {
        self.inner
            .next()
            .ok_or_else(|| Error::Parse(format!("unexpected end of input, expected {what}")))
    }

    pub fn parse<T: FromStr>(&mut self, what: &str) -> Result<T> {
        let tok = self.next_token(what)?;
        tok.parse()
            .map_err(|_| Error::Parse(format!("expected {what}, found {tok:?}")))
    }

    pub fn keyword(&mut self, kw: &str) -> Result<()> {
        let tok = self.next_token(kw)?;
        if tok != kw {
            return Err(Error::Parse(format!("expected {kw:?}, found {tok:?}")));
        }
        Ok(())
    }

    pub fn values(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        (0..count).map(|_| self.parse::<f64>(what)).collect()
    }

    pub fn finish(mut self) -> Result<()> {
        match self.inner.next() {
            None => Ok(()),
            Some(tok) => Err(Error::Parse(format!("trailing data starting at {tok:?}"))),
        }
    }
}

/// The first whitespace-separated token, used to detect the file kind.
pub fn header_token(text: &str) -> Option<&str> {
    text.split_whitespace().next()
}

fn write_values(out: &mut String, values: &[f64], per_line: usize) {
    for chunk in values.chunks(per_line.max(1)) {
        let line: Vec<String> = chunk.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

pub fn write_matrix(m: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    write_values(&mut out, m.as_slice(), m.rows());
    out
}

fn parse_matrix_from(t: &mut Tokens<'_>) -> Result<DenseMatrix> {
    let rows: usize = t.parse("row count")?;
    let cols: usize = t.parse("column count")?;
    let values = t.values(rows * cols, "matrix entry")?;
    DenseMatrix::from_col_major(rows, cols, values)
}

pub fn read_matrix(text: &str) -> Result<DenseMatrix> {
    let mut t = Tokens::new(text);
    let m = parse_matrix_from(&mut t)?;
    t.finish()?;
    Ok(m)
}

pub fn write_permutation(p: &Permutation) -> String {
    let idx: Vec<String> = p.one_based().iter().map(|i| i.to_string()).collect();
    format!("perm {}\n{}\n", p.len(), idx.join(" "))
}

fn parse_perm_values(t: &mut Tokens<'_>, len: usize) -> Result<Permutation> {
    let idx = (0..len)
        .map(|_| t.parse::<usize>("permutation index"))
        .collect::<Result<Vec<_>>>()?;
    Permutation::from_one_based(&idx)
}

pub fn read_permutation(text: &str) -> Result<Permutation> {
    let mut t = Tokens::new(text);
    t.keyword("perm")?;
    let len: usize = t.parse("permutation length")?;
    let p = parse_perm_values(&mut t, len)?;
    t.finish()?;
    Ok(p)
}

pub fn write_tensor(tensor: &Tensor4) -> String {
    let n = tensor.n();
    let mut out = format!("tensor4 {n}\n");
    write_values(&mut out, tensor.as_slice(), n.max(1));
    out
}

pub fn read_tensor(text: &str) -> Result<Tensor4> {
    let mut t = Tokens::new(text);
    t.keyword("tensor4")?;
    let n: usize = t.parse("mode size")?;
    let values = t.values(n.pow(4), "tensor entry")?;
    t.finish()?;
    Tensor4::from_vec(n, values)
}

pub fn write_packed(p: &PackedSymTensor4) -> String {
    let mut out = format!("packed4 {}\n", p.n);
    write_values(&mut out, &p.packed, 8);
    out
}

pub fn read_packed(text: &str) -> Result<PackedSymTensor4> {
    let mut t = Tokens::new(text);
    t.keyword("packed4")?;
    let n: usize = t.parse("mode size")?;
    let packed = t.values(packed_len(n), "packed entry")?;
    t.finish()?;
    Ok(PackedSymTensor4 { n, packed })
}

pub fn write_basis(b: &GaussianBasis) -> String {
    let mut out = format!("gbasis {}\n", b.n());
    for (a, c) in b.exponents().iter().zip(b.centers()) {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            fmt_f64(*a),
            fmt_f64(c[0]),
            fmt_f64(c[1]),
            fmt_f64(c[2])
        );
    }
    out
}

pub fn read_basis(text: &str) -> Result<GaussianBasis> {
    let mut t = Tokens::new(text);
    t.keyword("gbasis")?;
    let n: usize = t.parse("basis size")?;
    let mut exps = Vec::with_capacity(n);
    let mut centers = Vec::with_capacity(n);
    for _ in 0..n {
        exps.push(t.parse::<f64>("exponent")?);
        centers.push([
            t.parse::<f64>("center x")?,
            t.parse::<f64>("center y")?,
            t.parse::<f64>("center z")?,
        ]);
    }
    t.finish()?;
    GaussianBasis::new(exps, centers)
}

fn write_factor(out: &mut String, name: &str, f: &CholFactor) {
    let _ = writeln!(out, "{name} {} {}", f.n, f.rank);
    let idx: Vec<String> = f.perm.one_based().iter().map(|i| i.to_string()).collect();
    out.push_str(&idx.join(" "));
    out.push('\n');
    write_values(out, f.l.as_slice(), f.n);
}

fn read_factor(t: &mut Tokens<'_>, expected: usize, delta: f64) -> Result<CholFactor> {
    let size: usize = t.parse("block size")?;
    if size != expected {
        return Err(Error::Parse(format!(
            "block size {size} does not match the basis ({expected})"
        )));
    }
    let rank: usize = t.parse("block rank")?;
    if rank > size {
        return Err(Error::Parse(format!(
            "rank {rank} exceeds block size {size}"
        )));
    }
    let perm = parse_perm_values(t, size)?;
    let l = DenseMatrix::from_col_major(size, rank, t.values(size * rank, "factor entry")?)?;
    let mut f = CholFactor::empty(size, delta);
    f.rank = rank;
    f.l = l;
    f.perm = perm;
    Ok(f)
}

pub fn write_rep(rep: &StructuredRep) -> String {
    let mut out = format!("psrep {} {}\n", rep.n, fmt_f64(rep.delta));
    write_factor(&mut out, "sym", &rep.sym);
    match &rep.skew {
        Some(f) => write_factor(&mut out, "skew", f),
        None => out.push_str("skew none\n"),
    }
    out
}

pub fn read_rep(text: &str) -> Result<StructuredRep> {
    let mut t = Tokens::new(text);
    t.keyword("psrep")?;
    let n: usize = t.parse("mode size")?;
    let delta: f64 = t.parse("threshold")?;
    let basis = SymBlockBasis::new(n)?;
    t.keyword("sym")?;
    let sym = read_factor(&mut t, basis.n_sym(), delta)?;
    t.keyword("skew")?;
    let mut probe = Tokens {
        inner: t.inner.clone(),
    };
    let skew = if probe.next_token("skew block")? == "none" {
        t.next_token("none")?;
        None
    } else {
        Some(read_factor(&mut t, basis.n_skew(), delta)?)
    };
    t.finish()?;
    Ok(StructuredRep {
        n,
        basis,
        sym,
        skew,
        delta,
        counters: RepCounters::default(),
    })
}

pub fn write_kron_terms(terms: &[KronTerm], n: usize) -> String {
    let mut out = format!("kron {n} {}\n", terms.len());
    for term in terms {
        out.push_str(&fmt_f64(term.sigma));
        out.push('\n');
        write_values(&mut out, term.c.as_slice(), n);
    }
    out
}

pub fn read_kron_terms(text: &str) -> Result<(usize, Vec<KronTerm>)> {
    let mut t = Tokens::new(text);
    t.keyword("kron")?;
    let n: usize = t.parse("term size")?;
    let count: usize = t.parse("term count")?;
    let mut terms = Vec::with_capacity(count);
    for _ in 0..count {
        let sigma: f64 = t.parse("sigma")?;
        let c = DenseMatrix::from_col_major(n, n, t.values(n * n, "term entry")?)?;
        terms.push(KronTerm { sigma, c });
    }
    t.finish()?;
    Ok((n, terms))
}

pub const RANK_CSV_HEADER: &str = "p,rank";

pub fn write_rank_csv(rows: &[(u32, usize)]) -> String {
    let mut out = format!("{RANK_CSV_HEADER}\n");
    for (p, r) in rows {
        let _ = writeln!(out, "{p},{r}");
    }
    out
}

pub fn read_rank_csv(text: &str) -> Result<Vec<(u32, usize)>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(RANK_CSV_HEADER) {
        return Err(Error::Parse(format!("missing {RANK_CSV_HEADER:?} header")));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (p, r) = l
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad row {l:?}")))?;
            let p = p
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad p in {l:?}")))?;
            let r = r
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad rank in {l:?}")))?;
            Ok((p, r))
        })
        .collect()
}
