#![allow(dead_code)]

use multisym::index::shuffle_index;
use multisym::tensor4::Tensor4;
use multisym::DenseMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// `Y Y^T` with every entry summed in the same order as its mirror, so the
/// result is exactly symmetric.
pub fn gram(y: &DenseMatrix) -> DenseMatrix {
    let n = y.rows();
    let mut a = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let mut s = 0.0;
            for k in 0..y.cols() {
                s += y[(i, k)] * y[(j, k)];
            }
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
    }
    a
}

/// `B + P B P^T` for an involution `p`; exactly invariant under `p` since
/// floating-point addition commutes.
fn plus_permuted(b: &DenseMatrix, p: impl Fn(usize) -> usize) -> DenseMatrix {
    DenseMatrix::from_fn(b.rows(), b.cols(), |i, j| b[(i, j)] + b[(p(i), p(j))])
}

/// Random PS-symmetric matrix (indefinite in general), entries in [-2, 2].
pub fn random_ps(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let b = random_matrix(n * n, n * n, rng);
    let b = DenseMatrix::from_fn(
        n * n,
        n * n,
        |i, j| {
            if i >= j {
                b[(i, j)]
            } else {
                b[(j, i)]
            }
        },
    );
    plus_permuted(&b, |i| shuffle_index(i, n))
}

/// Random PS-symmetric PSD matrix of rank at most `2k`.
pub fn random_ps_psd(n: usize, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let b = gram(&random_matrix(n * n, k, rng));
    plus_permuted(&b, |i| shuffle_index(i, n))
}

/// Random centrosymmetric PSD matrix of order `n` and rank at most `2k`.
pub fn random_centro_psd(n: usize, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let b = gram(&random_matrix(n, k, rng));
    plus_permuted(&b, |i| n - 1 - i)
}

/// Value classes of the n = 3 example tensor, one-based, as printed in its
/// value table. The value-15 row repeats the value-20 class.
pub const EXAMPLE_TABLE: [&[(usize, usize, usize, usize)]; 21] = [
    &[(1, 1, 1, 1)],
    &[(2, 1, 1, 1), (1, 2, 1, 1), (1, 1, 2, 1), (1, 1, 1, 2)],
    &[(3, 1, 1, 1), (1, 3, 1, 1), (1, 1, 3, 1), (1, 1, 1, 3)],
    &[(2, 2, 1, 1), (1, 1, 2, 2)],
    &[(3, 2, 1, 1), (2, 3, 1, 1), (1, 1, 3, 2), (1, 1, 2, 3)],
    &[(3, 3, 1, 1), (1, 1, 3, 3)],
    &[(2, 1, 2, 1), (1, 2, 2, 1), (2, 1, 1, 2), (1, 2, 1, 2)],
    &[
        (1, 3, 2, 1),
        (3, 1, 2, 1),
        (1, 3, 1, 2),
        (3, 1, 1, 2),
        (2, 1, 1, 3),
        (1, 2, 1, 3),
        (2, 1, 3, 1),
        (1, 2, 3, 1),
    ],
    &[(2, 2, 2, 1), (2, 2, 1, 2), (2, 1, 2, 2), (1, 2, 2, 2)],
    &[
        (3, 2, 2, 1),
        (2, 3, 2, 1),
        (3, 2, 1, 2),
        (2, 3, 1, 2),
        (2, 1, 3, 2),
        (1, 2, 3, 2),
        (2, 1, 2, 3),
        (1, 2, 2, 3),
    ],
    &[(3, 3, 2, 1), (3, 3, 1, 2), (2, 1, 3, 3), (1, 2, 3, 3)],
    &[(3, 1, 3, 1), (1, 3, 3, 1), (3, 1, 1, 3), (1, 3, 1, 3)],
    &[(2, 2, 3, 1), (2, 2, 1, 3), (3, 1, 2, 2), (1, 3, 2, 2)],
    &[
        (3, 2, 3, 1),
        (2, 3, 3, 1),
        (3, 2, 1, 3),
        (2, 3, 1, 3),
        (3, 1, 3, 2),
        (1, 3, 3, 2),
        (3, 1, 2, 3),
        (1, 3, 2, 3),
    ],
    &[(3, 3, 3, 2), (3, 3, 2, 3), (3, 2, 3, 3), (2, 3, 3, 3)],
    &[(2, 2, 2, 2)],
    &[(3, 2, 2, 2), (2, 3, 2, 2), (2, 2, 3, 2), (2, 2, 2, 3)],
    &[(3, 3, 2, 2), (2, 2, 3, 3)],
    &[(3, 2, 3, 2), (2, 3, 3, 2), (3, 2, 2, 3), (2, 3, 2, 3)],
    &[(3, 2, 3, 3), (2, 3, 3, 3), (3, 3, 3, 2), (3, 3, 2, 3)],
    &[(3, 3, 3, 3)],
];

/// The class the value-15 row should hold: the only one left uncovered.
pub const EXAMPLE_VALUE_15_CLASS: [(usize, usize, usize, usize); 4] =
    [(3, 3, 3, 1), (3, 3, 1, 3), (3, 1, 3, 3), (1, 3, 3, 3)];

/// Builds the example tensor. With `corrected`, row 15 uses
/// [`EXAMPLE_VALUE_15_CLASS`]. Returns the tensor and, per entry, how many rows
/// claimed it.
pub fn example_tensor(corrected: bool) -> (Tensor4, Vec<u32>) {
    let mut t = Tensor4::zeros(3);
    let mut hits = vec![0u32; 81];
    for (v, row) in EXAMPLE_TABLE.iter().enumerate() {
        let row: &[(usize, usize, usize, usize)] = if corrected && v + 1 == 15 {
            &EXAMPLE_VALUE_15_CLASS
        } else {
            row
        };
        for &(a, b, c, d) in row {
            t.set(a - 1, b - 1, c - 1, d - 1, (v + 1) as f64);
            hits[(a - 1) + 3 * (b - 1) + 9 * (c - 1) + 27 * (d - 1)] += 1;
        }
    }
    (t, hits)
}

/// The `[1,3]x[2,4]` unfolding as printed, rows top to bottom.
pub const PRINTED_13_24: [[u32; 9]; 9] = [
    [1, 2, 3, 2, 7, 8, 3, 8, 12],
    [2, 4, 5, 17, 19, 10, 8, 13, 14],
    [3, 5, 6, 8, 10, 11, 12, 14, 15],
    [2, 7, 8, 4, 9, 13, 5, 10, 14],
    [7, 9, 10, 9, 16, 17, 10, 17, 19],
    [8, 10, 11, 13, 17, 18, 14, 19, 20],
    [3, 8, 12, 5, 10, 14, 6, 11, 15],
    [8, 13, 14, 10, 17, 19, 11, 18, 20],
    [12, 14, 15, 14, 19, 20, 15, 20, 21],
];

/// Zero-based entries of [`PRINTED_13_24`] that disagree with the table,
/// with the printed and the table-implied values.
pub const PRINTED_13_24_TYPOS: [((usize, usize), u32, u32); 2] = [((1, 3), 17, 7), ((1, 4), 19, 9)];

/// The `[1,2]x[3,4]` unfolding as printed.
pub const PRINTED_12_34: [[u32; 9]; 9] = [
    [1, 2, 3, 2, 4, 5, 3, 5, 6],
    [2, 7, 8, 7, 9, 10, 8, 10, 11],
    [3, 8, 12, 8, 13, 14, 12, 14, 15],
    [2, 7, 8, 7, 9, 10, 8, 10, 11],
    [4, 9, 13, 9, 16, 17, 13, 17, 18],
    [5, 10, 14, 10, 17, 19, 14, 19, 20],
    [3, 8, 12, 8, 13, 14, 12, 14, 15],
    [5, 10, 14, 10, 17, 19, 14, 19, 20],
    [6, 11, 15, 11, 18, 20, 15, 20, 21],
];

pub fn printed(rows: &[[u32; 9]; 9]) -> DenseMatrix {
    DenseMatrix::from_fn(9, 9, |i, j| rows[i][j] as f64)
}

/// The printed `Q_33` with `a = 1/√2`; `s` marks `a`, `m` marks `-a`.
pub fn printed_q33() -> DenseMatrix {
    let rows = [
        "1 0 0 0 0 0 0 0 0",
        "0 s 0 0 0 0 s 0 0",
        "0 0 s 0 0 0 0 s 0",
        "0 s 0 0 0 0 m 0 0",
        "0 0 0 1 0 0 0 0 0",
        "0 0 0 0 s 0 0 0 s",
        "0 0 s 0 0 0 0 m 0",
        "0 0 0 0 s 0 0 0 m",
        "0 0 0 0 0 1 0 0 0",
    ];
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let cells: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            r.split(' ')
                .map(|c| match c {
                    "s" => a,
                    "m" => -a,
                    v => v.parse().unwrap(),
                })
                .collect()
        })
        .collect();
    DenseMatrix::from_fn(9, 9, |i, j| cells[i][j])
}

/// `B(i) = Σ_j A(j) X(i1,j1) X(i2,j2) X(i3,j3) X(i4,j4)` by eight loops.
pub fn transform_literal(a: &Tensor4, x: &DenseMatrix) -> Tensor4 {
    let n = a.n();
    Tensor4::from_fn(n, |i1, i2, i3, i4| {
        let mut s = 0.0;
        for j4 in 0..n {
            for j3 in 0..n {
                for j2 in 0..n {
                    for j1 in 0..n {
                        s += a.get(j1, j2, j3, j4)
                            * x[(i1, j1)]
                            * x[(i2, j2)]
                            * x[(i3, j3)]
                            * x[(i4, j4)];
                    }
                }
            }
        }
        s
    })
}

/// Eigenvalues from nalgebra, ascending.
pub fn reference_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    let m = nalgebra::DMatrix::from_column_slice(a.rows(), a.cols(), a.as_slice());
    let mut v: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}
