//! Scalar-loop oracles, independent of the library's vectorized paths.
//!
//! Accumulation orders are the documented canonical ones (row-major, pair
//! lexicographic), so value comparisons against the implementation can be
//! exact, not just within a tolerance.

#![allow(dead_code)]

use distillforge::numcore::matrix::Matrix;
use distillforge::numcore::rng::RngStream;

pub fn unit_rows(seed: u64, stream: u64, m: usize, d: usize) -> Matrix {
    let mut rng = RngStream::new(seed, stream);
    let mut out = rng.normal_matrix(m, d);
    for r in 0..m {
        let mut norm = 0.0;
        for v in out.row(r) {
            norm += v * v;
        }
        let inv = 1.0 / norm.sqrt();
        for v in out.row_mut(r) {
            *v *= inv;
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        total += x * y;
    }
    total
}

/// `sum_x (1 - s_x . t_x)` by plain loops.
pub fn cosine_oracle(s: &Matrix, t: &Matrix) -> f64 {
    assert_eq!(s.shape(), t.shape());
    let mut value = 0.0;
    for r in 0..s.rows() {
        value += 1.0 - dot(s.row(r), t.row(r));
    }
    value
}

/// Mean over all m^2 entries of the squared gram difference, by loops.
pub fn sim_oracle(s: &Matrix, t: &Matrix) -> f64 {
    assert_eq!(s.rows(), t.rows());
    let m = s.rows();
    let mut sum = 0.0;
    for i in 0..m {
        for j in 0..m {
            let d = dot(s.row(i), s.row(j)) - dot(t.row(i), t.row(j));
            sum += d * d;
        }
    }
    sum / (m as f64 * m as f64)
}

/// Brute-force enumeration of all pairs of distinct index pairs in the
/// canonical lexicographic order; margin hinge on strict teacher ordering;
/// divided by `C(C(m,2),2)`.
pub fn resim_oracle(s: &Matrix, t: &Matrix, margin: f64) -> (f64, u64) {
    assert_eq!(s.rows(), t.rows());
    let m = s.rows();
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            pairs.push((i, j));
        }
    }
    let p = pairs.len() as u64;
    let n = if p < 2 { 0 } else { p * (p - 1) / 2 };
    if n == 0 {
        return (0.0, 0);
    }
    let mut sum = 0.0;
    let mut hinges = 0;
    for a in 0..pairs.len() {
        for b in a + 1..pairs.len() {
            let (i, j) = pairs[a];
            let (k, l) = pairs[b];
            let ta = dot(t.row(i), t.row(j));
            let tb = dot(t.row(k), t.row(l));
            let sa = dot(s.row(i), s.row(j));
            let sb = dot(s.row(k), s.row(l));
            let z = if ta > tb {
                sb - sa + margin
            } else if tb > ta {
                sa - sb + margin
            } else {
                continue;
            };
            if z > 0.0 {
                sum += z;
                hinges += 1;
            }
        }
    }
    (sum / n as f64, hinges)
}

/// Count pairs of distinct index pairs by exhaustive enumeration.
pub fn pair_count_oracle(m: usize) -> u64 {
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            pairs.push((i, j));
        }
    }
    let mut count = 0u64;
    for a in 0..pairs.len() {
        for b in 0..pairs.len() {
            if b > a {
                count += 1;
            }
        }
    }
    count
}

/// Rows with a prescribed symmetric positive-definite gram matrix, via a
/// tiny Cholesky factorization (rows of the lower factor).
#[allow(clippy::needless_range_loop)]
pub fn rows_with_gram(gram: &[Vec<f64>]) -> Matrix {
    let n = gram.len();
    let mut l = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = gram[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                assert!(sum > 0.0, "gram must be positive definite");
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Matrix::from_rows(&l)
}
