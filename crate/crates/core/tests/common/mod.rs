#![allow(dead_code)]

use lazylin::{DenseMatrix, Value};

/// Row-major nested vectors; independent of the crate's storage.
pub type Rows = Vec<Vec<f64>>;

pub fn rows_of(m: &DenseMatrix) -> Rows {
    (0..m.n_rows())
        .map(|i| (0..m.n_cols()).map(|j| m.get(i, j)).collect())
        .collect()
}

pub fn matrix_of(rows: &Rows) -> DenseMatrix {
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    DenseMatrix::from_rows(&refs).unwrap()
}

/// Textbook triple loop.
pub fn brute_mul(a: &Rows, b: &Rows) -> Rows {
    let (p, q, r) = (a.len(), b.len(), b[0].len());
    assert_eq!(a[0].len(), q);
    let mut out = vec![vec![0.0; r]; p];
    for i in 0..p {
        for j in 0..r {
            let mut s = 0.0;
            for k in 0..q {
                s += a[i][k] * b[k][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn brute_t(a: &Rows) -> Rows {
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect()
}

pub fn rel_err(x: f64, y: f64) -> f64 {
    if x == y {
        return 0.0;
    }
    (x - y).abs() / x.abs().max(y.abs())
}

pub fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).map(|(&x, &y)| rel_err(x, y)).fold(0.0, f64::max)
}

pub fn max_rel_rows(a: &Rows, b: &Rows) -> f64 {
    let fa: Vec<f64> = a.iter().flatten().copied().collect();
    let fb: Vec<f64> = b.iter().flatten().copied().collect();
    max_rel(&fa, &fb)
}

pub fn value_rel(a: &Value, b: &Value) -> f64 {
    max_rel(&a.values(), &b.values())
}

pub fn norm_inf(a: &Rows) -> f64 {
    a.iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
