use super::{dims, KernelId};
use crate::matrix::{DenseMatrix, MatrixView};
use crate::trace::Collector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// `out[i] = Σ_j coeffs[j] · sources[j][i]` in one pass.
///
/// flops: `2 · n_elems · n_terms`.
pub fn fused_axpby_n(
    coeffs: &[f64],
    sources: &[MatrixView<'_>],
    out: &mut DenseMatrix,
    c: &mut Collector,
) {
    assert_eq!(coeffs.len(), sources.len(), "fused_axpby_n: term count");
    assert!(!sources.is_empty(), "fused_axpby_n: no terms");
    let (rows, cols) = (out.n_rows(), out.n_cols());
    for s in sources {
        assert_eq!((s.n_rows(), s.n_cols()), (rows, cols), "fused_axpby_n: shape");
    }
    let n = out.len();
    c.kernel(KernelId::FusedAxpbyN.name(), 2 * (n * sources.len()) as u64, || {
        format!("{rows}x{cols}, terms={}", sources.len())
    });

    let slices: Option<Vec<&[f64]>> = sources.iter().map(|s| s.contiguous()).collect();
    let dst = out.as_mut_slice();
    match slices.as_deref() {
        Some([x]) => {
            let a = coeffs[0];
            for (d, &x) in dst.iter_mut().zip(x.iter()) {
                *d = a * x;
            }
        }
        Some([x, y]) => {
            let (a, b) = (coeffs[0], coeffs[1]);
            for ((d, &x), &y) in dst.iter_mut().zip(x.iter()).zip(y.iter()) {
                *d = a * x + b * y;
            }
        }
        Some(all) => {
            for (i, d) in dst.iter_mut().enumerate() {
                let mut acc = coeffs[0] * all[0][i];
                for (k, s) in all.iter().enumerate().skip(1) {
                    acc += coeffs[k] * s[i];
                }
                *d = acc;
            }
        }
        None => {
            for j in 0..cols {
                for i in 0..rows {
                    let mut acc = coeffs[0] * sources[0].get(i, j);
                    for (k, s) in sources.iter().enumerate().skip(1) {
                        acc += coeffs[k] * s.get(i, j);
                    }
                    dst[i + j * rows] = acc;
                }
            }
        }
    }
}

fn effective<'a>(v: &MatrixView<'a>, trans: bool) -> MatrixView<'a> {
    if trans {
        v.t()
    } else {
        *v
    }
}

/// `out = op(A) · op(B)`; transposition is index mapping only.
///
/// flops: `2 · p · q · r`.
pub fn gemm(
    a: &MatrixView<'_>,
    b: &MatrixView<'_>,
    trans_a: bool,
    trans_b: bool,
    out: &mut DenseMatrix,
    c: &mut Collector,
) {
    let (ea, eb) = (effective(a, trans_a), effective(b, trans_b));
    let (p, q, r) = (ea.n_rows(), ea.n_cols(), eb.n_cols());
    assert_eq!(q, eb.n_rows(), "gemm: inner dimensions");
    assert_eq!((out.n_rows(), out.n_cols()), (p, r), "gemm: output shape");
    c.kernel(KernelId::Gemm.name(), 2 * (p * q * r) as u64, || {
        format!(
            "{} * {}, trans_a={}, trans_b={}",
            dims(&ea),
            dims(&eb),
            ea.is_transposed(),
            eb.is_transposed()
        )
    });
    multiply(&ea, &eb, out);
}

/// Matrix-vector product; same arithmetic as [`gemm`] with a single output column.
///
/// flops: `2 · p · q`.
pub fn gemv(
    a: &MatrixView<'_>,
    x: &MatrixView<'_>,
    trans_a: bool,
    out: &mut DenseMatrix,
    c: &mut Collector,
) {
    let ea = effective(a, trans_a);
    let (p, q) = (ea.n_rows(), ea.n_cols());
    assert_eq!((x.n_rows(), x.n_cols()), (q, 1), "gemv: vector shape");
    assert_eq!((out.n_rows(), out.n_cols()), (p, 1), "gemv: output shape");
    c.kernel(KernelId::Gemv.name(), 2 * (p * q) as u64, || {
        format!("{} * {}, trans_a={}", dims(&ea), dims(x), ea.is_transposed())
    });
    multiply(&ea, x, out);
}

/// Shared product loop. Every output element accumulates over `k` in ascending
/// order starting from zero, whichever loop nest is used.
fn multiply(a: &MatrixView<'_>, b: &MatrixView<'_>, out: &mut DenseMatrix) {
    let (p, q, r) = (a.n_rows(), a.n_cols(), b.n_cols());
    out.as_mut_slice().fill(0.0);
    if q == 0 {
        return;
    }
    if a.col_slice(0).is_some() && !a.is_transposed() {
        // j-k-i over contiguous columns of A
        for j in 0..r {
            let dst = out.col_mut(j);
            for k in 0..q {
                let bkj = b.get(k, j);
                let acol = a.col_slice(k).expect("contiguous column");
                for (d, &x) in dst.iter_mut().zip(acol) {
                    *d += x * bkj;
                }
            }
        }
    } else if a.is_transposed() && a.t().col_slice(0).is_some() {
        // rows of op(A) are base columns: dot-product form
        let at = a.t();
        let mut bcol = vec![0.0; q];
        for j in 0..r {
            let bj: &[f64] = match b.col_slice(j) {
                Some(s) => s,
                None => {
                    for (k, v) in bcol.iter_mut().enumerate() {
                        *v = b.get(k, j);
                    }
                    &bcol
                }
            };
            for i in 0..p {
                let arow = at.col_slice(i).expect("contiguous column");
                let mut acc = 0.0;
                for (&x, &y) in arow.iter().zip(bj) {
                    acc += x * y;
                }
                out.set(i, j, acc);
            }
        }
    } else {
        for j in 0..r {
            for i in 0..p {
                let mut acc = 0.0;
                for k in 0..q {
                    acc += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
    }
}

/// `out = A · Aᵀ`, computing the upper triangle and mirroring it.
///
/// flops: `n · (n + 1) · k` for `A` of shape `n x k`.
pub fn syrk(a: &MatrixView<'_>, out: &mut DenseMatrix, c: &mut Collector) {
    let (n, k) = (a.n_rows(), a.n_cols());
    assert_eq!((out.n_rows(), out.n_cols()), (n, n), "syrk: output shape");
    c.kernel(KernelId::Syrk.name(), (n * (n + 1) * k) as u64, || {
        format!("{}, upper", dims(a))
    });
    out.as_mut_slice().fill(0.0);
    if !a.is_transposed() && k > 0 && a.col_slice(0).is_some() {
        for j in 0..n {
            for kk in 0..k {
                let ajk = a.get(j, kk);
                let acol = &a.col_slice(kk).expect("contiguous column")[..=j];
                let dst = &mut out.col_mut(j)[..=j];
                for (d, &x) in dst.iter_mut().zip(acol) {
                    *d += x * ajk;
                }
            }
        }
    } else if a.is_transposed() && a.t().col_slice(0).is_some() {
        // A = Bᵀ: out(i, j) = <B(:, i), B(:, j)>
        let bt = a.t();
        for j in 0..n {
            let bj = bt.col_slice(j).expect("contiguous column");
            for i in 0..=j {
                let bi = bt.col_slice(i).expect("contiguous column");
                let mut acc = 0.0;
                for (&x, &y) in bi.iter().zip(bj) {
                    acc += x * y;
                }
                out.set(i, j, acc);
            }
        }
    } else {
        for j in 0..n {
            for i in 0..=j {
                let mut acc = 0.0;
                for kk in 0..k {
                    acc += a.get(i, kk) * a.get(j, kk);
                }
                out.set(i, j, acc);
            }
        }
    }
    for j in 0..n {
        for i in 0..j {
            let v = out.get(i, j);
            out.set(j, i, v);
        }
    }
}

/// Scale rows (`Left`) or columns (`Right`) of `B` by the diagonal carried by `d`
/// (a square matrix's diagonal, or a vector).
///
/// flops: `n_elems`.
pub fn diag_scale(
    d: &MatrixView<'_>,
    b: &MatrixView<'_>,
    side: Side,
    out: &mut DenseMatrix,
    c: &mut Collector,
) {
    let (rows, cols) = (b.n_rows(), b.n_cols());
    let n = d.diag_len();
    match side {
        Side::Left => assert_eq!(n, rows, "diag_scale: left length"),
        Side::Right => assert_eq!(n, cols, "diag_scale: right length"),
    }
    assert_eq!((out.n_rows(), out.n_cols()), (rows, cols), "diag_scale: output");
    c.kernel(KernelId::DiagScale.name(), (rows * cols) as u64, || {
        format!("{n} {} {}", if side == Side::Left { "left" } else { "right" }, dims(b))
    });
    let diag: Vec<f64> = (0..n).map(|i| d.diag_entry(i)).collect();
    for j in 0..cols {
        let dst = out.col_mut(j);
        match (side, b.col_slice(j)) {
            (Side::Left, Some(src)) => {
                for ((o, &x), &s) in dst.iter_mut().zip(src).zip(&diag) {
                    *o = s * x;
                }
            }
            (Side::Right, Some(src)) => {
                let s = diag[j];
                for (o, &x) in dst.iter_mut().zip(src) {
                    *o = x * s;
                }
            }
            (Side::Left, None) => {
                for (i, o) in dst.iter_mut().enumerate() {
                    *o = diag[i] * b.get(i, j);
                }
            }
            (Side::Right, None) => {
                for (i, o) in dst.iter_mut().enumerate() {
                    *o = b.get(i, j) * diag[j];
                }
            }
        }
    }
}

/// `out_diag[i] = Σ_k A(i, k) · B(k, i)`.
///
/// flops: `2 · p · q`.
pub fn diag_of_product(
    a: &MatrixView<'_>,
    b: &MatrixView<'_>,
    out_diag: &mut [f64],
    c: &mut Collector,
) {
    let (p, q) = (a.n_rows(), a.n_cols());
    assert_eq!((b.n_rows(), b.n_cols()), (q, p), "diag_of_product: shapes");
    assert_eq!(out_diag.len(), p, "diag_of_product: output length");
    c.kernel(KernelId::DiagOfProduct.name(), 2 * (p * q) as u64, || {
        format!("{} * {}", dims(a), dims(b))
    });
    partial_diagonal(a, b, out_diag);
}

fn partial_diagonal(a: &MatrixView<'_>, b: &MatrixView<'_>, out: &mut [f64]) {
    let (p, q) = (a.n_rows(), a.n_cols());
    out.fill(0.0);
    match (a.t().col_slice(0).is_some() && p > 0, b.col_slice(0).is_some() && p > 0) {
        // row i of A and column i of B both contiguous
        (true, true) => {
            let at = a.t();
            for (i, o) in out.iter_mut().enumerate() {
                let (ar, bc) = (at.col_slice(i).unwrap(), b.col_slice(i).unwrap());
                let mut acc = 0.0;
                for (&x, &y) in ar.iter().zip(bc) {
                    acc += x * y;
                }
                *o = acc;
            }
        }
        // columns of A and B contiguous: k-outer within tiles of i
        (_, true) if q > 0 && a.col_slice(0).is_some() => {
            const TILE: usize = 32;
            for i0 in (0..p).step_by(TILE) {
                let i1 = (i0 + TILE).min(p);
                let bcols: Vec<&[f64]> = (i0..i1).map(|i| b.col_slice(i).unwrap()).collect();
                for k in 0..q {
                    let acol = &a.col_slice(k).unwrap()[i0..i1];
                    for ((o, &x), bc) in out[i0..i1].iter_mut().zip(acol).zip(&bcols) {
                        *o += x * bc[k];
                    }
                }
            }
        }
        // column k of A contiguous: accumulate k-outer
        _ if q > 0 && a.col_slice(0).is_some() => {
            for k in 0..q {
                let acol = a.col_slice(k).unwrap();
                for (i, o) in out.iter_mut().enumerate() {
                    *o += acol[i] * b.get(k, i);
                }
            }
        }
        _ => {
            for (i, o) in out.iter_mut().enumerate() {
                for k in 0..q {
                    *o += a.get(i, k) * b.get(k, i);
                }
            }
        }
    }
}

/// `Σ_i Σ_k A(i, k) · B(k, i)` without forming the product.
///
/// flops: `2 · p · q`.
pub fn trace_of_product(a: &MatrixView<'_>, b: &MatrixView<'_>, c: &mut Collector) -> f64 {
    let (p, q) = (a.n_rows(), a.n_cols());
    assert_eq!((b.n_rows(), b.n_cols()), (q, p), "trace_of_product: shapes");
    c.kernel(KernelId::TraceOfProduct.name(), 2 * (p * q) as u64, || {
        format!("{} * {}", dims(a), dims(b))
    });
    let mut diag = vec![0.0; p];
    partial_diagonal(a, b, &mut diag);
    diag.iter().sum()
}

/// `Σ_i a_i · d_i · c_i` where `d` carries a diagonal (square matrix or vector).
///
/// flops: `3 · n`.
pub fn triple_diag_dot(
    a: &MatrixView<'_>,
    d: &MatrixView<'_>,
    cv: &MatrixView<'_>,
    c: &mut Collector,
) -> f64 {
    let n = a.len();
    assert!(a.is_vector() && cv.is_vector(), "triple_diag_dot: vectors");
    assert_eq!(d.diag_len(), n, "triple_diag_dot: diagonal length");
    assert_eq!(cv.len(), n, "triple_diag_dot: length");
    c.kernel(KernelId::TripleDiagDot.name(), 3 * n as u64, || format!("n={n}"));
    let mut acc = 0.0;
    for i in 0..n {
        acc += a.get_linear(i) * d.diag_entry(i) * cv.get_linear(i);
    }
    acc
}

/// Explicit transposed copy. Moves data only; reports zero flops.
pub fn transpose_copy(a: &MatrixView<'_>, out: &mut DenseMatrix, c: &mut Collector) {
    let (rows, cols) = (a.n_rows(), a.n_cols());
    assert_eq!((out.n_rows(), out.n_cols()), (cols, rows), "transpose_copy: output");
    c.kernel(KernelId::TransposeCopy.name(), 0, || dims(a));
    for j in 0..rows {
        for i in 0..cols {
            out.set(i, j, a.get(j, i));
        }
    }
}

/// Dense `n x n` matrix with the diagonal of `x` (square matrix or vector) and zeros
/// elsewhere. `out` must be zeroed by the caller. Reports zero flops.
pub fn diag_materialise(x: &MatrixView<'_>, out: &mut DenseMatrix, c: &mut Collector) {
    let n = x.diag_len();
    assert_eq!((out.n_rows(), out.n_cols()), (n, n), "diag_materialise: output");
    c.kernel(KernelId::DiagMaterialise.name(), 0, || format!("{n}x{n}"));
    for i in 0..n {
        out.set(i, i, x.diag_entry(i));
    }
}

/// Sum of the diagonal of a square operand.
///
/// flops: `n`.
pub fn trace(a: &MatrixView<'_>, c: &mut Collector) -> f64 {
    let n = a.n_rows();
    assert_eq!(a.n_cols(), n, "trace: square");
    c.kernel(KernelId::Trace.name(), n as u64, || dims(a));
    (0..n).map(|i| a.get(i, i)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn fused_examples() {
        let x = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let y = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let mut c = Collector::new();
        let mut out = DenseMatrix::zeros(2, 2);
        fused_axpby_n(&[0.4, 0.6], &[x.view(), y.view()], &mut out, &mut c);
        let expect = [3.4, 4.4, 5.4, 6.4];
        for (k, (i, j)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
            assert!((out.get(i, j) - expect[k]).abs() < 1e-15);
        }
        assert_eq!(c.counters().flops, 2 * 4 * 2);

        fused_axpby_n(&[1.0], &[x.view()], &mut out, &mut c);
        assert_eq!(out, x);

        fused_axpby_n(&[1.0, -1.0], &[x.view(), x.view()], &mut out, &mut c);
        assert_eq!(out, DenseMatrix::zeros(2, 2));

        // three terms and non-contiguous sources take the other paths
        fused_axpby_n(
            &[1.0, 2.0, 3.0],
            &[x.view(), y.view(), x.view()],
            &mut out,
            &mut c,
        );
        assert_eq!(out.get(1, 0), 3.0 + 14.0 + 9.0);
        fused_axpby_n(&[1.0, 1.0], &[x.view().t(), y.view()], &mut out, &mut c);
        assert_eq!(out.get(0, 1), 3.0 + 6.0);
    }

    #[test]
    #[should_panic(expected = "fused_axpby_n: shape")]
    fn fused_contract() {
        let x = DenseMatrix::zeros(2, 2);
        let mut out = DenseMatrix::zeros(2, 3);
        fused_axpby_n(&[1.0], &[x.view()], &mut out, &mut Collector::new());
    }

    #[test]
    fn gemm_examples() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let mut out = DenseMatrix::zeros(2, 2);
        let mut c = Collector::new();
        gemm(&a.view(), &b.view(), false, false, &mut out, &mut c);
        assert_eq!(out, m(&[&[19.0, 22.0], &[43.0, 50.0]]));
        assert_eq!(c.counters().flops, 16);

        gemm(&a.view(), &DenseMatrix::identity(2).view(), false, false, &mut out, &mut c);
        assert_eq!(out, a);

        // Aᵀ·B through the dot-product path
        gemm(&a.view(), &b.view(), true, false, &mut out, &mut c);
        assert_eq!(out, m(&[&[26.0, 30.0], &[38.0, 44.0]]));
    }

    #[test]
    #[should_panic(expected = "gemm: inner dimensions")]
    fn gemm_contract() {
        let a = DenseMatrix::zeros(2, 3);
        let mut out = DenseMatrix::zeros(2, 2);
        gemm(&a.view(), &a.view(), false, false, &mut out, &mut Collector::new());
    }

    #[test]
    fn gemv_matches_gemm() {
        let a = DenseMatrix::random(5, 4, 3);
        let x = DenseMatrix::random(4, 1, 4);
        let (mut o1, mut o2) = (DenseMatrix::zeros(5, 1), DenseMatrix::zeros(5, 1));
        let mut c = Collector::new();
        gemv(&a.view(), &x.view(), false, &mut o1, &mut c);
        gemm(&a.view(), &x.view(), false, false, &mut o2, &mut c);
        assert_eq!(o1, o2);
        assert_eq!(c.counters().flops, 2 * 2 * 5 * 4);
    }

    #[test]
    fn syrk_examples() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let mut out = DenseMatrix::zeros(2, 2);
        let mut c = Collector::new();
        syrk(&a.view(), &mut out, &mut c);
        assert_eq!(out, m(&[&[5.0, 11.0], &[11.0, 25.0]]));
        assert_eq!(c.counters().flops, 2 * 3 * 2);

        syrk(&DenseMatrix::zeros(2, 2).view(), &mut out, &mut c);
        assert_eq!(out, DenseMatrix::zeros(2, 2));

        // Aᵀ·A
        syrk(&a.view().t(), &mut out, &mut c);
        assert_eq!(out, m(&[&[10.0, 14.0], &[14.0, 20.0]]));
    }

    #[test]
    fn diag_scale_examples() {
        let d = m(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let mut out = DenseMatrix::zeros(2, 2);
        let mut c = Collector::new();
        diag_scale(&d.view(), &b.view(), Side::Left, &mut out, &mut c);
        assert_eq!(out, m(&[&[5.0, 6.0], &[14.0, 16.0]]));
        assert_eq!(c.counters().flops, 4);

        let ones = DenseMatrix::from_col_major(2, 1, vec![1.0, 1.0]).unwrap();
        diag_scale(&ones.view(), &b.view(), Side::Left, &mut out, &mut c);
        assert_eq!(out, b);

        let dv = DenseMatrix::from_col_major(1, 2, vec![3.0, 4.0]).unwrap();
        diag_scale(&dv.view(), &DenseMatrix::identity(2).view(), Side::Right, &mut out, &mut c);
        assert_eq!(out, m(&[&[3.0, 0.0], &[0.0, 4.0]]));
    }

    #[test]
    fn partial_products() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let mut c = Collector::new();
        let mut d = [0.0; 2];
        diag_of_product(&a.view(), &b.view(), &mut d, &mut c);
        assert_eq!(d, [19.0, 50.0]);
        assert_eq!(trace_of_product(&a.view(), &b.view(), &mut c), 69.0);
        assert_eq!(c.counters().flops, 16);

        let i2 = DenseMatrix::identity(2);
        diag_of_product(&i2.view(), &b.view(), &mut d, &mut c);
        assert_eq!(d, [5.0, 8.0]);
        assert_eq!(trace_of_product(&i2.view(), &b.view(), &mut c), 13.0);
    }

    #[test]
    fn partial_product_counts_at_100() {
        let a = DenseMatrix::random(100, 100, 1);
        let mut c = Collector::new();
        let mut d = vec![0.0; 100];
        diag_of_product(&a.view(), &a.view(), &mut d, &mut c);
        assert_eq!(c.counters().flops, 20_000);
    }

    #[test]
    fn triple_dot_examples() {
        let a = DenseMatrix::from_col_major(2, 1, vec![1.0, 2.0]).unwrap();
        let b = m(&[&[3.0, 9.0], &[9.0, 4.0]]);
        let cv = DenseMatrix::from_col_major(2, 1, vec![5.0, 6.0]).unwrap();
        let mut c = Collector::new();
        assert_eq!(triple_diag_dot(&a.view(), &b.view(), &cv.view(), &mut c), 63.0);
        assert_eq!(c.counters().flops, 6);

        let e1 = DenseMatrix::from_col_major(3, 1, vec![1.0, 0.0, 0.0]).unwrap();
        let i3 = DenseMatrix::identity(3);
        assert_eq!(triple_diag_dot(&e1.view(), &i3.view(), &e1.view(), &mut c), 1.0);
        let z = DenseMatrix::zeros(3, 1);
        assert_eq!(triple_diag_dot(&z.view(), &i3.view(), &z.view(), &mut c), 0.0);
    }

    #[test]
    fn data_movement_kernels() {
        let a = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let mut out = DenseMatrix::zeros(3, 2);
        let mut c = Collector::new();
        transpose_copy(&a.view(), &mut out, &mut c);
        assert_eq!(out, m(&[&[1.0, 4.0], &[2.0, 5.0], &[3.0, 6.0]]));

        let v = DenseMatrix::from_col_major(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let mut d = DenseMatrix::zeros(3, 3);
        diag_materialise(&v.view(), &mut d, &mut c);
        assert_eq!(d, m(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 3.0]]));
        assert_eq!(trace(&d.view(), &mut c), 6.0);
        assert_eq!(c.counters().flops, 3);
    }
}
