use super::{dims, KernelId};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, MatrixView};
use crate::trace::Collector;

/// Packed `PA = LU` factorisation: unit-lower `L` below the diagonal, `U` on and above.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    pivots: Vec<usize>,
}

impl LuFactors {
    pub fn packed(&self) -> &DenseMatrix {
        &self.lu
    }

    /// `pivots[k]` is the row swapped with row `k` at step `k`.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn lower(&self) -> DenseMatrix {
        let n = self.lu.n_rows();
        let mut l = DenseMatrix::identity(n);
        for j in 0..n {
            for i in j + 1..n {
                l.set(i, j, self.lu.get(i, j));
            }
        }
        l
    }

    pub fn upper(&self) -> DenseMatrix {
        let n = self.lu.n_rows();
        let mut u = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                u.set(i, j, self.lu.get(i, j));
            }
        }
        u
    }

    /// Row order of `P·A` as indices into `A`.
    pub fn permutation(&self) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..self.pivots.len()).collect();
        for (k, &p) in self.pivots.iter().enumerate() {
            perm.swap(k, p);
        }
        perm
    }

    /// Overwrite `x` with `A⁻¹ x`.
    fn substitute(&self, x: &mut [f64]) {
        let n = self.lu.n_rows();
        for (k, &p) in self.pivots.iter().enumerate() {
            if p != k {
                x.swap(k, p);
            }
        }
        for j in 0..n {
            let xj = x[j];
            let col = self.lu.col(j);
            for i in j + 1..n {
                x[i] -= col[i] * xj;
            }
        }
        for j in (0..n).rev() {
            let col = self.lu.col(j);
            x[j] /= col[j];
            let xj = x[j];
            for i in 0..j {
                x[i] -= col[i] * xj;
            }
        }
    }

    fn release(self, c: &mut Collector) {
        c.release(self.lu);
    }
}

fn lu_factor_flops(n: usize) -> u64 {
    (2 * n * n * n / 3) as u64
}

/// Right-looking LU with partial pivoting. A pivot of exactly zero is singular.
///
/// flops: `2n³/3` (integer division).
pub fn lu_factor(a: &MatrixView<'_>, c: &mut Collector) -> Result<LuFactors> {
    let n = a.n_rows();
    assert_eq!(a.n_cols(), n, "lu_factor: square");
    c.kernel(KernelId::LuFactor.name(), lu_factor_flops(n), || dims(a));
    let mut lu = c.acquire(n, n);
    for j in 0..n {
        match a.col_slice(j) {
            Some(src) => lu.col_mut(j).copy_from_slice(src),
            None => {
                for i in 0..n {
                    lu.set(i, j, a.get(i, j));
                }
            }
        }
    }
    let mut pivots = Vec::with_capacity(n);
    for k in 0..n {
        let col = lu.col(k);
        let mut p = k;
        let mut best = col[k].abs();
        for (i, v) in col.iter().enumerate().skip(k + 1) {
            if v.abs() > best {
                best = v.abs();
                p = i;
            }
        }
        if best == 0.0 {
            c.release(lu);
            return Err(Error::Singular { column: k });
        }
        pivots.push(p);
        if p != k {
            for j in 0..n {
                let col = lu.col_mut(j);
                col.swap(k, p);
            }
        }
        let pivot = lu.get(k, k);
        for v in &mut lu.col_mut(k)[k + 1..] {
            *v /= pivot;
        }
        let data = lu.as_mut_slice();
        let (left, right) = data.split_at_mut((k + 1) * n);
        let lcol = &left[k * n + k + 1..k * n + n];
        for j in k + 1..n {
            let col = &mut right[(j - k - 1) * n..(j - k) * n];
            let f = col[k];
            for (x, &l) in col[k + 1..].iter_mut().zip(lcol) {
                *x -= l * f;
            }
        }
    }
    Ok(LuFactors { lu, pivots })
}

fn copy_rhs(b: &MatrixView<'_>, x: &mut DenseMatrix) {
    for j in 0..b.n_cols() {
        match b.col_slice(j) {
            Some(src) => x.col_mut(j).copy_from_slice(src),
            None => {
                for i in 0..b.n_rows() {
                    x.set(i, j, b.get(i, j));
                }
            }
        }
    }
}

/// Solve `A X = B` through [`lu_factor`] and forward/back substitution.
///
/// flops: `lu_factor` plus `2 · n² · k` for the substitutions.
pub fn lu_solve(a: &MatrixView<'_>, b: &MatrixView<'_>, c: &mut Collector) -> Result<DenseMatrix> {
    let (n, k) = (a.n_rows(), b.n_cols());
    assert_eq!(b.n_rows(), n, "lu_solve: rhs rows");
    let factors = lu_factor(a, c)?;
    c.kernel(KernelId::LuSolve.name(), (2 * n * n * k) as u64, || {
        format!("{} \\ {}", dims(a), dims(b))
    });
    let mut x = c.acquire(n, k);
    copy_rhs(b, &mut x);
    for j in 0..k {
        factors.substitute(x.col_mut(j));
    }
    factors.release(c);
    Ok(x)
}

/// `A⁻¹` via [`lu_factor`] and substitution against the identity.
///
/// flops: `lu_factor` plus `2 · n³`.
pub fn explicit_inverse(a: &MatrixView<'_>, c: &mut Collector) -> Result<DenseMatrix> {
    let n = a.n_rows();
    let factors = lu_factor(a, c)?;
    c.kernel(KernelId::ExplicitInverse.name(), (2 * n * n * n) as u64, || dims(a));
    let mut x = c.acquire(n, n);
    for j in 0..n {
        x.set(j, j, 1.0);
        factors.substitute(x.col_mut(j));
    }
    factors.release(c);
    Ok(x)
}

/// Back (`upper`) or forward substitution. A zero diagonal entry is singular.
///
/// flops: `n² · k`.
pub fn triangular_solve(
    a: &MatrixView<'_>,
    b: &MatrixView<'_>,
    upper: bool,
    c: &mut Collector,
) -> Result<DenseMatrix> {
    let (n, k) = (a.n_rows(), b.n_cols());
    assert_eq!(a.n_cols(), n, "triangular_solve: square");
    assert_eq!(b.n_rows(), n, "triangular_solve: rhs rows");
    c.kernel(KernelId::TriangularSolve.name(), (n * n * k) as u64, || {
        format!("{} \\ {}, {}", dims(a), dims(b), if upper { "upper" } else { "lower" })
    });
    if let Some(column) = (0..n).find(|&i| a.get(i, i) == 0.0) {
        return Err(Error::Singular { column });
    }
    let mut x = c.acquire(n, k);
    copy_rhs(b, &mut x);
    for r in 0..k {
        let xs = x.col_mut(r);
        if upper {
            for j in (0..n).rev() {
                xs[j] /= a.get(j, j);
                let xj = xs[j];
                match a.col_slice(j) {
                    Some(col) => {
                        for (x, &u) in xs[..j].iter_mut().zip(col) {
                            *x -= u * xj;
                        }
                    }
                    None => {
                        for (i, x) in xs[..j].iter_mut().enumerate() {
                            *x -= a.get(i, j) * xj;
                        }
                    }
                }
            }
        } else {
            for j in 0..n {
                xs[j] /= a.get(j, j);
                let xj = xs[j];
                match a.col_slice(j) {
                    Some(col) => {
                        for (x, &l) in xs[j + 1..].iter_mut().zip(&col[j + 1..]) {
                            *x -= l * xj;
                        }
                    }
                    None => {
                        for (i, x) in xs.iter_mut().enumerate().skip(j + 1) {
                            *x -= a.get(i, j) * xj;
                        }
                    }
                }
            }
        }
    }
    Ok(x)
}

/// Nominal flop count of [`band_solve`].
pub fn band_solve_flops(n: usize, kl: usize, ku: usize, k: usize) -> u64 {
    (2 * n * kl * (kl + ku + 1) + 2 * n * (2 * kl + ku + 1) * k) as u64
}

/// Banded LU with partial pivoting.
///
/// Band storage holds `2·kl + ku + 1` rows per column: the `kl` top rows take the
/// fill-in created by row interchanges, and `A(i, j)` sits at row `kl + ku + i - j`
/// of column `j`. Elements of `A` outside the stated bandwidths are ignored.
///
/// flops: `2·n·kl·(kl + ku + 1) + 2·n·(2·kl + ku + 1)·k`.
pub fn band_solve(
    a: &MatrixView<'_>,
    b: &MatrixView<'_>,
    kl: usize,
    ku: usize,
    c: &mut Collector,
) -> Result<DenseMatrix> {
    let (n, k) = (a.n_rows(), b.n_cols());
    assert_eq!(a.n_cols(), n, "band_solve: square");
    assert_eq!(b.n_rows(), n, "band_solve: rhs rows");
    c.kernel(KernelId::BandSolve.name(), band_solve_flops(n, kl, ku, k), || {
        format!("{} \\ {}, kl={kl}, ku={ku}", dims(a), dims(b))
    });
    let ldab = 2 * kl + ku + 1;
    let kv = kl + ku;
    let mut ab = c.acquire(ldab, n);
    for j in 0..n {
        let lo = j.saturating_sub(ku);
        let hi = (j + kl).min(n.saturating_sub(1));
        for i in lo..=hi {
            ab.set(kv + i - j, j, a.get(i, j));
        }
    }
    let at = |r: usize, col: usize| kv + r - col + col * ldab;

    let mut pivots = Vec::with_capacity(n);
    let mut ju = 0usize;
    {
        let d = ab.as_mut_slice();
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = d[at(j, j)].abs();
            for t in 1..=km {
                let v = d[at(j + t, j)].abs();
                if v > best {
                    best = v;
                    jp = t;
                }
            }
            if best == 0.0 {
                c.release(ab);
                return Err(Error::Singular { column: j });
            }
            pivots.push(j + jp);
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for col in j..=ju {
                    d.swap(at(j, col), at(j + jp, col));
                }
            }
            if km > 0 {
                let pivot = d[at(j, j)];
                for t in 1..=km {
                    d[at(j + t, j)] /= pivot;
                }
                for col in j + 1..=ju {
                    let f = d[at(j, col)];
                    for t in 1..=km {
                        let l = d[at(j + t, j)];
                        d[at(j + t, col)] -= l * f;
                    }
                }
            }
        }
    }

    let mut x = c.acquire(n, k);
    copy_rhs(b, &mut x);
    let d = ab.as_slice();
    for r in 0..k {
        let xs = x.col_mut(r);
        for j in 0..n {
            let lm = kl.min(n - 1 - j);
            let p = pivots[j];
            if p != j {
                xs.swap(p, j);
            }
            let xj = xs[j];
            for t in 1..=lm {
                xs[j + t] -= d[at(j + t, j)] * xj;
            }
        }
        for j in (0..n).rev() {
            xs[j] /= d[at(j, j)];
            let xj = xs[j];
            for i in j.saturating_sub(kv)..j {
                xs[i] -= d[at(i, j)] * xj;
            }
        }
    }
    c.release(ab);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    fn col(v: &[f64]) -> DenseMatrix {
        DenseMatrix::from_col_major(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn lu_identity() {
        let f = lu_factor(&DenseMatrix::identity(3).view(), &mut Collector::new()).unwrap();
        assert_eq!(*f.packed(), DenseMatrix::identity(3));
        assert_eq!(f.pivots(), &[0, 1, 2]);
    }

    #[test]
    fn lu_swap() {
        let a = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let f = lu_factor(&a.view(), &mut Collector::new()).unwrap();
        assert_eq!(f.pivots(), &[1, 1]);
        assert_eq!(f.permutation(), vec![1, 0]);
        assert_eq!(f.lower(), DenseMatrix::identity(2));
        assert_eq!(f.upper(), DenseMatrix::identity(2));
    }

    #[test]
    fn lu_singular_column() {
        let a = m(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], &[1.0, 0.0, 1.0]]);
        let traced = crate::trace::with_trace(|c| lu_factor(&a.view(), c).map(|_| ()));
        assert_eq!(traced.result, Err(Error::Singular { column: 2 }));
        let allocs = traced.events.iter().filter(|e| e.kind == crate::trace::EventKind::Alloc).count();
        let frees = traced.events.iter().filter(|e| e.kind == crate::trace::EventKind::Free).count();
        assert_eq!(allocs, frees);
    }

    #[test]
    fn diagonal_system() {
        let a = m(&[&[2.0, 0.0], &[0.0, 4.0]]);
        let x = lu_solve(&a.view(), &col(&[2.0, 8.0]).view(), &mut Collector::new()).unwrap();
        assert_eq!(x, col(&[1.0, 2.0]));
        let inv = explicit_inverse(&a.view(), &mut Collector::new()).unwrap();
        assert_eq!(inv, m(&[&[0.5, 0.0], &[0.0, 0.25]]));
        assert_eq!(
            explicit_inverse(&DenseMatrix::identity(4).view(), &mut Collector::new()).unwrap(),
            DenseMatrix::identity(4)
        );
    }

    #[test]
    fn flop_formulas() {
        let a = DenseMatrix::random(6, 6, 1);
        let b = DenseMatrix::random(6, 2, 2);
        let mut c = Collector::new();
        lu_factor(&a.view(), &mut c).unwrap();
        assert_eq!(c.counters().flops, 2 * 216 / 3);
        c.reset();
        lu_solve(&a.view(), &b.view(), &mut c).unwrap();
        assert_eq!(c.counters().flops, 144 + 2 * 36 * 2);
        assert_eq!(c.counters().kernel_calls, 2);
        c.reset();
        explicit_inverse(&a.view(), &mut c).unwrap();
        assert_eq!(c.counters().flops, 144 + 2 * 216);
        c.reset();
        triangular_solve(&DenseMatrix::identity(6).view(), &b.view(), true, &mut c).unwrap();
        assert_eq!(c.counters().flops, 36 * 2);
        c.reset();
        band_solve(&DenseMatrix::identity(6).view(), &b.view(), 1, 2, &mut c).unwrap();
        assert_eq!(c.counters().flops, band_solve_flops(6, 1, 2, 2));
        assert_eq!(band_solve_flops(6, 1, 2, 2), (2 * 6 * 4 + 2 * 6 * 5 * 2) as u64);
    }

    #[test]
    fn unit_bidiagonal_by_hand() {
        // [1 2; 0 1] x = [5; 1]  =>  x = [3; 1]
        let u = m(&[&[1.0, 2.0], &[0.0, 1.0]]);
        let x = triangular_solve(&u.view(), &col(&[5.0, 1.0]).view(), true, &mut Collector::new())
            .unwrap();
        assert_eq!(x, col(&[3.0, 1.0]));
        // [1 0; 2 1] x = [1; 5]  =>  x = [1; 3]
        let l = m(&[&[1.0, 0.0], &[2.0, 1.0]]);
        let x = triangular_solve(&l.view(), &col(&[1.0, 5.0]).view(), false, &mut Collector::new())
            .unwrap();
        assert_eq!(x, col(&[1.0, 3.0]));
    }

    #[test]
    fn triangular_zero_diagonal() {
        let u = m(&[&[1.0, 2.0], &[0.0, 0.0]]);
        assert_eq!(
            triangular_solve(&u.view(), &col(&[1.0, 1.0]).view(), true, &mut Collector::new()),
            Err(Error::Singular { column: 1 })
        );
    }

    #[test]
    fn band_diagonal_only() {
        let a = m(&[&[2.0, 0.0, 0.0], &[0.0, 4.0, 0.0], &[0.0, 0.0, 8.0]]);
        let x = band_solve(&a.view(), &col(&[2.0, 2.0, 2.0]).view(), 0, 0, &mut Collector::new())
            .unwrap();
        assert_eq!(x, col(&[1.0, 0.5, 0.25]));
    }

    #[test]
    fn band_needs_pivoting() {
        // leading zero forces a row interchange inside the band
        let a = m(&[
            &[0.0, 1.0, 0.0, 0.0],
            &[1.0, 1.0, 1.0, 0.0],
            &[0.0, 1.0, 3.0, 1.0],
            &[0.0, 0.0, 1.0, 4.0],
        ]);
        let b = col(&[1.0, 2.0, 3.0, 4.0]);
        let mut c = Collector::new();
        let xb = band_solve(&a.view(), &b.view(), 1, 1, &mut c).unwrap();
        let xd = lu_solve(&a.view(), &b.view(), &mut c).unwrap();
        for i in 0..4 {
            assert!((xb.get(i, 0) - xd.get(i, 0)).abs() <= 1e-12 * xd.get(i, 0).abs().max(1.0));
        }
    }

    #[test]
    fn band_singular() {
        let a = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(
            band_solve(&a.view(), &col(&[1.0, 1.0]).view(), 1, 1, &mut Collector::new()),
            Err(Error::Singular { column: 1 })
        );
    }
}
