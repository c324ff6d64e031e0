//! Reference evaluator: one kernel call and one temporary per non-leaf node,
//! in tree order, with no rewriting.

use crate::error::Result;
use crate::expr::Expr;
use crate::kernels;
use crate::matrix::{DenseMatrix, MatrixView};
use crate::plan::Value;
use crate::trace::Collector;

enum Held<'a> {
    Leaf(&'a DenseMatrix),
    Temp(DenseMatrix),
}

impl Held<'_> {
    fn view(&self) -> MatrixView<'_> {
        match self {
            Held::Leaf(m) => m.view(),
            Held::Temp(m) => m.view(),
        }
    }

    fn release(self, c: &mut Collector) {
        if let Held::Temp(m) = self {
            c.release(m);
        }
    }
}

/// Evaluate `expr` literally. Used as the oracle for the rewritten path.
pub fn naive_evaluate(expr: &Expr<'_>, c: &mut Collector) -> Result<Value> {
    let shape = expr.validate()?;
    let result = match eval(expr, c)? {
        Held::Temp(m) => m,
        Held::Leaf(m) => copy(&m.view(), c),
    };
    Ok(if shape.is_scalar {
        Value::Scalar(result.get(0, 0))
    } else {
        Value::Matrix(result)
    })
}

fn copy(v: &MatrixView<'_>, c: &mut Collector) -> DenseMatrix {
    let mut out = c.acquire(v.n_rows(), v.n_cols());
    kernels::fused_axpby_n(&[1.0], &[*v], &mut out, c);
    out
}

fn fused<'a>(coeffs: &[f64], args: Vec<Held<'a>>, c: &mut Collector) -> Held<'a> {
    let views: Vec<MatrixView<'_>> = args.iter().map(Held::view).collect();
    let mut out = c.acquire(views[0].n_rows(), views[0].n_cols());
    kernels::fused_axpby_n(coeffs, &views, &mut out, c);
    drop(views);
    for a in args {
        a.release(c);
    }
    Held::Temp(out)
}

fn eval<'a>(e: &Expr<'a>, c: &mut Collector) -> Result<Held<'a>> {
    Ok(match e {
        Expr::Leaf(m) => Held::Leaf(m),
        Expr::ScalarMul(s, x) => {
            let x = eval(x, c)?;
            fused(&[*s], vec![x], c)
        }
        Expr::Add(l, r) => {
            let (l, r) = (eval(l, c)?, eval(r, c)?);
            fused(&[1.0, 1.0], vec![l, r], c)
        }
        Expr::Sub(l, r) => {
            let (l, r) = (eval(l, c)?, eval(r, c)?);
            fused(&[1.0, -1.0], vec![l, r], c)
        }
        Expr::Transpose(x) => {
            let x = eval(x, c)?;
            let v = x.view();
            let mut out = c.acquire(v.n_cols(), v.n_rows());
            kernels::transpose_copy(&v, &mut out, c);
            x.release(c);
            Held::Temp(out)
        }
        Expr::Inverse(x) => {
            let x = eval(x, c)?;
            let out = kernels::explicit_inverse(&x.view(), c);
            x.release(c);
            Held::Temp(out?)
        }
        Expr::DiagMat(x) => {
            let x = eval(x, c)?;
            let v = x.view();
            let n = if v.n_rows() == v.n_cols() {
                v.n_rows()
            } else {
                v.len()
            };
            let mut out = c.acquire(n, n);
            kernels::diag_materialise(&v, &mut out, c);
            x.release(c);
            Held::Temp(out)
        }
        Expr::MatMul(l, r) => {
            let (l, r) = (eval(l, c)?, eval(r, c)?);
            let (a, b) = (l.view(), r.view());
            let mut out = c.acquire(a.n_rows(), b.n_cols());
            if b.n_cols() == 1 {
                kernels::gemv(&a, &b, false, &mut out, c);
            } else {
                kernels::gemm(&a, &b, false, false, &mut out, c);
            }
            l.release(c);
            r.release(c);
            Held::Temp(out)
        }
        Expr::Solve(a, b) => {
            let (a, b) = (eval(a, c)?, eval(b, c)?);
            let out = kernels::lu_solve(&a.view(), &b.view(), c);
            a.release(c);
            b.release(c);
            Held::Temp(out?)
        }
        Expr::Trace(x) => {
            let x = eval(x, c)?;
            let mut out = c.acquire(1, 1);
            let t = kernels::trace(&x.view(), c);
            out.set(0, 0, t);
            x.release(c);
            Held::Temp(out)
        }
        Expr::AsScalar(x) => {
            let x = eval(x, c)?;
            fused(&[1.0], vec![x], c)
        }
        Expr::ColView(x, j) => {
            let x = eval(x, c)?;
            let out = copy(&x.view().col_view(*j)?, c);
            x.release(c);
            Held::Temp(out)
        }
        Expr::RowView(x, i) => {
            let x = eval(x, c)?;
            let out = copy(&x.view().row_view(*i)?, c);
            x.release(c);
            Held::Temp(out)
        }
    })
}
