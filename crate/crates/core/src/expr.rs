//! Delayed-evaluation expression trees.
//!
//! Building an [`Expr`] never evaluates anything and never copies matrix data:
//! leaves borrow their matrices. Shapes are only checked when the tree is
//! validated, which happens as part of evaluation.

use std::fmt;
use std::ops;

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, MatrixId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Leaf,
    ScalarMul,
    Add,
    Sub,
    Transpose,
    Inverse,
    DiagMat,
    MatMul,
    Solve,
    Trace,
    AsScalar,
    ColView,
    RowView,
}

impl NodeKind {
    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Leaf => "Leaf",
            NodeKind::ScalarMul => "ScalarMul",
            NodeKind::Add => "Add",
            NodeKind::Sub => "Sub",
            NodeKind::Transpose => "Transpose",
            NodeKind::Inverse => "Inverse",
            NodeKind::DiagMat => "DiagMat",
            NodeKind::MatMul => "MatMul",
            NodeKind::Solve => "Solve",
            NodeKind::Trace => "Trace",
            NodeKind::AsScalar => "AsScalar",
            NodeKind::ColView => "ColView",
            NodeKind::RowView => "RowView",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            NodeKind::Leaf => 0,
            NodeKind::Add | NodeKind::Sub | NodeKind::MatMul | NodeKind::Solve => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub n_rows: usize,
    pub n_cols: usize,
    pub is_scalar: bool,
}

impl Shape {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Shape {
            n_rows,
            n_cols,
            is_scalar: false,
        }
    }

    pub fn scalar() -> Self {
        Shape {
            n_rows: 1,
            n_cols: 1,
            is_scalar: true,
        }
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn is_vector(&self) -> bool {
        self.n_rows == 1 || self.n_cols == 1
    }

    pub fn len(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn same_dims(&self, other: &Shape) -> bool {
        self.n_rows == other.n_rows && self.n_cols == other.n_cols
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_scalar {
            f.write_str("scalar")
        } else {
            write!(f, "{}x{}", self.n_rows, self.n_cols)
        }
    }
}

/// A node of the expression tree. Leaves borrow their matrix for `'a`.
#[derive(Clone)]
pub enum Expr<'a> {
    Leaf(&'a DenseMatrix),
    ScalarMul(f64, Box<Expr<'a>>),
    Add(Box<Expr<'a>>, Box<Expr<'a>>),
    Sub(Box<Expr<'a>>, Box<Expr<'a>>),
    Transpose(Box<Expr<'a>>),
    Inverse(Box<Expr<'a>>),
    DiagMat(Box<Expr<'a>>),
    MatMul(Box<Expr<'a>>, Box<Expr<'a>>),
    Solve(Box<Expr<'a>>, Box<Expr<'a>>),
    Trace(Box<Expr<'a>>),
    AsScalar(Box<Expr<'a>>),
    ColView(Box<Expr<'a>>, usize),
    RowView(Box<Expr<'a>>, usize),
}

impl<'a> Expr<'a> {
    pub fn leaf(m: &'a DenseMatrix) -> Self {
        Expr::Leaf(m)
    }

    pub fn kind(&self) -> NodeKind {
        match self {
            Expr::Leaf(_) => NodeKind::Leaf,
            Expr::ScalarMul(..) => NodeKind::ScalarMul,
            Expr::Add(..) => NodeKind::Add,
            Expr::Sub(..) => NodeKind::Sub,
            Expr::Transpose(_) => NodeKind::Transpose,
            Expr::Inverse(_) => NodeKind::Inverse,
            Expr::DiagMat(_) => NodeKind::DiagMat,
            Expr::MatMul(..) => NodeKind::MatMul,
            Expr::Solve(..) => NodeKind::Solve,
            Expr::Trace(_) => NodeKind::Trace,
            Expr::AsScalar(_) => NodeKind::AsScalar,
            Expr::ColView(..) => NodeKind::ColView,
            Expr::RowView(..) => NodeKind::RowView,
        }
    }

    pub fn children(&self) -> Vec<&Expr<'a>> {
        match self {
            Expr::Leaf(_) => vec![],
            Expr::ScalarMul(_, x)
            | Expr::Transpose(x)
            | Expr::Inverse(x)
            | Expr::DiagMat(x)
            | Expr::Trace(x)
            | Expr::AsScalar(x)
            | Expr::ColView(x, _)
            | Expr::RowView(x, _) => vec![x],
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::MatMul(l, r) | Expr::Solve(l, r) => {
                vec![l, r]
            }
        }
    }

    /// Storage id of a leaf.
    pub fn leaf_id(&self) -> Option<MatrixId> {
        match self {
            Expr::Leaf(m) => Some(m.id()),
            _ => None,
        }
    }

    pub fn t(self) -> Self {
        Expr::Transpose(Box::new(self))
    }

    pub fn col(self, j: usize) -> Self {
        Expr::ColView(Box::new(self), j)
    }

    pub fn row(self, i: usize) -> Self {
        Expr::RowView(Box::new(self), i)
    }

    pub fn scale(self, s: f64) -> Self {
        Expr::ScalarMul(s, Box::new(self))
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Bottom-up shape computation.
    pub fn infer_shape(&self) -> Result<Shape> {
        let kind = self.kind();
        let child = |x: &Expr<'a>, idx: usize| x.infer_shape().map_err(|e| e.under(idx));
        match self {
            Expr::Leaf(m) => Ok(Shape::new(m.n_rows(), m.n_cols())),
            Expr::ScalarMul(_, x) => child(x, 0),
            Expr::Add(l, r) | Expr::Sub(l, r) => {
                let (a, b) = (child(l, 0)?, child(r, 1)?);
                if a.same_dims(&b) {
                    Ok(Shape {
                        is_scalar: a.is_scalar && b.is_scalar,
                        ..a
                    })
                } else {
                    Err(Error::shapes(kind, a, b))
                }
            }
            Expr::Transpose(x) => {
                let s = child(x, 0)?;
                Ok(Shape {
                    n_rows: s.n_cols,
                    n_cols: s.n_rows,
                    is_scalar: s.is_scalar,
                })
            }
            Expr::Inverse(x) => {
                let s = child(x, 0)?;
                if s.is_square() {
                    Ok(Shape::new(s.n_rows, s.n_cols))
                } else {
                    Err(Error::conformance(
                        kind,
                        format!("inverse of non-square {s}"),
                    ))
                }
            }
            Expr::DiagMat(x) => {
                let s = child(x, 0)?;
                if s.is_square() {
                    Ok(Shape::new(s.n_rows, s.n_rows))
                } else if s.is_vector() {
                    Ok(Shape::new(s.len(), s.len()))
                } else {
                    Err(Error::conformance(
                        kind,
                        format!("diagmat of {s}: neither square nor a vector"),
                    ))
                }
            }
            Expr::MatMul(l, r) => {
                let (a, b) = (child(l, 0)?, child(r, 1)?);
                if a.n_cols == b.n_rows {
                    Ok(Shape::new(a.n_rows, b.n_cols))
                } else {
                    Err(Error::shapes(kind, a, b))
                }
            }
            Expr::Solve(l, r) => {
                let (a, b) = (child(l, 0)?, child(r, 1)?);
                if a.is_square() && a.n_rows == b.n_rows {
                    Ok(Shape::new(a.n_rows, b.n_cols))
                } else {
                    Err(Error::shapes(kind, a, b))
                }
            }
            Expr::Trace(x) => {
                let s = child(x, 0)?;
                if s.is_square() {
                    Ok(Shape::scalar())
                } else {
                    Err(Error::conformance(kind, format!("trace of non-square {s}")))
                }
            }
            Expr::AsScalar(x) => {
                let s = child(x, 0)?;
                if s.n_rows == 1 && s.n_cols == 1 {
                    Ok(Shape::scalar())
                } else {
                    Err(Error::conformance(kind, format!("as_scalar of {s}")))
                }
            }
            Expr::ColView(x, j) => {
                let s = child(x, 0)?;
                if *j < s.n_cols {
                    Ok(Shape::new(s.n_rows, 1))
                } else {
                    Err(Error::conformance(
                        kind,
                        format!("column {j} out of range for {s}"),
                    ))
                }
            }
            Expr::RowView(x, i) => {
                let s = child(x, 0)?;
                if *i < s.n_rows {
                    Ok(Shape::new(1, s.n_cols))
                } else {
                    Err(Error::conformance(
                        kind,
                        format!("row {i} out of range for {s}"),
                    ))
                }
            }
        }
    }

    /// Checks every subtree; the error carries the path of the first failure.
    pub fn validate(&self) -> Result<Shape> {
        self.infer_shape()
    }
}

impl fmt::Display for Expr<'_> {
    /// Canonical rendering, e.g. `Add(ScalarMul(0.4,Leaf#1),ScalarMul(0.6,Leaf#2))`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Leaf(m) => write!(f, "Leaf#{}", m.id()),
            Expr::ScalarMul(s, x) => write!(f, "ScalarMul({s},{x})"),
            Expr::ColView(x, j) => write!(f, "ColView({j},{x})"),
            Expr::RowView(x, i) => write!(f, "RowView({i},{x})"),
            other => {
                write!(f, "{}(", other.kind())?;
                for (k, c) in other.children().into_iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Expr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub fn inv<'a>(x: impl Into<Expr<'a>>) -> Expr<'a> {
    Expr::Inverse(Box::new(x.into()))
}

pub fn diagmat<'a>(x: impl Into<Expr<'a>>) -> Expr<'a> {
    Expr::DiagMat(Box::new(x.into()))
}

pub fn trace<'a>(x: impl Into<Expr<'a>>) -> Expr<'a> {
    Expr::Trace(Box::new(x.into()))
}

pub fn as_scalar<'a>(x: impl Into<Expr<'a>>) -> Expr<'a> {
    Expr::AsScalar(Box::new(x.into()))
}

pub fn solve<'a>(a: impl Into<Expr<'a>>, b: impl Into<Expr<'a>>) -> Expr<'a> {
    Expr::Solve(Box::new(a.into()), Box::new(b.into()))
}

pub fn t<'a>(x: impl Into<Expr<'a>>) -> Expr<'a> {
    x.into().t()
}

impl<'a> From<&'a DenseMatrix> for Expr<'a> {
    fn from(m: &'a DenseMatrix) -> Self {
        Expr::Leaf(m)
    }
}

impl DenseMatrix {
    /// Start a delayed expression with this matrix as a leaf.
    pub fn expr(&self) -> Expr<'_> {
        Expr::Leaf(self)
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl<'a, R: Into<Expr<'a>>> ops::$trait<R> for Expr<'a> {
            type Output = Expr<'a>;
            fn $method(self, rhs: R) -> Expr<'a> {
                Expr::$variant(Box::new(self), Box::new(rhs.into()))
            }
        }

        impl<'a, R: Into<Expr<'a>>> ops::$trait<R> for &'a DenseMatrix {
            type Output = Expr<'a>;
            fn $method(self, rhs: R) -> Expr<'a> {
                Expr::$variant(Box::new(Expr::Leaf(self)), Box::new(rhs.into()))
            }
        }
    };
}

binary_op!(Add, add, Add);
binary_op!(Sub, sub, Sub);
binary_op!(Mul, mul, MatMul);

impl<'a> ops::Mul<Expr<'a>> for f64 {
    type Output = Expr<'a>;
    fn mul(self, rhs: Expr<'a>) -> Expr<'a> {
        Expr::ScalarMul(self, Box::new(rhs))
    }
}

impl<'a> ops::Mul<&'a DenseMatrix> for f64 {
    type Output = Expr<'a>;
    fn mul(self, rhs: &'a DenseMatrix) -> Expr<'a> {
        Expr::ScalarMul(self, Box::new(Expr::Leaf(rhs)))
    }
}

impl<'a> ops::Neg for Expr<'a> {
    type Output = Expr<'a>;
    fn neg(self) -> Expr<'a> {
        Expr::ScalarMul(-1.0, Box::new(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::NodePath;

    fn mat(r: usize, c: usize) -> DenseMatrix {
        DenseMatrix::zeros(r, c)
    }

    #[test]
    fn build_is_verbatim() {
        let x = mat(2, 2);
        let y = mat(2, 2);
        let e = 0.4 * &x + 0.6 * &y;
        assert_eq!(
            e.to_string(),
            format!(
                "Add(ScalarMul(0.4,Leaf#{}),ScalarMul(0.6,Leaf#{}))",
                x.id(),
                y.id()
            )
        );

        let a = mat(3, 3);
        let b = mat(3, 1);
        let e = inv(&a) * &b;
        assert_eq!(e.kind(), NodeKind::MatMul);
        assert_eq!(e.children()[0].kind(), NodeKind::Inverse);
        assert_eq!(e.children()[1].leaf_id(), Some(b.id()));

        let e = a.expr().t().t();
        assert_eq!(e.to_string(), format!("Transpose(Transpose(Leaf#{}))", a.id()));
    }

    #[test]
    fn arity_matches_kind() {
        let a = mat(2, 2);
        let nodes = [
            a.expr(),
            2.0 * &a,
            &a + &a,
            &a - &a,
            a.expr().t(),
            inv(&a),
            diagmat(&a),
            &a * &a,
            solve(&a, &a),
            trace(&a),
            as_scalar(&a),
            a.expr().col(0),
            a.expr().row(0),
        ];
        for n in &nodes {
            assert_eq!(n.children().len(), n.kind().arity(), "{n}");
        }
    }

    #[test]
    fn shape_rules() {
        let (a, b) = (mat(3, 5), mat(5, 2));
        assert_eq!((&a * &b).infer_shape().unwrap(), Shape::new(3, 2));

        let (c, d) = (mat(2, 2), mat(2, 3));
        let err = (&c + &d).infer_shape().unwrap_err();
        match err {
            Error::Conformance { kind, detail, .. } => {
                assert_eq!(kind, NodeKind::Add);
                assert!(detail.contains("2x2") && detail.contains("2x3"), "{detail}");
            }
            other => panic!("unexpected {other:?}"),
        }

        let (e, f) = (mat(4, 4), mat(4, 4));
        assert_eq!(trace(&e * &f).infer_shape().unwrap(), Shape::scalar());
        assert_eq!(diagmat(mat(4, 1).expr()).infer_shape().unwrap(), Shape::new(4, 4));
        let v = mat(1, 3);
        assert_eq!(diagmat(&v).infer_shape().unwrap(), Shape::new(3, 3));
        assert_eq!(solve(&e, &mat(4, 3)).infer_shape().unwrap(), Shape::new(4, 3));
        assert_eq!(a.expr().t().infer_shape().unwrap(), Shape::new(5, 3));
        assert_eq!(a.expr().col(4).infer_shape().unwrap(), Shape::new(3, 1));
        assert_eq!(a.expr().row(2).infer_shape().unwrap(), Shape::new(1, 5));
    }

    #[test]
    fn validate_examples() {
        let (a, b) = (mat(2, 2), mat(2, 2));
        assert!((&a + &b).validate().is_ok());

        let (r, c) = (mat(1, 3), mat(3, 1));
        assert_eq!(as_scalar(&r * &c).validate().unwrap(), Shape::scalar());

        assert!(inv(&mat(2, 3)).validate().is_err());
        assert!(as_scalar(&mat(2, 2)).validate().is_err());
        assert!(trace(&mat(2, 3)).validate().is_err());
        assert!(solve(&mat(2, 3), &mat(2, 1)).validate().is_err());
        assert!(a.expr().col(2).validate().is_err());
    }

    #[test]
    fn validate_reports_path() {
        let (a, b, c) = (mat(2, 2), mat(2, 2), mat(3, 3));
        // root/1/0 is the inner Add
        let bad = &a + (2.0 * (&b + &c));
        match bad.validate().unwrap_err() {
            Error::Conformance { kind, path, .. } => {
                assert_eq!(kind, NodeKind::Add);
                assert_eq!(path, NodePath(vec![1, 0]));
                assert_eq!(path.to_string(), "root/1/0");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
