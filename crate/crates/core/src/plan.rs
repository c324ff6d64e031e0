//! Lowered form of an expression: an ordered list of kernel calls over bound operands.

use std::fmt;

use crate::error::Result;
use crate::expr::Shape;
use crate::kernels::{self, KernelId, Side};
use crate::matrix::{analyze_structure, DenseMatrix, MatrixView, Window};
use crate::rewrite::{choose_solver, Detection, RuleApplied};
use crate::trace::Collector;

/// Result of evaluating an expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Matrix(DenseMatrix),
    Scalar(f64),
}

impl Value {
    pub fn as_matrix(&self) -> Option<&DenseMatrix> {
        match self {
            Value::Matrix(m) => Some(m),
            Value::Scalar(_) => None,
        }
    }

    pub fn into_matrix(self) -> Option<DenseMatrix> {
        match self {
            Value::Matrix(m) => Some(m),
            Value::Scalar(_) => None,
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Value::Scalar(s) => Some(*s),
            Value::Matrix(_) => None,
        }
    }

    /// Column-major elements; a scalar yields one element.
    pub fn values(&self) -> Vec<f64> {
        match self {
            Value::Matrix(m) => m.to_values(),
            Value::Scalar(s) => vec![*s],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    /// Index into [`Plan::leaves`].
    Leaf(usize),
    /// Temporary produced by an earlier step.
    Temp(usize),
}

/// A pre-resolved operand binding: a source buffer and the window read from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Operand {
    pub source: Source,
    pub window: Window,
}

impl Operand {
    pub fn shape(&self) -> (usize, usize) {
        self.window.shape()
    }

    pub fn t(mut self) -> Self {
        self.window = self.window.t();
        self
    }

    pub fn col(mut self, j: usize) -> Result<Self> {
        self.window = self.window.col(j)?;
        Ok(self)
    }

    pub fn row(mut self, i: usize) -> Result<Self> {
        self.window = self.window.row(i)?;
        Ok(self)
    }

    /// Same buffer and window, ignoring transposition.
    pub(crate) fn same_storage(&self, other: &Operand) -> bool {
        self.source == other.source
            && Window {
                transposed: false,
                ..self.window
            } == Window {
                transposed: false,
                ..other.window
            }
    }

    /// The operand with transposition removed, plus whether it was transposed.
    pub(crate) fn untransposed(self) -> (Operand, bool) {
        let t = self.window.transposed;
        let mut o = self;
        o.window.transposed = false;
        (o, t)
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.source {
            Source::Leaf(i) => write!(f, "L{i}")?,
            Source::Temp(i) => write!(f, "t{i}")?,
        }
        let w = &self.window;
        if w.row_offset != 0 || w.col_offset != 0 {
            write!(
                f,
                "[{}..{},{}..{}]",
                w.row_offset,
                w.row_offset + w.n_rows,
                w.col_offset,
                w.col_offset + w.n_cols
            )?;
        } else if w.n_rows == 1 || w.n_cols == 1 {
            write!(f, "[{}x{}]", w.n_rows, w.n_cols)?;
        }
        if w.transposed {
            f.write_str("'")?;
        }
        Ok(())
    }
}

/// Which solver a solve step runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Solver {
    Band { kl: usize, ku: usize },
    Triangular { upper: bool },
    Lu,
    /// The coefficient matrix is computed inside the plan; analyse it when executing.
    Runtime,
}

/// One kernel invocation. `out` names the temporary slot the step produces.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelCall {
    FusedAxpby {
        coeffs: Vec<f64>,
        sources: Vec<Operand>,
        out: usize,
    },
    Gemm {
        a: Operand,
        b: Operand,
        trans_a: bool,
        trans_b: bool,
        out: usize,
    },
    Gemv {
        a: Operand,
        x: Operand,
        trans_a: bool,
        out: usize,
    },
    Syrk {
        a: Operand,
        out: usize,
    },
    DiagScale {
        d: Operand,
        b: Operand,
        side: Side,
        out: usize,
    },
    DiagOfProduct {
        a: Operand,
        b: Operand,
        out: usize,
    },
    TraceOfProduct {
        a: Operand,
        b: Operand,
        out: usize,
    },
    TripleDiagDot {
        a: Operand,
        d: Operand,
        c: Operand,
        out: usize,
    },
    Solve {
        a: Operand,
        b: Operand,
        solver: Solver,
        detections: Vec<Detection>,
        out: usize,
    },
    ExplicitInverse {
        a: Operand,
        out: usize,
    },
    TransposeCopy {
        a: Operand,
        out: usize,
    },
    DiagMaterialise {
        x: Operand,
        out: usize,
    },
    Trace {
        a: Operand,
        out: usize,
    },
}

impl KernelCall {
    pub fn kernel(&self) -> KernelId {
        match self {
            KernelCall::FusedAxpby { .. } => KernelId::FusedAxpbyN,
            KernelCall::Gemm { .. } => KernelId::Gemm,
            KernelCall::Gemv { .. } => KernelId::Gemv,
            KernelCall::Syrk { .. } => KernelId::Syrk,
            KernelCall::DiagScale { .. } => KernelId::DiagScale,
            KernelCall::DiagOfProduct { .. } => KernelId::DiagOfProduct,
            KernelCall::TraceOfProduct { .. } => KernelId::TraceOfProduct,
            KernelCall::TripleDiagDot { .. } => KernelId::TripleDiagDot,
            KernelCall::Solve { solver, .. } => match solver {
                Solver::Band { .. } => KernelId::BandSolve,
                Solver::Triangular { .. } => KernelId::TriangularSolve,
                Solver::Lu | Solver::Runtime => KernelId::LuSolve,
            },
            KernelCall::ExplicitInverse { .. } => KernelId::ExplicitInverse,
            KernelCall::TransposeCopy { .. } => KernelId::TransposeCopy,
            KernelCall::DiagMaterialise { .. } => KernelId::DiagMaterialise,
            KernelCall::Trace { .. } => KernelId::Trace,
        }
    }

    pub fn out(&self) -> usize {
        match self {
            KernelCall::FusedAxpby { out, .. }
            | KernelCall::Gemm { out, .. }
            | KernelCall::Gemv { out, .. }
            | KernelCall::Syrk { out, .. }
            | KernelCall::DiagScale { out, .. }
            | KernelCall::DiagOfProduct { out, .. }
            | KernelCall::TraceOfProduct { out, .. }
            | KernelCall::TripleDiagDot { out, .. }
            | KernelCall::Solve { out, .. }
            | KernelCall::ExplicitInverse { out, .. }
            | KernelCall::TransposeCopy { out, .. }
            | KernelCall::DiagMaterialise { out, .. }
            | KernelCall::Trace { out, .. } => *out,
        }
    }
}

impl fmt::Display for KernelCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{} = {}(", self.out(), self.kernel())?;
        match self {
            KernelCall::FusedAxpby { coeffs, sources, .. } => {
                let terms: Vec<String> = coeffs
                    .iter()
                    .zip(sources)
                    .map(|(c, s)| format!("{c}*{s}"))
                    .collect();
                f.write_str(&terms.join(" + "))?;
            }
            KernelCall::Gemm {
                a,
                b,
                trans_a,
                trans_b,
                ..
            } => write!(f, "{a}, {b}, trans_a={trans_a}, trans_b={trans_b}")?,
            KernelCall::Gemv { a, x, trans_a, .. } => write!(f, "{a}, {x}, trans_a={trans_a}")?,
            KernelCall::Syrk { a, .. } => write!(f, "{a}")?,
            KernelCall::DiagScale { d, b, side, .. } => write!(f, "{d}, {b}, {side:?}")?,
            KernelCall::DiagOfProduct { a, b, .. } | KernelCall::TraceOfProduct { a, b, .. } => {
                write!(f, "{a}, {b}")?
            }
            KernelCall::TripleDiagDot { a, d, c, .. } => write!(f, "{a}, {d}, {c}")?,
            KernelCall::Solve { a, b, solver, .. } => write!(f, "{a}, {b}, {solver:?}")?,
            KernelCall::ExplicitInverse { a, .. }
            | KernelCall::TransposeCopy { a, .. }
            | KernelCall::Trace { a, .. } => write!(f, "{a}")?,
            KernelCall::DiagMaterialise { x, .. } => write!(f, "{x}")?,
        }
        f.write_str(")")
    }
}

/// The lowered form of an expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan<'a> {
    pub leaves: Vec<&'a DenseMatrix>,
    pub steps: Vec<KernelCall>,
    /// Shapes of the temporary slots, indexed by slot.
    pub temps: Vec<(usize, usize)>,
    /// Slot holding the final result.
    pub result: usize,
    pub output_shape: Shape,
    pub rule_log: Vec<RuleApplied>,
}

impl<'a> Plan<'a> {
    /// Comma-separated rule identifiers, or `NONE`.
    pub fn rule_log_string(&self) -> String {
        if self.rule_log.is_empty() {
            return "NONE".to_string();
        }
        let names: Vec<String> = self.rule_log.iter().map(|r| r.to_string()).collect();
        names.join(",")
    }

    pub fn kernels(&self) -> Vec<KernelId> {
        self.steps.iter().map(|s| s.kernel()).collect()
    }

    pub fn execute(&self, c: &mut Collector) -> Result<Value> {
        for r in &self.rule_log {
            c.rule(&r.to_string(), || r.rule.description().to_string());
        }
        let mut slots: Vec<Option<DenseMatrix>> = vec![None; self.temps.len()];
        for step in &self.steps {
            match self.run_step(step, &slots, c) {
                Ok(m) => slots[step.out()] = Some(m),
                Err(e) => {
                    for m in slots.into_iter().flatten() {
                        c.release(m);
                    }
                    return Err(e);
                }
            }
        }
        let result = slots[self.result].take().expect("result slot written");
        for m in slots.into_iter().flatten() {
            c.release(m);
        }
        Ok(if self.output_shape.is_scalar {
            Value::Scalar(result.get(0, 0))
        } else {
            Value::Matrix(result)
        })
    }

    fn bind<'s>(&'s self, op: &Operand, slots: &'s [Option<DenseMatrix>]) -> MatrixView<'s> {
        let base: &'s DenseMatrix = match op.source {
            Source::Leaf(i) => self.leaves[i],
            Source::Temp(i) => slots[i].as_ref().expect("temporary computed before use"),
        };
        MatrixView::from_window(base, &op.window)
    }

    fn run_step(
        &self,
        step: &KernelCall,
        slots: &[Option<DenseMatrix>],
        c: &mut Collector,
    ) -> Result<DenseMatrix> {
        let (rows, cols) = self.temps[step.out()];
        let v = |op: &Operand| self.bind(op, slots);
        Ok(match step {
            KernelCall::FusedAxpby {
                coeffs, sources, ..
            } => {
                let views: Vec<MatrixView<'_>> = sources.iter().map(v).collect();
                let mut out = c.acquire(rows, cols);
                kernels::fused_axpby_n(coeffs, &views, &mut out, c);
                out
            }
            KernelCall::Gemm {
                a,
                b,
                trans_a,
                trans_b,
                ..
            } => {
                let mut out = c.acquire(rows, cols);
                kernels::gemm(&v(a), &v(b), *trans_a, *trans_b, &mut out, c);
                out
            }
            KernelCall::Gemv { a, x, trans_a, .. } => {
                let mut out = c.acquire(rows, cols);
                crate::kernels::gemv(&v(a), &v(x), *trans_a, &mut out, c);
                out
            }
            KernelCall::Syrk { a, .. } => {
                let mut out = c.acquire(rows, cols);
                kernels::syrk(&v(a), &mut out, c);
                out
            }
            KernelCall::DiagScale { d, b, side, .. } => {
                let mut out = c.acquire(rows, cols);
                kernels::diag_scale(&v(d), &v(b), *side, &mut out, c);
                out
            }
            KernelCall::DiagOfProduct { a, b, .. } => {
                let mut diag = vec![0.0; rows];
                kernels::diag_of_product(&v(a), &v(b), &mut diag, c);
                let mut out = c.acquire(rows, cols);
                for (i, d) in diag.into_iter().enumerate() {
                    out.set(i, i, d);
                }
                out
            }
            KernelCall::TraceOfProduct { a, b, .. } => {
                let mut out = c.acquire(1, 1);
                let t = kernels::trace_of_product(&v(a), &v(b), c);
                out.set(0, 0, t);
                out
            }
            KernelCall::TripleDiagDot { a, d, c: cv, .. } => {
                let mut out = c.acquire(1, 1);
                let s = kernels::triple_diag_dot(&v(a), &v(d), &v(cv), c);
                out.set(0, 0, s);
                out
            }
            KernelCall::Solve {
                a,
                b,
                solver,
                detections,
                ..
            } => {
                let (av, bv) = (v(a), v(b));
                let solver = match solver {
                    Solver::Runtime => {
                        let info = analyze_structure(&av);
                        let (solver, found, _) = choose_solver(&info, av.n_rows());
                        emit(&found, c);
                        solver
                    }
                    fixed => {
                        emit(detections, c);
                        *fixed
                    }
                };
                run_solver(solver, &av, &bv, c)?
            }
            KernelCall::ExplicitInverse { a, .. } => kernels::explicit_inverse(&v(a), c)?,
            KernelCall::TransposeCopy { a, .. } => {
                let mut out = c.acquire(rows, cols);
                kernels::transpose_copy(&v(a), &mut out, c);
                out
            }
            KernelCall::DiagMaterialise { x, .. } => {
                let mut out = c.acquire(rows, cols);
                kernels::diag_materialise(&v(x), &mut out, c);
                out
            }
            KernelCall::Trace { a, .. } => {
                let mut out = c.acquire(1, 1);
                let t = kernels::trace(&v(a), c);
                out.set(0, 0, t);
                out
            }
        })
    }
}

fn emit(detections: &[Detection], c: &mut Collector) {
    for d in detections {
        c.detect(d.label, || d.detail.clone());
    }
}

pub(crate) fn run_solver(
    solver: Solver,
    a: &MatrixView<'_>,
    b: &MatrixView<'_>,
    c: &mut Collector,
) -> Result<DenseMatrix> {
    match solver {
        Solver::Band { kl, ku } => kernels::band_solve(a, b, kl, ku, c),
        Solver::Triangular { upper } => kernels::triangular_solve(a, b, upper, c),
        Solver::Lu | Solver::Runtime => kernels::lu_solve(a, b, c),
    }
}

impl fmt::Display for Plan<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, leaf) in self.leaves.iter().enumerate() {
            writeln!(f, "L{i} = Leaf#{} {}x{}", leaf.id(), leaf.n_rows(), leaf.n_cols())?;
        }
        for step in &self.steps {
            let (r, c) = self.temps[step.out()];
            writeln!(f, "{step}  -> {r}x{c}")?;
        }
        writeln!(f, "result = t{} ({})", self.result, self.output_shape)?;
        write!(f, "rules: {}", self.rule_log_string())
    }
}
