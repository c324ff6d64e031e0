//! Pattern-directed lowering of expression trees into [`Plan`]s.
//!
//! The tree is walked top-down and the first matching rule wins; more specific
//! patterns are tried before generic ones. Anything no rule matches is lowered
//! to the same kernel the naive evaluator would call.

use std::collections::HashMap;
use std::fmt;

use crate::chain::greedy_chain_order;
use crate::error::Result;
use crate::expr::{Expr, Shape};
use crate::kernels::Side;
use crate::matrix::{analyze_structure, DenseMatrix, MatrixId, MatrixView, StructureInfo, Window};
use crate::plan::{KernelCall, Operand, Plan, Solver, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
    R9,
    R10,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::R1 => "R1",
            Rule::R2 => "R2",
            Rule::R3 => "R3",
            Rule::R4 => "R4",
            Rule::R5 => "R5",
            Rule::R6 => "R6",
            Rule::R7 => "R7",
            Rule::R8 => "R8",
            Rule::R9 => "R9",
            Rule::R10 => "R10",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Rule::R1 => "fused elementwise sum",
            Rule::R2 => "row/column view folded into operand",
            Rule::R3 => "diagonal times dense as scaling",
            Rule::R4 => "diagonal of product without full product",
            Rule::R5 => "trace of product without full product",
            Rule::R6 => "greedy chain order",
            Rule::R7 => "quadratic form with diagonal middle",
            Rule::R8 => "product with own transpose as syrk",
            Rule::R9 => "inverse times matrix as solve",
            Rule::R10 => "structure-dispatched solve",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A rule application as logged, with an optional sub-tag such as `BAND`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RuleApplied {
    pub rule: Rule,
    pub tag: Option<&'static str>,
}

impl fmt::Display for RuleApplied {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            Some(t) => write!(f, "{}:{}", self.rule, t),
            None => write!(f, "{}", self.rule),
        }
    }
}

impl PartialEq<&str> for RuleApplied {
    fn eq(&self, other: &&str) -> bool {
        match self.tag {
            Some(t) => other
                .strip_prefix(self.rule.name())
                .and_then(|rest| rest.strip_prefix(':'))
                == Some(t),
            None => *other == self.rule.name(),
        }
    }
}

/// One structural test performed while choosing a solver.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Detection {
    pub label: &'static str,
    pub detail: String,
}

/// Walk the solver ladder for a square coefficient matrix of order `n`.
///
/// Returns the solver, the tests performed in order, and the log tag.
pub fn choose_solver(info: &StructureInfo, n: usize) -> (Solver, Vec<Detection>, &'static str) {
    let yes = |b: bool| if b { "yes" } else { "no" };
    let mut found = vec![Detection {
        label: "SQUARE",
        detail: format!("{n}x{n}"),
    }];
    let (kl, ku) = (info.lower_bandwidth, info.upper_bandwidth);
    let limit = 4.max(n / 4);
    let band = kl + ku <= limit;
    found.push(Detection {
        label: "BAND",
        detail: format!("kl={kl}, ku={ku}, limit={limit}, {}", yes(band)),
    });
    if band {
        return (Solver::Band { kl, ku }, found, "BAND");
    }
    found.push(Detection {
        label: "TRIU",
        detail: yes(info.is_upper_triangular).to_string(),
    });
    if info.is_upper_triangular {
        return (Solver::Triangular { upper: true }, found, "TRIU");
    }
    found.push(Detection {
        label: "TRIL",
        detail: yes(info.is_lower_triangular).to_string(),
    });
    if info.is_lower_triangular {
        return (Solver::Triangular { upper: false }, found, "TRIL");
    }
    found.push(Detection {
        label: "SYM",
        detail: yes(info.is_symmetric).to_string(),
    });
    if info.is_symmetric {
        (Solver::Lu, found, "SYM-DETECTED")
    } else {
        (Solver::Lu, found, "LU")
    }
}

/// Validate `expr` and lower it to a plan.
pub fn rewrite<'a>(expr: &Expr<'a>) -> Result<Plan<'a>> {
    let output_shape = expr.validate()?;
    let mut b = Builder::default();
    let op = b.lower(expr)?;
    let result = b.finish(op);
    Ok(Plan {
        leaves: b.leaves,
        steps: b.steps,
        temps: b.temps,
        result,
        output_shape,
        rule_log: b.rules,
    })
}

/// A factor of a flattened product chain.
#[derive(Debug, Clone, Copy)]
enum Factor {
    Dense(Operand),
    /// A diagonal matrix carried by a square matrix or a vector.
    Diag(Operand),
}

impl Factor {
    fn dims(&self) -> (usize, usize) {
        match self {
            Factor::Dense(o) => o.shape(),
            Factor::Diag(o) => {
                let n = diag_len(o);
                (n, n)
            }
        }
    }
}

fn diag_len(o: &Operand) -> usize {
    let (r, c) = o.shape();
    if r == c {
        r
    } else {
        r * c
    }
}

#[derive(Default)]
struct Builder<'a> {
    leaves: Vec<&'a DenseMatrix>,
    leaf_index: HashMap<MatrixId, usize>,
    steps: Vec<KernelCall>,
    temps: Vec<(usize, usize)>,
    rules: Vec<RuleApplied>,
}

impl<'a> Builder<'a> {
    fn log(&mut self, rule: Rule) {
        self.rules.push(RuleApplied { rule, tag: None });
    }

    fn log_tagged(&mut self, rule: Rule, tag: &'static str) {
        self.rules.push(RuleApplied {
            rule,
            tag: Some(tag),
        });
    }

    fn leaf(&mut self, m: &'a DenseMatrix) -> Operand {
        let next = self.leaves.len();
        let idx = *self.leaf_index.entry(m.id()).or_insert(next);
        if idx == next {
            self.leaves.push(m);
        }
        Operand {
            source: Source::Leaf(idx),
            window: Window::full(m.n_rows(), m.n_cols()),
        }
    }

    fn temp(&mut self, n_rows: usize, n_cols: usize) -> usize {
        self.temps.push((n_rows, n_cols));
        self.temps.len() - 1
    }

    fn temp_operand(&self, slot: usize) -> Operand {
        let (r, c) = self.temps[slot];
        Operand {
            source: Source::Temp(slot),
            window: Window::full(r, c),
        }
    }

    fn push(&mut self, step: KernelCall) -> Operand {
        let slot = step.out();
        self.steps.push(step);
        self.temp_operand(slot)
    }

    /// Make sure the result lives in a fresh, untransposed, full temporary.
    fn finish(&mut self, op: Operand) -> usize {
        if let Source::Temp(slot) = op.source {
            let (r, c) = self.temps[slot];
            if op.window == Window::full(r, c) {
                return slot;
            }
        }
        let (r, c) = op.shape();
        let out = self.temp(r, c);
        let (base, transposed) = op.untransposed();
        if transposed && r > 1 && c > 1 {
            self.steps.push(KernelCall::TransposeCopy { a: base, out });
        } else {
            self.log(Rule::R1);
            self.steps.push(KernelCall::FusedAxpby {
                coeffs: vec![1.0],
                sources: vec![op],
                out,
            });
        }
        out
    }

    fn lower(&mut self, e: &Expr<'a>) -> Result<Operand> {
        match e {
            Expr::Leaf(m) => Ok(self.leaf(m)),
            Expr::Transpose(x) => Ok(self.lower(x)?.t()),
            Expr::ColView(x, j) => {
                let o = self.lower(x)?;
                self.log(Rule::R2);
                o.col(*j)
            }
            Expr::RowView(x, i) => {
                let o = self.lower(x)?;
                self.log(Rule::R2);
                o.row(*i)
            }
            Expr::ScalarMul(..) | Expr::Add(..) | Expr::Sub(..) => self.lower_sum(e),
            Expr::DiagMat(x) => {
                if Self::chain_len(x) >= 2 && x.infer_shape()?.is_square() {
                    self.log(Rule::R4);
                    let (a, b) = self.reduce_to_pair(x)?;
                    let p = a.shape().0;
                    let out = self.temp(p, p);
                    return Ok(self.push(KernelCall::DiagOfProduct { a, b, out }));
                }
                let o = self.lower(x)?;
                let n = diag_len(&o);
                let out = self.temp(n, n);
                Ok(self.push(KernelCall::DiagMaterialise { x: o, out }))
            }
            Expr::Trace(x) => {
                if Self::chain_len(x) >= 2 {
                    self.log(Rule::R5);
                    let (a, b) = self.reduce_to_pair(x)?;
                    let out = self.temp(1, 1);
                    return Ok(self.push(KernelCall::TraceOfProduct { a, b, out }));
                }
                let a = self.lower(x)?;
                let out = self.temp(1, 1);
                Ok(self.push(KernelCall::Trace { a, out }))
            }
            Expr::AsScalar(x) => {
                if let Some(op) = self.try_quadratic_form(x)? {
                    return Ok(op);
                }
                self.lower(x)
            }
            Expr::MatMul(l, r) => {
                if let Expr::Inverse(a) = l.as_ref() {
                    self.log(Rule::R9);
                    let a = self.lower(a)?;
                    let b = self.lower(r)?;
                    return Ok(self.solve(a, b));
                }
                let factors = self.lower_chain(e)?;
                let op = self.reduce_chain(factors, 1);
                Ok(self.dense(op))
            }
            Expr::Inverse(x) => {
                let a = self.lower(x)?;
                let (n, _) = a.shape();
                let out = self.temp(n, n);
                Ok(self.push(KernelCall::ExplicitInverse { a, out }))
            }
            Expr::Solve(a, b) => {
                let a = self.lower(a)?;
                let b = self.lower(b)?;
                Ok(self.solve(a, b))
            }
        }
    }

    /// Elementwise region: a tree of `+`, `-`, scalar multiples and transposes.
    fn lower_sum(&mut self, e: &Expr<'a>) -> Result<Operand> {
        self.log(Rule::R1);
        let mut coeffs = Vec::new();
        let mut sources = Vec::new();
        self.collect_terms(e, 1.0, false, &mut coeffs, &mut sources)?;
        let (r, c) = sources[0].shape();
        let out = self.temp(r, c);
        Ok(self.push(KernelCall::FusedAxpby {
            coeffs,
            sources,
            out,
        }))
    }

    fn collect_terms(
        &mut self,
        e: &Expr<'a>,
        scale: f64,
        transposed: bool,
        coeffs: &mut Vec<f64>,
        sources: &mut Vec<Operand>,
    ) -> Result<()> {
        match e {
            Expr::ScalarMul(s, x) => self.collect_terms(x, scale * s, transposed, coeffs, sources),
            Expr::Add(l, r) => {
                self.collect_terms(l, scale, transposed, coeffs, sources)?;
                self.collect_terms(r, scale, transposed, coeffs, sources)
            }
            Expr::Sub(l, r) => {
                self.collect_terms(l, scale, transposed, coeffs, sources)?;
                self.collect_terms(r, -scale, transposed, coeffs, sources)
            }
            Expr::Transpose(x) => self.collect_terms(x, scale, !transposed, coeffs, sources),
            other => {
                let o = self.lower(other)?;
                coeffs.push(scale);
                sources.push(if transposed { o.t() } else { o });
                Ok(())
            }
        }
    }

    /// Flatten nested products into factors. A product whose left factor is an
    /// inverse stays whole so the inverse can become a solve.
    fn flatten<'e>(e: &'e Expr<'a>, out: &mut Vec<&'e Expr<'a>>) {
        match e {
            Expr::MatMul(l, r) if !matches!(l.as_ref(), Expr::Inverse(_)) => {
                Self::flatten(l, out);
                Self::flatten(r, out);
            }
            other => out.push(other),
        }
    }

    fn lower_chain(&mut self, e: &Expr<'a>) -> Result<Vec<Factor>> {
        let mut exprs = Vec::new();
        Self::flatten(e, &mut exprs);
        let mut factors = Vec::with_capacity(exprs.len());
        for x in exprs {
            factors.push(match x {
                Expr::DiagMat(inner) if !matches!(inner.as_ref(), Expr::MatMul(..)) => {
                    Factor::Diag(self.lower(inner)?)
                }
                other => Factor::Dense(self.lower(other)?),
            });
        }
        Ok(factors)
    }

    /// Multiply factors in greedy order until `keep` remain.
    fn reduce_chain(&mut self, mut factors: Vec<Factor>, keep: usize) -> Vec<Factor> {
        if factors.len() >= 3 {
            self.log(Rule::R6);
            let dims: Vec<(usize, usize)> = factors.iter().map(Factor::dims).collect();
            let order = greedy_chain_order(&dims);
            let steps = factors.len() - keep;
            for &i in order.merges.iter().take(steps) {
                let right = factors.remove(i + 1);
                factors[i] = Factor::Dense(self.multiply(factors[i], right));
            }
        } else if factors.len() == 2 && keep == 1 {
            let right = factors.pop().expect("two factors");
            factors[0] = Factor::Dense(self.multiply(factors[0], right));
        }
        factors
    }

    fn chain_len(e: &Expr<'a>) -> usize {
        let mut exprs = Vec::new();
        Self::flatten(e, &mut exprs);
        exprs.len()
    }

    /// Reduce a product of at least two factors to exactly two.
    fn reduce_to_pair(&mut self, product: &Expr<'a>) -> Result<(Operand, Operand)> {
        let factors = self.lower_chain(product)?;
        let mut pair = self.reduce_chain(factors, 2);
        let b = pair.pop().expect("two factors");
        let a = pair.pop().expect("two factors");
        Ok((self.densify(a), self.densify(b)))
    }

    fn dense(&mut self, mut factors: Vec<Factor>) -> Operand {
        debug_assert_eq!(factors.len(), 1);
        let f = factors.pop().expect("one factor");
        self.densify(f)
    }

    fn densify(&mut self, f: Factor) -> Operand {
        match f {
            Factor::Dense(o) => o,
            Factor::Diag(x) => {
                let n = diag_len(&x);
                let out = self.temp(n, n);
                self.push(KernelCall::DiagMaterialise { x, out })
            }
        }
    }

    fn multiply(&mut self, l: Factor, r: Factor) -> Operand {
        let (p, _) = l.dims();
        let (_, q) = r.dims();
        match (l, r) {
            (Factor::Diag(d), Factor::Dense(b)) => {
                self.log(Rule::R3);
                let out = self.temp(p, q);
                self.push(KernelCall::DiagScale {
                    d,
                    b,
                    side: Side::Left,
                    out,
                })
            }
            (Factor::Dense(b), Factor::Diag(d)) => {
                self.log(Rule::R3);
                let out = self.temp(p, q);
                self.push(KernelCall::DiagScale {
                    d,
                    b,
                    side: Side::Right,
                    out,
                })
            }
            (Factor::Diag(x), Factor::Diag(d)) => {
                let b = self.densify(Factor::Diag(x));
                self.multiply(Factor::Dense(b), Factor::Diag(d))
            }
            (Factor::Dense(a), Factor::Dense(b)) => {
                if a.same_storage(&b) && a.window.transposed != b.window.transposed {
                    self.log(Rule::R8);
                    let out = self.temp(p, q);
                    return self.push(KernelCall::Syrk { a, out });
                }
                let (a, trans_a) = a.untransposed();
                let (b, trans_b) = b.untransposed();
                let out = self.temp(p, q);
                if q == 1 {
                    self.push(KernelCall::Gemv {
                        a,
                        x: if trans_b { b.t() } else { b },
                        trans_a,
                        out,
                    })
                } else {
                    self.push(KernelCall::Gemm {
                        a,
                        b,
                        trans_a,
                        trans_b,
                        out,
                    })
                }
            }
        }
    }

    fn solve(&mut self, a: Operand, b: Operand) -> Operand {
        let (n, _) = a.shape();
        let (_, k) = b.shape();
        let out = self.temp(n, k);
        let (solver, detections, tag) = match a.source {
            Source::Leaf(i) => {
                let view = MatrixView::from_window(self.leaves[i], &a.window);
                choose_solver(&analyze_structure(&view), n)
            }
            Source::Temp(_) => (Solver::Runtime, Vec::new(), "RUNTIME"),
        };
        self.log_tagged(Rule::R10, tag);
        self.push(KernelCall::Solve {
            a,
            b,
            solver,
            detections,
            out,
        })
    }

    /// `aᵀ · diagmat(D) · c` with vector `a` and `c` as a single dot product.
    fn try_quadratic_form(&mut self, x: &Expr<'a>) -> Result<Option<Operand>> {
        let Expr::MatMul(..) = x else {
            return Ok(None);
        };
        let mut exprs = Vec::new();
        Self::flatten(x, &mut exprs);
        let [first, Expr::DiagMat(d), last] = exprs.as_slice() else {
            return Ok(None);
        };
        let is_row = |s: Shape| s.n_rows == 1;
        let is_col = |s: Shape| s.n_cols == 1;
        if !is_row(first.infer_shape()?)
            || !is_col(last.infer_shape()?)
            || matches!(d.as_ref(), Expr::MatMul(..))
        {
            return Ok(None);
        }
        self.log(Rule::R7);
        let a = self.lower(first)?;
        let d = self.lower(d)?;
        let c = self.lower(last)?;
        let out = self.temp(1, 1);
        Ok(Some(self.push(KernelCall::TripleDiagDot { a, d, c, out })))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{as_scalar, diagmat, inv, solve, trace};

    fn tags(e: &Expr<'_>) -> Vec<String> {
        rewrite(e)
            .unwrap()
            .rule_log
            .iter()
            .map(|r| r.to_string())
            .collect()
    }

    #[test]
    fn weighted_sum_is_one_fused_step() {
        let a = DenseMatrix::random(4, 4, 1);
        let b = DenseMatrix::random(4, 4, 2);
        let e = 0.4 * &a + 0.6 * &b;
        let plan = rewrite(&e).unwrap();
        assert_eq!(tags(&e), ["R1"]);
        assert_eq!(plan.steps.len(), 1);
        match &plan.steps[0] {
            KernelCall::FusedAxpby { coeffs, .. } => assert_eq!(coeffs, &[0.4, 0.6]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn subtraction_and_nested_scaling_fold() {
        let a = DenseMatrix::random(3, 3, 1);
        let b = DenseMatrix::random(3, 3, 2);
        let e = 2.0 * (a.expr() - 3.0 * &b);
        let plan = rewrite(&e).unwrap();
        match &plan.steps[0] {
            KernelCall::FusedAxpby { coeffs, .. } => assert_eq!(coeffs, &[2.0, -6.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn views_fold() {
        let a = DenseMatrix::random(5, 5, 1);
        let b = DenseMatrix::random(5, 5, 2);
        let e = a.expr().col(1) + b.expr().row(2).t();
        let plan = rewrite(&e).unwrap();
        assert_eq!(plan.steps.len(), 1);
        assert!(tags(&e).contains(&"R2".to_string()));
    }

    #[test]
    fn diagonal_products() {
        let a = DenseMatrix::random(4, 4, 1);
        let b = DenseMatrix::random(4, 4, 2);
        assert_eq!(tags(&(diagmat(&a) * &b)), ["R3"]);
        assert_eq!(tags(&(&b * diagmat(&a))), ["R3"]);
        assert_eq!(tags(&diagmat(&a * &b)), ["R4"]);
        assert_eq!(tags(&trace(&a * &b)), ["R5"]);
    }

    #[test]
    fn chain_and_quadratic_form() {
        let m = 12;
        let a = DenseMatrix::random(m, m, 1);
        let b = DenseMatrix::random(m, m / 2, 2);
        let c = DenseMatrix::random(m / 2, m / 3, 3);
        let d = DenseMatrix::random(m / 3, m / 4, 4);
        let e = &a * &b * &c * &d;
        assert_eq!(tags(&e), ["R6"]);
        let plan = rewrite(&e).unwrap();
        assert_eq!(plan.steps.len(), 3);

        let v = DenseMatrix::random(m, 1, 5);
        let w = DenseMatrix::random(m, 1, 6);
        let q = as_scalar(v.expr().t() * diagmat(&a) * &w);
        assert_eq!(tags(&q), ["R7"]);
        assert_eq!(rewrite(&q).unwrap().steps.len(), 1);
    }

    #[test]
    fn own_transpose_is_syrk() {
        let a = DenseMatrix::random(4, 6, 1);
        let b = DenseMatrix::random(6, 4, 2);
        assert_eq!(tags(&(&a * a.expr().t())), ["R8"]);
        assert_eq!(tags(&(a.expr().t() * &a)), ["R8"]);
        assert!(tags(&(&a * &b)).is_empty());
    }

    #[test]
    fn solver_ladder() {
        let n = 8;
        let mut tri = DenseMatrix::zeros(n, n);
        for i in 0..n {
            tri.set(i, i, 4.0);
            if i + 1 < n {
                tri.set(i, i + 1, 1.0);
                tri.set(i + 1, i, 1.0);
            }
        }
        let b = DenseMatrix::random(n, 1, 3);
        assert_eq!(tags(&solve(&tri, &b)), ["R10:BAND"]);
        assert_eq!(tags(&(inv(&tri) * &b)), ["R9", "R10:BAND"]);

        let mut upper = DenseMatrix::random(n, n, 4);
        for j in 0..n {
            upper.set(j, j, upper.get(j, j) + n as f64);
            for i in j + 1..n {
                upper.set(i, j, 0.0);
            }
        }
        assert_eq!(tags(&solve(&upper, &b)), ["R10:TRIU"]);
        assert_eq!(tags(&solve(upper.expr().t(), &b)), ["R10:TRIL"]);

        let g = DenseMatrix::random(n, n, 5);
        assert_eq!(tags(&solve(&g, &b)), ["R10:LU"]);
        let s = g.expr() + g.expr().t();
        let sym = crate::evaluate(&s, &mut crate::Collector::new())
            .unwrap()
            .into_matrix()
            .unwrap();
        assert_eq!(tags(&solve(&sym, &b)), ["R10:SYM-DETECTED"]);
        assert_eq!(tags(&solve(&g * g.expr().t(), &b)), ["R8", "R10:RUNTIME"]);
    }
}
