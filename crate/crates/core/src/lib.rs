//! Dense linear algebra with delayed evaluation.
//!
//! Operator expressions build an [`Expr`] tree instead of computing anything.
//! [`evaluate`] rewrites the tree into a [`Plan`] of fused or specialised
//! kernel calls and runs it; [`naive_evaluate`] runs the tree literally and
//! serves as the reference.
//!
//! ```
//! use lazylin::{evaluate, naive_evaluate, Collector, DenseMatrix};
//!
//! let a = DenseMatrix::random(50, 50, 1);
//! let b = DenseMatrix::random(50, 50, 2);
//! let e = 0.4 * &a + 0.6 * &b;
//!
//! let mut fast = Collector::new();
//! let mut slow = Collector::new();
//! let x = evaluate(&e, &mut fast).unwrap();
//! let y = naive_evaluate(&e, &mut slow).unwrap();
//! assert_eq!(x, y);
//! assert_eq!(fast.counters().allocations, 1);
//! assert_eq!(slow.counters().allocations, 3);
//! ```

pub mod bench;
pub mod chain;
pub mod error;
pub mod expr;
pub mod kernels;
pub mod matrix;
pub mod naive;
pub mod plan;
pub mod rewrite;
pub mod trace;

pub use chain::{greedy_chain_order, ChainOrder};
pub use error::{Error, NodePath, Result};
pub use expr::{as_scalar, diagmat, inv, solve, t, trace, Expr, NodeKind, Shape};
pub use kernels::KernelId;
pub use matrix::{analyze_structure, DenseMatrix, Fill, MatrixId, MatrixView, StructureInfo, Window};
pub use naive::naive_evaluate;
pub use plan::{KernelCall, Operand, Plan, Solver, Source, Value};
pub use rewrite::{rewrite, Rule, RuleApplied};
pub use trace::{render_trace, with_trace, Collector, Counters, EventKind, TraceEvent, Traced};

/// Validate, rewrite and execute `expr`.
pub fn evaluate(expr: &Expr<'_>, c: &mut Collector) -> Result<Value> {
    rewrite(expr)?.execute(c)
}
