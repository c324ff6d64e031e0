//! Benchmark harness for the ten reference expressions.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use crate::error::Error;
use crate::expr::{as_scalar, diagmat, inv, solve, trace, Expr};
use crate::matrix::DenseMatrix;
use crate::naive::naive_evaluate;
use crate::plan::Value;
use crate::trace::Collector;

pub const EXPRESSION_IDS: std::ops::RangeInclusive<usize> = 1..=10;

/// Source form of each expression, indexed by id - 1.
pub const EXPRESSION_FORMS: [&str; 10] = [
    "0.4*A + 0.6*B",
    "A.col(1) + B.row(2).t()",
    "diagmat(A) * B",
    "diagmat(A * B)",
    "trace(A * B)",
    "A * B * C * D",
    "as_scalar(a.t() * diagmat(B) * c)",
    "A * A.t()",
    "inv(A) * b",
    "solve(A, b)",
];

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("expression {expr_id} at size {size}: naive and optimised results differ (relative error {error:e})")]
    Mismatch {
        expr_id: usize,
        size: usize,
        error: f64,
    },
    #[error(transparent)]
    Eval(#[from] Error),
}

impl BenchError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Usage(_) => 2,
            BenchError::Mismatch { .. } => 3,
            BenchError::Eval(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Naive,
    Optimised,
    Both,
}

impl Mode {
    fn arms(self) -> &'static [Mode] {
        match self {
            Mode::Naive => &[Mode::Naive],
            Mode::Optimised => &[Mode::Optimised],
            Mode::Both => &[Mode::Naive, Mode::Optimised],
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(Mode::Naive),
            "optimised" | "optimized" => Ok(Mode::Optimised),
            "both" => Ok(Mode::Both),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Naive => "naive",
            Mode::Optimised => "optimised",
            Mode::Both => "both",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub expr_id: usize,
    pub size: usize,
    pub mode: Mode,
    pub mean_seconds: f64,
    pub flops: u64,
    pub allocations: u64,
    pub runs: usize,
}

/// Operands of one expression instance. The tree borrows from this.
#[derive(Debug, Clone)]
pub struct BenchCase {
    pub expr_id: usize,
    pub size: usize,
    pub operands: Vec<DenseMatrix>,
}

impl BenchCase {
    /// Build the expression tree over the stored operands.
    pub fn expr(&self) -> Expr<'_> {
        let o = &self.operands;
        match self.expr_id {
            1 => 0.4 * &o[0] + 0.6 * &o[1],
            2 => o[0].expr().col(1) + o[1].expr().row(2).t(),
            3 => diagmat(&o[0]) * &o[1],
            4 => diagmat(&o[0] * &o[1]),
            5 => trace(&o[0] * &o[1]),
            6 => &o[0] * &o[1] * &o[2] * &o[3],
            7 => as_scalar(o[0].expr().t() * diagmat(&o[1]) * &o[2]),
            8 => &o[0] * o[0].expr().t(),
            9 => inv(&o[0]) * &o[1],
            10 => solve(&o[0], &o[1]),
            _ => unreachable!("expression id checked on construction"),
        }
    }

    /// Tolerance for comparing the two arms.
    pub fn tolerance(&self) -> f64 {
        tolerance(self.expr_id)
    }
}

pub fn tolerance(expr_id: usize) -> f64 {
    if expr_id >= 9 {
        1e-8
    } else {
        1e-12
    }
}

/// Deterministic operands for expression `expr_id` at size `m`.
pub fn build_expression(expr_id: usize, m: usize, seed: u64) -> Result<BenchCase, BenchError> {
    if !EXPRESSION_IDS.contains(&expr_id) {
        return Err(BenchError::Usage(format!(
            "unknown expression {expr_id}; expected 1..=10"
        )));
    }
    if m < 4 {
        return Err(BenchError::Usage(format!("size {m} below the minimum of 4")));
    }
    let base = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(expr_id as u64);
    let rand = |k: u64, r: usize, c: usize| DenseMatrix::random(r, c, base.wrapping_add(k << 32));
    let operands = match expr_id {
        1..=5 => vec![rand(0, m, m), rand(1, m, m)],
        6 => vec![
            rand(0, m, m),
            rand(1, m, m / 2),
            rand(2, m / 2, m / 3),
            rand(3, m / 3, m / 4),
        ],
        7 => vec![rand(0, m, 1), rand(1, m, m), rand(2, m, 1)],
        8 => vec![rand(0, m, m)],
        9 => {
            let mut a = rand(0, m, m);
            for i in 0..m {
                a.set(i, i, a.get(i, i) + m as f64);
            }
            vec![a, rand(1, m, 1)]
        }
        10 => vec![tridiagonal(m, rand(0, m, 3)), rand(1, m, 1)],
        _ => unreachable!(),
    };
    Ok(BenchCase {
        expr_id,
        size: m,
        operands,
    })
}

/// Tridiagonal matrix from three columns of random values, with 2m added on the diagonal.
fn tridiagonal(m: usize, values: DenseMatrix) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(m, m);
    for i in 0..m {
        a.set(i, i, values.get(i, 1) + 2.0 * m as f64);
        if i + 1 < m {
            a.set(i + 1, i, values.get(i, 0));
            a.set(i, i + 1, values.get(i, 2));
        }
    }
    a
}

/// Largest elementwise relative difference `|x - y| / max(|x|, |y|)`.
pub fn max_relative_error(x: &Value, y: &Value) -> f64 {
    let (a, b) = (x.values(), y.values());
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(&b)
        .map(|(&p, &q)| {
            let scale = p.abs().max(q.abs());
            if p == q {
                0.0
            } else if scale == 0.0 || !scale.is_finite() {
                f64::INFINITY
            } else {
                (p - q).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

fn run_once(case: &BenchCase, mode: Mode, c: &mut Collector) -> Result<Value, Error> {
    let e = case.expr();
    match mode {
        Mode::Naive => naive_evaluate(&e, c),
        _ => crate::evaluate(&e, c),
    }
}

fn time_arm(case: &BenchCase, mode: Mode, runs: usize) -> Result<f64, Error> {
    let mut c = Collector::new();
    let start = Instant::now();
    run_once(case, mode, &mut c)?;
    let warm = start.elapsed().as_secs_f64();
    let inner = if warm < 1e-6 {
        (1e-5 / warm.max(1e-9)).ceil() as usize
    } else {
        1
    };
    let start = Instant::now();
    for _ in 0..runs {
        for _ in 0..inner {
            std::hint::black_box(run_once(std::hint::black_box(case), mode, &mut c)?);
        }
    }
    Ok(start.elapsed().as_secs_f64() / (runs * inner) as f64)
}

/// Time every requested expression, size and arm.
///
/// Both arms are evaluated and compared first; a mismatch aborts before any
/// timing is done. Counters come from one instrumented run per arm.
pub fn run_bench(
    expr_ids: &[usize],
    sizes: &[usize],
    runs: usize,
    seed: u64,
    mode: Mode,
) -> Result<Vec<BenchRecord>, BenchError> {
    if runs == 0 {
        return Err(BenchError::Usage("runs must be at least 1".into()));
    }
    let mut records = Vec::new();
    for &expr_id in expr_ids {
        for &size in sizes {
            let case = build_expression(expr_id, size, seed)?;
            let mut naive_c = Collector::new();
            let mut opt_c = Collector::new();
            let naive = run_once(&case, Mode::Naive, &mut naive_c)?;
            let optimised = run_once(&case, Mode::Optimised, &mut opt_c)?;
            let error = max_relative_error(&naive, &optimised);
            if error > case.tolerance() {
                return Err(BenchError::Mismatch {
                    expr_id,
                    size,
                    error,
                });
            }
            for &arm in mode.arms() {
                let counters = match arm {
                    Mode::Naive => naive_c.counters(),
                    _ => opt_c.counters(),
                };
                records.push(BenchRecord {
                    expr_id,
                    size,
                    mode: arm,
                    mean_seconds: time_arm(&case, arm, runs)?,
                    flops: counters.flops,
                    allocations: counters.allocations,
                    runs,
                });
            }
        }
    }
    Ok(records)
}

/// `1 - optimised / naive`, as a percentage with two decimals.
pub fn format_reduction(naive: Option<f64>, optimised: Option<f64>) -> String {
    match (naive, optimised) {
        (Some(n), Some(o)) if n > 0.0 => format!("{:.2}%", 100.0 * (1.0 - o / n)),
        _ => "n/a".to_string(),
    }
}

pub const CSV_HEADER: &str = "expr_id,size,mode,mean_seconds,flops,allocations,runs";

pub fn report(records: &[BenchRecord], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in records {
                let _ = writeln!(
                    out,
                    "{},{},{},{:e},{},{},{}",
                    r.expr_id, r.size, r.mode, r.mean_seconds, r.flops, r.allocations, r.runs
                );
            }
        }
        Format::Markdown => {
            let mut ids: Vec<usize> = records.iter().map(|r| r.expr_id).collect();
            ids.dedup();
            for (k, id) in ids.iter().enumerate() {
                if k > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "### ({id}) `{}`\n", EXPRESSION_FORMS[id - 1]);
                out.push_str("| size | naive (s) | optimised (s) | reduction |\n");
                out.push_str("|---:|---:|---:|---:|\n");
                let mut sizes: Vec<usize> = records
                    .iter()
                    .filter(|r| r.expr_id == *id)
                    .map(|r| r.size)
                    .collect();
                sizes.dedup();
                for size in sizes {
                    let time = |mode: Mode| {
                        records
                            .iter()
                            .find(|r| r.expr_id == *id && r.size == size && r.mode == mode)
                            .map(|r| r.mean_seconds)
                    };
                    let cell = |t: Option<f64>| t.map_or("n/a".to_string(), |t| format!("{t:.2e}"));
                    let (n, o) = (time(Mode::Naive), time(Mode::Optimised));
                    let _ = writeln!(
                        out,
                        "| {size} | {} | {} | {} |",
                        cell(n),
                        cell(o),
                        format_reduction(n, o)
                    );
                }
            }
        }
    }
    out
}

/// Parse `all` or a comma-separated list of expression ids.
pub fn parse_expr_ids(s: &str) -> Result<Vec<usize>, BenchError> {
    if s.trim() == "all" {
        return Ok(EXPRESSION_IDS.collect());
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .ok()
                .filter(|id| EXPRESSION_IDS.contains(id))
                .ok_or_else(|| BenchError::Usage(format!("bad expression id `{p}`")))
        })
        .collect()
}

pub fn parse_sizes(s: &str) -> Result<Vec<usize>, BenchError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .ok()
                .filter(|&m| m >= 4)
                .ok_or_else(|| BenchError::Usage(format!("bad size `{p}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(BenchError::Usage(String::new()).exit_code(), 2);
        let mismatch = BenchError::Mismatch {
            expr_id: 1,
            size: 4,
            error: 1.0,
        };
        assert_eq!(mismatch.exit_code(), 3);
    }

    #[test]
    fn reduction_text() {
        assert_eq!(format_reduction(Some(1e-4), Some(2.5e-5)), "75.00%");
        assert_eq!(format_reduction(Some(1e-4), None), "n/a");
    }

    #[test]
    fn unknown_id_is_usage_error() {
        assert!(matches!(build_expression(11, 10, 0), Err(BenchError::Usage(_))));
        assert!(matches!(build_expression(1, 3, 0), Err(BenchError::Usage(_))));
        assert!(matches!(parse_expr_ids("1,x"), Err(BenchError::Usage(_))));
        assert_eq!(parse_expr_ids("all").unwrap().len(), 10);
    }

    #[test]
    fn every_form_validates_at_smallest_size() {
        for id in EXPRESSION_IDS {
            let case = build_expression(id, 4, 7).unwrap();
            case.expr().validate().unwrap();
        }
    }

    #[test]
    fn first_form_renders() {
        let case = build_expression(1, 100, 1).unwrap();
        let (a, b) = (case.operands[0].id(), case.operands[1].id());
        assert_eq!(
            case.expr().to_string(),
            format!("Add(ScalarMul(0.4,Leaf#{a}),ScalarMul(0.6,Leaf#{b}))")
        );
    }

    #[test]
    fn csv_layout() {
        let rec = BenchRecord {
            expr_id: 1,
            size: 100,
            mode: Mode::Naive,
            mean_seconds: 1e-4,
            flops: 60000,
            allocations: 3,
            runs: 1,
        };
        let text = report(&[rec], Format::Csv);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("1,100,naive,1e-4,60000,3,1"));
    }

    #[test]
    fn markdown_missing_arm() {
        let rec = BenchRecord {
            expr_id: 3,
            size: 100,
            mode: Mode::Naive,
            mean_seconds: 1e-4,
            flops: 0,
            allocations: 0,
            runs: 1,
        };
        let text = report(&[rec], Format::Markdown);
        assert!(text.contains("| 100 | 1.00e-4 | n/a | n/a |"), "{text}");
    }
}
